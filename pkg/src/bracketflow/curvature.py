"""Closed-form curvature of the left-invariant metric attached to a bracket.

All quantities are endomorphisms in the fixed orthonormal basis: the
moment-map part M, the Killing form K, the mean-curvature vector H, the
Ricci endomorphism Ric = M - K/2 - sym(ad H), and the modified Ricci
Ric* = M - K/2 together with its trace scal*.
"""

from dataclasses import dataclass

import numpy as np

from .brackets import ad_map, all_ad_maps, ensure_lie, pi_action
from .errors import ZeroBracket

SYM_TOL = 1e-10


def moment_part(mu):
    """The endomorphism M with tr M = -||mu||^2 / 4, assembled componentwise."""
    c = mu.coeffs
    return -0.5 * np.einsum("pij,qij->pq", c, c) + 0.25 * np.einsum("ijp,ijq->pq", c, c)


def moment_map(mu):
    """Normalized moment map m(mu), defined against the symmetric basis.

    <m(mu), A> = <pi(A)mu, mu> / ||mu||^2 for every symmetric A; trace -1,
    invariant under scaling of mu, and O(n)-equivariant.
    """
    if mu.is_zero:
        raise ZeroBracket("moment map is undefined at the zero bracket")
    n = mu.dim
    nsq = mu.norm_sq
    m = np.zeros((n, n))
    e = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            e[a, b] += 1.0
            e[b, a] += 1.0
            pairing = pi_action(e, mu).inner(mu) / nsq
            e[a, b] = e[b, a] = 0.0
            if a == b:
                m[a, a] = 0.5 * pairing
            else:
                m[a, b] = m[b, a] = 0.5 * pairing
    return m


def moment_map_fast(mu):
    """m(mu) = 4 M / ||mu||^2; cheap route used by the gradient flow."""
    if mu.is_zero:
        raise ZeroBracket("moment map is undefined at the zero bracket")
    return 4.0 * moment_part(mu) / mu.norm_sq


def killing_matrix(mu):
    """Killing-form endomorphism: <K X, Y> = tr(ad X ad Y)."""
    ads = all_ad_maps(mu)
    return np.einsum("pij,qji->pq", ads, ads)


def mean_curvature(mu):
    """Vector H with <H, X> = tr ad X."""
    return np.einsum("pjj->p", mu.coeffs)


@dataclass(frozen=True)
class CurvaturePack:
    """All Ricci-level curvature data of one bracket."""

    M: np.ndarray
    K: np.ndarray
    H: np.ndarray
    Ric: np.ndarray
    RicStar: np.ndarray
    scal: float
    scalStar: float
    normSq: float

    def to_dict(self):
        return {
            "M": self.M.tolist(),
            "K": self.K.tolist(),
            "H": self.H.tolist(),
            "Ric": self.Ric.tolist(),
            "RicStar": self.RicStar.tolist(),
            "scal": self.scal,
            "scalStar": self.scalStar,
            "normSq": self.normSq,
        }


def curvature_parts(mu):
    """(M, K, H, Ric, RicStar) without any validity checks; formula only."""
    m_part = moment_part(mu)
    k = killing_matrix(mu)
    h = mean_curvature(mu)
    ric_star = m_part - 0.5 * k
    ad_h = ad_map(mu, h)
    ric = ric_star - 0.5 * (ad_h + ad_h.T)
    return m_part, k, h, ric, ric_star


def curvature_pack(mu):
    """Curvature data of a Lie bracket; the zero bracket yields the flat pack."""
    n = mu.dim
    if mu.is_zero:
        z = np.zeros((n, n))
        return CurvaturePack(z, z.copy(), np.zeros(n), z.copy(), z.copy(), 0.0, 0.0, 0.0)
    ensure_lie(mu)
    m_part, k, h, ric, ric_star = curvature_parts(mu)
    return CurvaturePack(
        M=m_part,
        K=k,
        H=h,
        Ric=ric,
        RicStar=ric_star,
        scal=float(np.trace(ric)),
        scalStar=float(np.trace(ric_star)),
        normSq=mu.norm_sq,
    )


def ricci(mu):
    if mu.is_zero:
        return np.zeros((mu.dim, mu.dim))
    ensure_lie(mu)
    return curvature_parts(mu)[3]


def ricci_star(mu):
    if mu.is_zero:
        return np.zeros((mu.dim, mu.dim))
    return curvature_parts(mu)[4]


def scal_star(mu):
    return float(np.trace(ricci_star(mu)))


def oracle_ricci(mu):
    """Ricci endomorphism from the Koszul formula; used only as a test oracle.

    Builds the Levi-Civita connection coefficients
    Gamma[i,j,k] = (c[i,j,k] - c[j,k,i] + c[k,i,j]) / 2 on the orthonormal
    basis and contracts the curvature tensor directly, independently of the
    moment-map / Killing-form route.
    """
    if mu.is_zero:
        return np.zeros((mu.dim, mu.dim))
    ensure_lie(mu)
    c = mu.coeffs
    # transpose axes chosen so gamma[i,j,k] = (c[i,j,k] - c[j,k,i] + c[k,i,j]) / 2
    gamma = 0.5 * (c - np.transpose(c, (2, 0, 1)) + np.transpose(c, (1, 2, 0)))
    term1 = np.einsum("bcm,ama->bc", gamma, gamma)
    term2 = np.einsum("acm,bma->bc", gamma, gamma)
    term3 = np.einsum("abm,mca->bc", c, gamma)
    ric = term1 - term2 - term3
    asym = np.max(np.abs(ric - ric.T))
    if asym > 1e-9 * (1.0 + mu.norm_sq):
        raise AssertionError(f"Koszul Ricci came out asymmetric by {asym:.3e}")
    return 0.5 * (ric + ric.T)


def scalstar_first_variation(mu, a):
    """First variation of scal* along exp(tA).mu at t = 0: equals -2 <Ric*, A>."""
    return -2.0 * float(np.sum(ricci_star(mu) * np.asarray(a, dtype=float)))
