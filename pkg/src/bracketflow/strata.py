"""Stratum labels via the moment-map energy flow, and the beta-adapted splittings.

The label of a bracket is the sorted spectrum beta of the moment map at the
limit of the negative gradient flow of ||m||^2; it indexes the stratum of
the change-of-basis orbit.  From a canonical (diagonal, ascending) beta we
build the centralizer g_beta, the positive eigenspace u_beta of ad(beta),
the projection onto q_beta = g_beta + u_beta along {A - A^t : A in u_beta},
and the eigenspace grading of the bracket space under pi(beta + |beta|^2 I).
"""

from dataclasses import dataclass, field

import numpy as np

from .brackets import BracketTensor, act, pi_action
from .curvature import moment_map_fast
from .errors import MaxStepsExceeded, NonCanonicalBeta, ZeroBracket
from .linalg import orthonormal_basis

CRIT_TOL = 1e-9
MAX_FLOW_STEPS = 10**6
EIG_TOL = 1e-6
LABEL_TOL = 1e-6
GAUGE_TOL = 1e-8
_ARMIJO_C1 = 1e-4


def _criticality_direction(mu):
    """Sphere-tangential part of pi(m(mu))mu; vanishes exactly at critical points."""
    m = moment_map_fast(mu)
    g = pi_action(m, mu)
    radial = g.inner(mu) / mu.norm_sq
    tangent = g.coeffs - radial * mu.coeffs
    return m, tangent, float(np.linalg.norm(tangent))


def energy_gradient_flow(mu0, crit_tol=CRIT_TOL, max_steps=MAX_FLOW_STEPS, history=None):
    """Run the negative gradient flow of the moment-map energy from mu0.

    Steps are projected gradient descent on the sphere ||mu|| = ||mu0|| with
    Armijo backtracking; the energy ||m||^2 is scale invariant, so the sphere
    restriction loses nothing.  Returns (limit bracket, criticality residual).
    A list passed as `history` collects the energy after every accepted step.
    """
    if mu0.is_zero:
        raise ZeroBracket("the energy flow needs a nonzero starting bracket")
    radius = mu0.norm
    coeffs = mu0.coeffs.copy()
    mu = BracketTensor(coeffs)
    m, tangent, resid = _criticality_direction(mu)
    energy = float(np.sum(m * m))
    if history is not None:
        history.append(energy)
    step = 0.1 / max(1.0, energy)
    for _ in range(max_steps):
        if resid <= crit_tol:
            return mu, resid
        # Armijo backtracking along the negative sphere gradient.  Near a
        # degenerate critical point the predicted energy decrease per step is
        # of order residual^2 and falls below machine epsilon; in that regime
        # accept on a measurable residual decrease instead.
        slope = 4.0 * resid**2 / mu.norm_sq
        accepted = False
        while step > 1e-18:
            trial_c = mu.coeffs - step * tangent
            trial_c *= radius / np.linalg.norm(trial_c)
            trial = BracketTensor(trial_c)
            m_t, tangent_t, resid_t = _criticality_direction(trial)
            energy_t = float(np.sum(m_t * m_t))
            decrease = _ARMIJO_C1 * step * slope
            roundoff_regime = decrease < 8.0 * np.finfo(float).eps * max(energy, 1.0)
            ok = energy_t <= energy - decrease or (
                roundoff_regime
                and energy_t <= energy + 4.0 * np.finfo(float).eps * max(energy, 1.0)
                and resid_t <= resid * (1.0 - 1e-7)
            )
            if ok:
                mu, m, tangent, resid, energy = trial, m_t, tangent_t, resid_t, energy_t
                if history is not None:
                    history.append(energy)
                step *= 2.0
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    if resid <= crit_tol:
        return mu, resid
    raise MaxStepsExceeded(
        f"energy flow stalled at residual {resid:.3e}", result=mu, residual=resid
    )


@dataclass
class StratumLabel:
    """Canonical stratum data: diagonal beta with ascending eigenvalues."""

    eigenvalues: np.ndarray
    critical_bracket: BracketTensor
    residual: float
    ad_spectrum: list = field(default_factory=list)
    v_spectrum: list = field(default_factory=list)

    @property
    def dim(self):
        return self.eigenvalues.size

    @property
    def beta(self):
        return np.diag(self.eigenvalues)

    @property
    def norm_sq(self):
        return float(np.sum(self.eigenvalues**2))

    @property
    def beta_plus(self):
        return np.diag(self.eigenvalues + self.norm_sq)

    def to_dict(self):
        return {
            "beta_eigenvalues": self.eigenvalues.tolist(),
            "beta_norm_sq": self.norm_sq,
            "residual": self.residual,
            "ad_spectrum": [[v, m] for v, m in self.ad_spectrum],
            "v_spectrum": [[v, m] for v, m in self.v_spectrum],
            "label_tol": LABEL_TOL,
        }


def _clustered(values, tol=EIG_TOL):
    out = []
    for v in np.sort(values):
        if out and abs(v - out[-1][0]) <= tol:
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return [(v, m) for v, m in out]


def label_from_beta(eigenvalues, critical_bracket=None, residual=0.0):
    """Build a StratumLabel from known (sorted ascending) beta eigenvalues."""
    b = np.sort(np.asarray(eigenvalues, dtype=float))
    bp = b + float(np.sum(b * b))
    ad_eigs = (b[:, None] - b[None, :]).ravel()
    n = b.size
    v_eigs = [
        bp[k] - bp[i] - bp[j]
        for i in range(n)
        for j in range(i + 1, n)
        for k in range(n)
    ]
    if critical_bracket is None:
        critical_bracket = BracketTensor.zero(n)
    return StratumLabel(
        eigenvalues=b,
        critical_bracket=critical_bracket,
        residual=float(residual),
        ad_spectrum=_clustered(ad_eigs),
        v_spectrum=_clustered(np.asarray(v_eigs)),
    )


def _cluster_snap(values, tol=EIG_TOL):
    """Replace eigenvalue clusters (within tol) by their means."""
    w = np.sort(np.asarray(values, dtype=float))
    out = w.copy()
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or w[i] - w[i - 1] > tol:
            out[start:i] = np.mean(w[start:i])
            start = i
    return out


def stratum_label(mu0, crit_tol=CRIT_TOL, max_steps=MAX_FLOW_STEPS):
    """Stratum label of mu0: run the energy flow, then canonicalize.

    The moment map at the limit is conjugated to sorted-diagonal form by an
    orthogonal change of basis, which is applied to the limit bracket as
    well.  Eigenvalues closer than the clustering tolerance are snapped to
    their cluster mean, so nearly-degenerate labels come out exact.
    """
    mu_c, resid = energy_gradient_flow(mu0, crit_tol, max_steps)
    m = moment_map_fast(mu_c)
    w, v = np.linalg.eigh(m)
    canonical = act(v.T, mu_c)
    return label_from_beta(_cluster_snap(w), canonical, resid)


def same_label(label_a, label_b, tol=LABEL_TOL):
    if label_a.dim != label_b.dim:
        return False
    return bool(np.all(np.abs(label_a.eigenvalues - label_b.eigenvalues) <= tol))


def _require_canonical(label):
    b = label.eigenvalues
    if np.any(np.diff(b) < -EIG_TOL):
        raise NonCanonicalBeta("beta eigenvalues must be sorted ascending")


@dataclass
class BetaDecomposition:
    """Splittings of gl(s) and the bracket space adapted to a canonical beta."""

    label: StratumLabel
    mask_g: np.ndarray
    mask_u: np.ndarray
    mask_ut: np.ndarray
    g_basis: list
    u_basis: list
    k_u_basis: list
    h_basis: list
    sl_basis: list
    v_weights: np.ndarray
    v_levels: list

    @property
    def dim(self):
        return self.label.dim


def beta_decomposition(label):
    """Build g_beta, u_beta, k_{u_beta}, h_beta, sl_beta and the V-grading."""
    _require_canonical(label)
    b = label.eigenvalues
    n = b.size
    gaps = b[:, None] - b[None, :]
    mask_g = np.abs(gaps) <= EIG_TOL
    mask_u = gaps > EIG_TOL
    mask_ut = gaps < -EIG_TOL

    def unit(i, j):
        e = np.zeros((n, n))
        e[i, j] = 1.0
        return e

    g_basis, u_basis, k_u_basis = [], [], []
    offdiag_g = []
    for i in range(n):
        for j in range(n):
            if mask_u[i, j]:
                u_basis.append(unit(i, j))
                k_u_basis.append((unit(i, j) - unit(j, i)) / np.sqrt(2.0))
            elif mask_g[i, j]:
                g_basis.append(unit(i, j))
                if i != j:
                    offdiag_g.append(unit(i, j))
    # Diagonal part of h_beta: diagonals orthogonal to beta (tr beta = -1 != 0).
    diag_complement = orthonormal_basis(
        (np.eye(n) - np.outer(b, b) / float(b @ b)).T
    )
    h_basis = list(offdiag_g)
    for i in range(diag_complement.shape[1]):
        h_basis.append(np.diag(diag_complement[:, i]))
    sl_basis = h_basis + u_basis

    bp = b + label.norm_sq
    v_weights = bp[None, None, :] - bp[:, None, None] - bp[None, :, None]
    # Cluster the weights into eigenvalue levels; clusters are > EIG_TOL apart.
    sorted_w = np.sort(v_weights.ravel())
    clusters = [[sorted_w[0]]]
    for w in sorted_w[1:]:
        if w - clusters[-1][-1] <= EIG_TOL:
            clusters[-1].append(w)
        else:
            clusters.append([w])
    eps = EIG_TOL / 4.0
    levels = [
        (float(np.mean(cl)), (v_weights >= cl[0] - eps) & (v_weights <= cl[-1] + eps))
        for cl in clusters
    ]
    return BetaDecomposition(
        label=label,
        mask_g=mask_g,
        mask_u=mask_u,
        mask_ut=mask_ut,
        g_basis=g_basis,
        u_basis=u_basis,
        k_u_basis=k_u_basis,
        h_basis=h_basis,
        sl_basis=sl_basis,
        v_weights=v_weights,
        v_levels=levels,
    )


def project_qbeta(a, dec):
    """Projection onto q_beta = g_beta + u_beta along {A - A^t : A in u_beta}.

    For symmetric input this is A_g + 2 A_u, with norm between ||A|| and 2||A||.
    """
    a = np.asarray(a, dtype=float)
    return a * dec.mask_g + a * dec.mask_u + (a * dec.mask_ut).T


@dataclass
class GaugeCheck:
    in_nonneg: bool
    v0_norm: float
    neg_norm: float

    def to_dict(self):
        return {
            "in_nonneg": self.in_nonneg,
            "v0_norm": self.v0_norm,
            "neg_norm": self.neg_norm,
        }


def check_gauged(mu, label):
    """Decompose mu under the pi(beta+) grading and test V_{>=0} membership."""
    _require_canonical(label)
    b = label.eigenvalues
    bp = b + label.norm_sq
    w = bp[None, None, :] - bp[:, None, None] - bp[None, :, None]
    c = mu.coeffs
    neg = np.where(w < -EIG_TOL, c, 0.0)
    zero = np.where(np.abs(w) <= EIG_TOL, c, 0.0)
    neg_norm = float(np.linalg.norm(neg))
    v0_norm = float(np.linalg.norm(zero))
    return GaugeCheck(neg_norm <= GAUGE_TOL * max(mu.norm, 1e-300), v0_norm, neg_norm)


def grading_components(mu, dec):
    """Norm of each pi(beta+)-eigencomponent of mu, keyed by eigenvalue."""
    c = mu.coeffs
    return [(w, float(np.linalg.norm(np.where(mask, c, 0.0)))) for w, mask in dec.v_levels]
