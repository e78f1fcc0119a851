"""Structure-constant tensors, the change-of-basis action, and algebraic queries.

A bracket on an n-dimensional Euclidean space is stored as the dense
antisymmetric tensor c[i, j, k] with mu(e_i, e_j) = sum_k c[i, j, k] e_k.
The inner product of two brackets sums the products of coefficients over
ALL ordered pairs (i, j) and all k; with this pair-counting convention the
3-dimensional Heisenberg bracket mu(e1, e2) = e3 has squared norm 2, and
the normalized moment map has trace exactly -1.
"""

import json

import numpy as np

from .errors import NotALieBracket, NotSolvable, SingularGauge
from .linalg import RANK_TOL, null_space, orthonormal_basis

DIM_CAP = 16
NILP_TOL = 1e-8
JSON_COEFF_FLOOR = 1e-14

# Canonical pairing of brackets: sum coefficient products over ALL ordered
# index pairs (i, j) and every k.  Norms, adjoints, and the trace -1
# normalization of the moment map all assume this convention.
INNER_PRODUCT_CONVENTION = "ordered-pairs"


def jacobi_tolerance(mu):
    """Residual threshold below which a bracket counts as a Lie bracket."""
    return 1e-10 * (1.0 + mu.norm_sq)


class BracketTensor:
    """Immutable antisymmetric structure-constant tensor."""

    __slots__ = ("dim", "coeffs", "_jacobi")

    def __init__(self, coeffs, antisymmetrize=False):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ValueError(f"expected an (n, n, n) array, got shape {c.shape}")
        n = c.shape[0]
        if n < 1 or n > DIM_CAP:
            raise ValueError(f"dimension {n} outside the supported range 1..{DIM_CAP}")
        if not np.all(np.isfinite(c)):
            raise ValueError("structure constants must be finite")
        asym = np.max(np.abs(c + np.swapaxes(c, 0, 1)))
        if asym > 0.0:
            if not antisymmetrize and asym > 1e-12 * (1.0 + np.max(np.abs(c))):
                raise ValueError(
                    f"coefficients are not antisymmetric (defect {asym:.3e}); "
                    "pass antisymmetrize=True to project"
                )
            c = 0.5 * (c - np.swapaxes(c, 0, 1))
        c.flags.writeable = False
        self.dim = n
        self.coeffs = c
        self._jacobi = None

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros((dim, dim, dim)))

    @classmethod
    def from_entries(cls, dim, entries, one_based=True):
        """Build from (i, j, k, value) tuples with i < j; antisymmetry is filled in."""
        c = np.zeros((dim, dim, dim))
        off = 1 if one_based else 0
        for i, j, k, v in entries:
            i, j, k = i - off, j - off, k - off
            if not (0 <= i < j < dim and 0 <= k < dim):
                raise ValueError(f"entry ({i + off},{j + off},{k + off}) out of range")
            c[i, j, k] += v
            c[j, i, k] -= v
        return cls(c)

    @property
    def norm_sq(self):
        return float(np.sum(self.coeffs * self.coeffs))

    @property
    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    @property
    def is_zero(self):
        return not np.any(self.coeffs)

    def inner(self, other):
        return float(np.sum(self.coeffs * other.coeffs))

    def scaled(self, factor):
        return BracketTensor(float(factor) * self.coeffs)

    def apply(self, x, y):
        """Evaluate mu(x, y) on coordinate vectors."""
        return np.einsum("i,j,ijk->k", x, y, self.coeffs)

    def jacobi_residual(self):
        if self._jacobi is None:
            self._jacobi = jacobi_residual(self)
        return self._jacobi

    @property
    def is_lie(self):
        return self.jacobi_residual() <= jacobi_tolerance(self)

    def __repr__(self):
        return f"BracketTensor(dim={self.dim}, norm={self.norm:.6g})"


def jacobi_residual(mu):
    """Norm of the cyclic sum mu(mu(x,y),z) + mu(mu(y,z),x) + mu(mu(z,x),y).

    Evaluated over all basis triples; zero exactly when mu is a Lie bracket.
    """
    c = mu.coeffs
    t = np.einsum("xyk,kzw->xyzw", c, c)
    cyc = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
    return float(np.linalg.norm(cyc))


def ensure_lie(mu):
    res = mu.jacobi_residual()
    if res > jacobi_tolerance(mu):
        raise NotALieBracket(f"Jacobi residual {res:.3e} exceeds tolerance")


def singular_tolerance(h):
    n = h.shape[0]
    return 1e-12 * np.linalg.norm(h, 2) ** n


def act(h, mu):
    """Change-of-basis action (h.mu)(x, y) = h mu(h^-1 x, h^-1 y)."""
    h = np.asarray(h, dtype=float)
    if abs(np.linalg.det(h)) <= singular_tolerance(h):
        raise SingularGauge(f"|det h| = {abs(np.linalg.det(h)):.3e} below tolerance")
    hinv = np.linalg.inv(h)
    c = np.einsum("ai,bj,kc,abc->ijk", hinv, hinv, h, mu.coeffs, optimize=True)
    return BracketTensor(c, antisymmetrize=True)


def pi_action(a, mu):
    """Infinitesimal action (pi(A)mu)(x, y) = A mu(x,y) - mu(Ax,y) - mu(x,Ay)."""
    a = np.asarray(a, dtype=float)
    c = mu.coeffs
    out = (
        np.einsum("kc,ijc->ijk", a, c)
        - np.einsum("ai,ajk->ijk", a, c)
        - np.einsum("bj,ibk->ijk", a, c)
    )
    return BracketTensor(out)


def ad_map(mu, x):
    """Adjoint map ad(X): Y -> mu(X, Y) as an n x n matrix."""
    return np.einsum("i,ijk->kj", np.asarray(x, dtype=float), mu.coeffs)


def all_ad_maps(mu):
    """Stack of the adjoint maps of the basis vectors, shape (n, n, n)."""
    return np.transpose(mu.coeffs, (0, 2, 1))


def _pairwise_products(mu, basis_a, basis_b):
    """Vectors mu(a_i, b_j) for all columns of the two bases."""
    if basis_a.shape[1] == 0 or basis_b.shape[1] == 0:
        return np.zeros((0, mu.dim))
    prods = np.einsum("ia,jb,ijk->abk", basis_a, basis_b, mu.coeffs)
    return prods.reshape(-1, mu.dim)


def _span_floor(mu):
    """Absolute singular-value floor for rank decisions on product spans.

    Products of numerically-degenerate subspaces carry roundoff noise of
    order eps * ||mu||; a purely relative cut would promote it to rank.
    """
    return RANK_TOL * max(mu.norm, 1e-300)


def derived_series(mu):
    """Dimensions [n, dim g', dim g'', ...] until the series vanishes or stalls."""
    ensure_lie(mu)
    dims = [mu.dim]
    basis = np.eye(mu.dim)
    while dims[-1] > 0:
        span = orthonormal_basis(_pairwise_products(mu, basis, basis), floor=_span_floor(mu))
        dims.append(span.shape[1])
        if span.shape[1] >= dims[-2]:
            break
        basis = span
    return dims


def lower_central_series(mu):
    """Dimensions of the lower central series g >= [g,g] >= [g,[g,g]] >= ..."""
    ensure_lie(mu)
    dims = [mu.dim]
    full = np.eye(mu.dim)
    basis = full
    while dims[-1] > 0:
        span = orthonormal_basis(_pairwise_products(mu, full, basis), floor=_span_floor(mu))
        dims.append(span.shape[1])
        if span.shape[1] >= dims[-2]:
            break
        basis = span
    return dims


def is_solvable(mu):
    return derived_series(mu)[-1] == 0


def is_nilpotent(mu):
    return lower_central_series(mu)[-1] == 0


def is_nilpotent_matrix(a, tol=NILP_TOL, floor=0.0):
    """Nilpotency test by the n-th power norm, robust for defective matrices.

    Matrices with norm at or below `floor` count as (roundoff) zero; without
    a floor the cubed-norm threshold underflows faster than cubed noise.
    """
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a, 2)
    if norm <= floor:
        return True
    return np.linalg.norm(np.linalg.matrix_power(a, a.shape[0]), 2) <= tol * norm ** a.shape[0]


def _eigenvalue_energy(mu, x):
    """Sum of squared moduli of the eigenvalues of ad(x).

    For a solvable bracket the eigenvalues are values of fixed linear
    functionals (the roots), so this is an exact positive semidefinite
    quadratic form in x.
    """
    return float(np.sum(np.abs(np.linalg.eigvals(ad_map(mu, x))) ** 2))


def nilradical(mu):
    """Nilradical of a solvable bracket as {X : ad(X) nilpotent}.

    Returns (n_basis, a_basis, rank) where the columns of n_basis span the
    nilradical, a_basis spans the orthogonal complement, and rank = dim a.
    """
    if not is_solvable(mu):
        raise NotSolvable("nilradical computation requires a solvable bracket")
    n = mu.dim
    derived = orthonormal_basis(
        _pairwise_products(mu, np.eye(n), np.eye(n)), floor=_span_floor(mu)
    )
    comp = null_space(derived.T) if derived.shape[1] else np.eye(n)
    r = comp.shape[1]
    if r:
        # Gram matrix of the root-energy form on the complement, by polarization.
        diag = np.array([_eigenvalue_energy(mu, comp[:, i]) for i in range(r)])
        gram = np.diag(diag)
        for i in range(r):
            for j in range(i + 1, r):
                q_sum = _eigenvalue_energy(mu, comp[:, i] + comp[:, j])
                gram[i, j] = gram[j, i] = 0.5 * (q_sum - diag[i] - diag[j])
        w, v = np.linalg.eigh(gram)
        scale = max(1.0, float(np.max(np.abs(w))))
        kernel = comp @ v[:, np.abs(w) <= NILP_TOL * scale]
    else:
        kernel = np.zeros((n, 0))
    n_basis = orthonormal_basis(np.hstack([derived, kernel]).T, floor=1e-10)
    ad_floor = 1e-12 * (1.0 + mu.norm)
    for i in range(n_basis.shape[1]):
        if not is_nilpotent_matrix(ad_map(mu, n_basis[:, i]), floor=ad_floor):
            raise NotSolvable("computed nilradical candidate has non-nilpotent ad")
    a_basis = null_space(n_basis.T) if n_basis.shape[1] else np.eye(n)
    # Ideal check: mu(g, n) must land back in n.
    if n_basis.shape[1]:
        prods = _pairwise_products(mu, np.eye(n), n_basis)
        resid = prods - (prods @ n_basis) @ n_basis.T
        if np.linalg.norm(resid) > RANK_TOL * (1.0 + mu.norm):
            raise NotSolvable("nilradical candidate is not an ideal")
    return n_basis, a_basis, a_basis.shape[1]


def pi_matrix(a, dim):
    """Matrix of pi(A) acting on flattened (n^3) bracket tensors."""
    a = np.asarray(a, dtype=float)
    eye = np.eye(dim)
    term1 = np.einsum("ia,jb,kc->ijkabc", eye, eye, a)
    term2 = np.einsum("ai,jb,kc->ijkabc", a, eye, eye)
    term3 = np.einsum("ia,bj,kc->ijkabc", eye, a, eye)
    return (term1 - term2 - term3).reshape(dim**3, dim**3)


def derivation_matrix(mu):
    """Matrix of A -> pi(A)mu from flattened gl(n) to flattened brackets."""
    n = mu.dim
    cols = np.zeros((n**3, n * n))
    basis = np.zeros((n, n))
    for p in range(n):
        for q in range(n):
            basis[p, q] = 1.0
            cols[:, p * n + q] = pi_action(basis, mu).coeffs.ravel()
            basis[p, q] = 0.0
    return cols


def derivation_space(mu):
    """Orthonormal basis of the derivation algebra {A : pi(A)mu = 0}.

    Returned as a list of n x n matrices; every element satisfies
    ||pi(A)mu|| <= RANK_TOL relative to the operator scale.
    """
    ker = null_space(derivation_matrix(mu), RANK_TOL)
    n = mu.dim
    return [ker[:, i].reshape(n, n) for i in range(ker.shape[1])]


def bracket_to_dict(mu):
    """Wire format: 1-based entries with i < j and |v| above the floor."""
    entries = []
    c = mu.coeffs
    n = mu.dim
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                v = c[i, j, k]
                if abs(v) > JSON_COEFF_FLOOR:
                    entries.append({"i": i + 1, "j": j + 1, "k": k + 1, "v": v})
    return {"dim": n, "entries": entries}


def bracket_from_dict(data):
    dim = int(data["dim"])
    entries = []
    for e in data["entries"]:
        i, j, k, v = int(e["i"]), int(e["j"]), int(e["k"]), float(e["v"])
        if not (1 <= i < j <= dim):
            raise ValueError(f"entry ({i},{j},{k}) must have 1 <= i < j <= dim")
        entries.append((i, j, k, v))
    return BracketTensor.from_entries(dim, entries)


def save_bracket(path, mu):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bracket_to_dict(mu), fh, indent=2)
        fh.write("\n")


def load_bracket(path):
    with open(path, encoding="utf-8") as fh:
        return bracket_from_dict(json.load(fh))
