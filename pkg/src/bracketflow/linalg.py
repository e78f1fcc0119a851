"""Small dense linear-algebra utilities used across the package."""

import numpy as np

from .errors import NotPositiveDefinite

RANK_TOL = 1e-8


def orthonormal_basis(vectors, rtol=RANK_TOL, floor=0.0):
    """Orthonormal basis (columns) of the span of the given row vectors.

    Rank is decided by singular values relative to the largest one; `floor`
    additionally discards singular values below an absolute scale (useful
    when the input may be numerically zero).
    """
    arr = np.atleast_2d(np.asarray(vectors, dtype=float))
    if arr.size == 0 or not np.any(arr):
        return np.zeros((arr.shape[1] if arr.ndim == 2 else 0, 0))
    u, s, _ = np.linalg.svd(arr.T, full_matrices=False)
    rank = int(np.sum(s > max(rtol * s[0], floor)))
    return u[:, :rank]


def null_space(mat, rtol=RANK_TOL, floor=0.0):
    """Orthonormal basis (columns) of the kernel of `mat`."""
    mat = np.asarray(mat, dtype=float)
    _, s, vt = np.linalg.svd(mat, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > max(rtol * smax, floor))) if smax > 0 else 0
    return vt[rank:].T


def subspace_distance(basis_a, basis_b):
    """Largest principal-angle sine between two subspaces (orthonormal columns).

    Returns 1.0 when the dimensions differ.
    """
    if basis_a.shape[1] != basis_b.shape[1]:
        return 1.0
    if basis_a.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(basis_a.T @ basis_b, compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - np.min(s) ** 2)))


def subspace_intersection(basis_a, basis_b, rtol=RANK_TOL):
    """Orthonormal basis of the intersection of two column-spanned subspaces."""
    if basis_a.shape[1] == 0 or basis_b.shape[1] == 0:
        return np.zeros((basis_a.shape[0], 0))
    stacked = np.hstack([basis_a, -basis_b])
    ker = null_space(stacked, rtol)
    if ker.shape[1] == 0:
        return np.zeros((basis_a.shape[0], 0))
    vectors = (basis_a @ ker[: basis_a.shape[1]]).T
    return orthonormal_basis(vectors, rtol)


def contains_vector(basis, v, tol=1e-8):
    """Whether `v` lies in the column span of `basis` up to `tol` (relative)."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return True
    resid = v - basis @ (basis.T @ v)
    return np.linalg.norm(resid) <= tol * nv


def symmetric_sqrt(mat, tol=1e-12):
    """Symmetric positive-definite square root via eigendecomposition."""
    mat = np.asarray(mat, dtype=float)
    sym = 0.5 * (mat + mat.T)
    w, v = np.linalg.eigh(sym)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.min(w) <= tol * scale:
        raise NotPositiveDefinite(
            f"matrix has eigenvalue {np.min(w):.3e}, not positive definite"
        )
    return (v * np.sqrt(w)) @ v.T


def random_orthogonal(rng, n):
    """Haar-ish random orthogonal matrix from a QR factorization."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
