"""Spectral type of solvable brackets: real / imaginary / mixed, and flatness.

The classifier works through the adjoint spectra: phi(mu, X) is the largest
|Re lambda| and psi(mu, X) the largest |lambda| over the eigenvalues of
ad(X).  A non-nilpotent solvable bracket is of real type exactly when phi
stays bounded away from zero on the unit sphere of the nilradical
complement.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize

from .brackets import ad_map, ensure_lie, is_solvable, nilradical
from .curvature import ricci
from .errors import NilpotentInput, NotSolvable

SIGMA_THRESHOLD = 1e-7
FLAT_TOL = 1e-10
_GRID_SEED = 20240

class AlgebraType(str, Enum):
    REAL = "RealType"
    IMAGINARY = "ImaginaryType"
    MIXED = "MixedNonReal"
    NILPOTENT = "Nilpotent"
    ABELIAN = "Abelian"


@dataclass
class TypeReport:
    kind: AlgebraType
    sigma_a: float
    witness: np.ndarray
    rank: int
    confidence: str = "exact"
    notes: str = ""

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "sigma_a": self.sigma_a,
            "witness": self.witness.tolist(),
            "rank": self.rank,
            "confidence": self.confidence,
            "notes": self.notes,
        }


def phi(mu, x):
    """Largest |Re lambda| over the spectrum of ad(x); degree-1 homogeneous."""
    a = ad_map(mu, x)
    if not np.any(a):
        return 0.0
    return float(np.max(np.abs(np.real(np.linalg.eigvals(a)))))


def psi(mu, x):
    """Largest |lambda| over the spectrum of ad(x)."""
    a = ad_map(mu, x)
    if not np.any(a):
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def _sphere_grid(dim, count):
    rng = np.random.default_rng(_GRID_SEED)
    pts = rng.standard_normal((count, dim))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    return np.vstack([axes, pts])


def _optimize_on_sphere(value, dim, sign, refine_from):
    """Nelder-Mead refinement of value(x/|x|); sign=+1 minimizes, -1 maximizes."""
    best_x, best_v = None, np.inf

    def objective(x):
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            return np.inf
        return sign * value(x / nx)

    for x0 in refine_from:
        res = minimize(
            objective, x0, method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-9, "maxiter": 2000},
        )
        if res.fun < best_v:
            best_v, best_x = res.fun, res.x / np.linalg.norm(res.x)
    return sign * best_v, best_x


def sigma_a(mu):
    """Approximate global minimum of phi over the unit sphere of a = n^perp.

    Deterministic sphere grid (>= 64 * 2^dim a directions) plus Nelder-Mead
    refinement from the three best grid points.  Returns (value, witness).
    """
    ensure_lie(mu)
    if not is_solvable(mu):
        raise NotSolvable("sigma_a requires a solvable bracket")
    _, a_basis, rank = nilradical(mu)
    if rank == 0:
        raise NilpotentInput("sigma_a requires a non-nilpotent bracket (rank >= 1)")
    grid = _sphere_grid(rank, 64 * 2**rank)
    vals = np.array([phi(mu, a_basis @ d) for d in grid])
    order = np.argsort(vals)
    value, direction = _optimize_on_sphere(
        lambda d: phi(mu, a_basis @ d), rank, +1.0, grid[order[:3]]
    )
    return float(value), a_basis @ direction


def classify_type(mu):
    """Type report for a solvable Lie bracket.

    Abelian and Nilpotent are detected structurally; otherwise real type is
    decided by sigma_a > threshold, and imaginary type by sampling phi over
    the full unit sphere (reported with "sampled" confidence, since sampling
    cannot certify a universally quantified statement).
    """
    ensure_lie(mu)
    if mu.is_zero:
        return TypeReport(AlgebraType.ABELIAN, 0.0, np.zeros(mu.dim), 0)
    if not is_solvable(mu):
        raise NotSolvable("classification covers solvable brackets only")
    _, _, rank = nilradical(mu)
    if rank == 0:
        return TypeReport(AlgebraType.NILPOTENT, 0.0, np.zeros(mu.dim), 0)
    value, witness = sigma_a(mu)
    if value > SIGMA_THRESHOLD:
        return TypeReport(AlgebraType.REAL, value, witness, rank)
    grid = _sphere_grid(mu.dim, 64 * 2**mu.dim)
    vals = np.array([phi(mu, d) for d in grid])
    order = np.argsort(vals)[::-1]
    phi_max, phi_witness = _optimize_on_sphere(
        lambda d: phi(mu, d), mu.dim, -1.0, grid[order[:3]]
    )
    if phi_max <= SIGMA_THRESHOLD:
        return TypeReport(
            AlgebraType.IMAGINARY, value, witness, rank,
            confidence="sampled",
            notes="imaginary type decided by full-sphere sampling",
        )
    return TypeReport(AlgebraType.MIXED, value, np.asarray(phi_witness), rank)


def is_flat_bracket(mu):
    """Flatness via the Ricci endomorphism: ||Ric|| below the flat tolerance."""
    ensure_lie(mu)
    if not is_solvable(mu):
        raise NotSolvable("flatness test covers solvable brackets only")
    return float(np.linalg.norm(ricci(mu))) <= FLAT_TOL * (1.0 + mu.norm_sq)
