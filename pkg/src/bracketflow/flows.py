"""The four bracket-flow variants, monitors, and gauge recovery.

Vector fields (all of the shape mu' = -pi(A(mu)) mu):

  raw        A = Ric(mu)
  gauged     A = (Ric*)_{q_beta}
  scalstar   A = (Ric*)_{q_beta} + ||Ric*||^2 Id   (keeps scal* = -1)
  scal       post-hoc rescaling of a scalstar run by |scal|^{-1/2}

Integration uses an embedded Dormand-Prince 5(4) pair with PI step control,
stepping exactly onto the recording grid.  Each recorded sample carries the
curvature pack and the monitor quantities used by the convergence and
collapse criteria.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .brackets import BracketTensor, jacobi_residual, ensure_lie
from .curvature import CurvaturePack, curvature_pack, curvature_parts
from .errors import InterpolationGap, GaugeMismatch, OutOfRange
from .strata import check_gauged, beta_decomposition, project_qbeta

DRIFT_TOL = 1e-7
CONV_TOL = 1e-10
F_TOL = 1e-8
BLOWUP_FACTOR = 1e12
CONV_WINDOW = 10


class Variant(str, Enum):
    RAW = "raw"
    GAUGED = "gauged"
    SCALSTAR = "scalstar"
    SCAL = "scal"


class Termination(str, Enum):
    REACHED_T_END = "ReachedTEnd"
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    STEP_FAILURE = "StepFailure"


@dataclass
class FlowSpec:
    variant: Variant
    t_end: float
    label: object = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_steps: int = 2_000_000
    record_every: float = 0.5
    conv_tol: float = CONV_TOL


@dataclass
class Monitors:
    f: float
    lyapunov: float
    cs: float
    type3: float
    ric_bound: float
    jacobi: float
    field_norm: float
    drift: float


@dataclass
class FlowSample:
    t: float
    bracket: BracketTensor
    pack: CurvaturePack
    monitors: Monitors


@dataclass
class FlowTrajectory:
    variant: Variant
    label: object
    samples: list = field(default_factory=list)
    termination: Termination = Termination.REACHED_T_END
    steps: int = 0
    renormalizations: int = 0

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    def sample_at(self, t, tol=1e-9):
        for s in self.samples:
            if abs(s.t - t) <= tol * max(1.0, abs(t)):
                return s
        raise OutOfRange(f"no recorded sample at t = {t}")

    @property
    def final(self):
        return self.samples[-1]


# Dormand-Prince 5(4) tableau (autonomous fields: no stage times needed).
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def _field_endomorphism(coeffs, variant, dec):
    """The endomorphism A(mu) driving mu' = -pi(A)mu, from raw coefficients."""
    mu = BracketTensor(coeffs)
    _, _, _, ric, ric_star = curvature_parts(mu)
    if variant == Variant.RAW:
        return ric
    a = project_qbeta(ric_star, dec)
    if variant == Variant.GAUGED:
        return a
    return a + float(np.sum(ric_star * ric_star)) * np.eye(mu.dim)


def _pi_apply(a, c):
    return (
        np.einsum("kc,ijc->ijk", a, c)
        - np.einsum("ai,ajk->ijk", a, c)
        - np.einsum("bj,ibk->ijk", a, c)
    )


def flow_field(coeffs, variant, dec):
    """dc/dt for the given variant; pure polynomial formula, no validation."""
    a = _field_endomorphism(coeffs, variant, dec)
    return -_pi_apply(a, coeffs)


def _dp_step(fun, y, h):
    k = [fun(y)]
    for row, _ in zip(_DP_A[1:], range(6)):
        yi = y + h * sum(a * ki for a, ki in zip(row, k))
        k.append(fun(yi))
    y5 = y + h * sum(b * ki for b, ki in zip(_DP_B5, k))
    y4 = y + h * sum(b * ki for b, ki in zip(_DP_B4, k))
    return y5, y5 - y4, k[0]


def _error_norm(err, y_old, y_new, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _monitors(t, mu, pack, label, field_norm, drift=float("nan")):
    if label is not None:
        beta = label.beta
        rstar_beta = float(np.sum(pack.RicStar * beta))
        rstar_sq = float(np.sum(pack.RicStar * pack.RicStar))
        f = rstar_sq - rstar_beta
        lyap = rstar_sq + pack.scalStar * rstar_beta
        cs = rstar_beta - abs(pack.scalStar) * label.norm_sq
    else:
        f = lyap = cs = float("nan")
    return Monitors(
        f=f,
        lyapunov=lyap,
        cs=cs,
        type3=t * pack.normSq,
        ric_bound=t * float(np.linalg.norm(pack.Ric)),
        jacobi=jacobi_residual(mu),
        field_norm=field_norm,
        drift=drift,
    )


def integrate(mu0, spec):
    """Integrate one bracket-flow trajectory and record monitored samples."""
    ensure_lie(mu0)
    label = spec.label
    dec = None
    variant = Variant(spec.variant)
    core_variant = Variant.SCALSTAR if variant == Variant.SCAL else variant
    if core_variant in (Variant.GAUGED, Variant.SCALSTAR):
        if label is None:
            raise GaugeMismatch(f"variant {variant.value} requires a stratum label")
        gauge = check_gauged(mu0, label)
        if not gauge.in_nonneg or gauge.v0_norm == 0.0:
            raise GaugeMismatch(
                f"initial bracket is not gauged correctly: negative-component "
                f"norm {gauge.neg_norm:.3e}, V_0 norm {gauge.v0_norm:.3e}"
            )
        dec = beta_decomposition(label)

    y = mu0.coeffs.copy()
    if core_variant == Variant.SCALSTAR:
        y, _ = _renormalize_scalstar(y)
    t = 0.0
    cap = BLOWUP_FACTOR * max(mu0.norm, 1.0)
    traj = FlowTrajectory(variant=variant, label=label)

    fun = lambda c: flow_field(c, core_variant, dec)

    def record(t_now, c):
        # The live state may sit up to drift_tol/2 off the scal* = -1 slice
        # between renormalizations; the monitors are defined on the slice, so
        # snapshots are renormalized exactly while the drift itself is kept.
        drift = float("nan")
        if core_variant == Variant.SCALSTAR:
            mu_live = BracketTensor(c.copy())
            s = float(np.trace(curvature_parts(mu_live)[4]))
            drift = abs(s + 1.0)
            c = c * abs(s) ** -0.5
        mu = BracketTensor(c.copy())
        pack = curvature_pack(mu)
        fnorm = float(np.linalg.norm(fun(c)))
        monitors = _monitors(t_now, mu, pack, label, fnorm, drift)
        traj.samples.append(FlowSample(t_now, mu, pack, monitors))

    record(0.0, y)
    next_record = spec.record_every
    h = min(1e-3, spec.record_every, spec.t_end)
    err_prev = 1.0
    renorms = 0
    steps = 0

    while t < spec.t_end - 1e-14 * max(1.0, spec.t_end):
        if steps >= spec.max_steps:
            traj.termination = Termination.STEP_FAILURE
            break
        stop = min(spec.t_end, next_record)
        h = min(h, stop - t)
        if h < 1e-14 * max(1.0, abs(t)):
            traj.termination = Termination.STEP_FAILURE
            break
        y_new, err, _ = _dp_step(fun, y, h)
        steps += 1
        err_norm = _error_norm(err, y, y_new, spec.rel_tol, spec.abs_tol)
        if err_norm <= 1.0:
            t += h
            y = y_new
            if core_variant == Variant.SCALSTAR:
                y, bumped = _renormalize_scalstar(y, only_if_drifted=True)
                renorms += int(bumped)
            norm = float(np.linalg.norm(y))
            jac = jacobi_residual(BracketTensor(y))
            if jac > 1e-8 * (1.0 + norm * norm):
                traj.termination = Termination.STEP_FAILURE
                break
            if norm > cap:
                traj.termination = Termination.DIVERGED
                break
            if abs(t - stop) <= 1e-12 * max(1.0, stop):
                t = stop
                if abs(stop - next_record) <= 1e-12 * max(1.0, stop):
                    record(t, y)
                    next_record = round(next_record / spec.record_every + 1) * spec.record_every
                    if _converged(traj, spec.conv_tol):
                        traj.termination = Termination.CONVERGED
                        break
            fac = 0.9 * err_norm ** (-0.7 / 5.0) * err_prev ** (0.4 / 5.0) if err_norm > 0 else 5.0
            err_prev = max(err_norm, 1e-10)
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.1, 0.9 * err_norm ** (-0.2))
    else:
        traj.termination = Termination.REACHED_T_END

    if not traj.samples or abs(traj.samples[-1].t - t) > 1e-12 * max(1.0, t):
        record(t, y)
    traj.steps = steps
    traj.renormalizations = renorms
    if variant == Variant.SCAL:
        _rescale_to_scal(traj)
    return traj


def _renormalize_scalstar(coeffs, only_if_drifted=False):
    mu = BracketTensor(coeffs)
    s = float(np.trace(curvature_parts(mu)[4]))
    if s >= 0.0:
        raise OutOfRange(f"scal* = {s:.3e} is not negative; cannot normalize")
    if only_if_drifted and abs(s + 1.0) <= DRIFT_TOL / 2.0:
        return coeffs, False
    return coeffs * abs(s) ** -0.5, True


def _converged(traj, conv_tol):
    if conv_tol <= 0.0 or len(traj.samples) < CONV_WINDOW:
        return False
    window = traj.samples[-CONV_WINDOW:]
    return all(
        s.monitors.field_norm <= conv_tol * (1.0 + s.bracket.norm**3) for s in window
    )


def _rescale_to_scal(traj):
    """Convert a scalstar trajectory into the scal-normalized family in place."""
    for i, s in enumerate(traj.samples):
        if abs(s.pack.scal) < 1e-12 * (1.0 + s.pack.normSq):
            raise OutOfRange(f"scal = {s.pack.scal:.3e} at t = {s.t}; cannot rescale")
        mu = s.bracket.scaled(abs(s.pack.scal) ** -0.5)
        pack = curvature_pack(mu)
        traj.samples[i] = FlowSample(
            s.t,
            mu,
            pack,
            _monitors(s.t, mu, pack, traj.label, s.monitors.field_norm, s.monitors.drift),
        )


@dataclass
class GaugePath:
    """Solution h(t) of h' = -A(mu(t)) h along a recorded trajectory."""

    times: np.ndarray
    mats: list
    coefficient: str

    @property
    def norms(self):
        return np.array([float(np.linalg.norm(m)) for m in self.mats])

    @property
    def dets(self):
        return np.array([float(np.linalg.det(m)) for m in self.mats])

    def at(self, t, tol=1e-9):
        for ti, m in zip(self.times, self.mats):
            if abs(ti - t) <= tol * max(1.0, abs(t)):
                return m
        raise OutOfRange(f"no gauge sample at t = {t}")

    def relative_increments(self, dt):
        """Pairs (t, ||h(t+dt) - h(t)|| / ||h(t)||) over the recorded grid."""
        out = []
        for i, ti in enumerate(self.times):
            for j in range(i + 1, len(self.times)):
                if abs(self.times[j] - ti - dt) <= 1e-9 * max(1.0, dt):
                    num = float(np.linalg.norm(self.mats[j] - self.mats[i]))
                    den = max(float(np.linalg.norm(self.mats[i])), 1e-300)
                    out.append((float(ti), num / den))
                    break
        return out


def _gauge_coefficient(coeffs, coefficient, variant, dec):
    mu = BracketTensor(coeffs)
    _, _, _, ric, ric_star = curvature_parts(mu)
    if coefficient == "ricci":
        return ric + float(np.sum(ric_star * ric_star)) * np.eye(mu.dim)
    a = project_qbeta(ric_star, dec)
    if variant == Variant.SCALSTAR:
        a = a + float(np.sum(ric_star * ric_star)) * np.eye(mu.dim)
    return a


def recover_gauge(traj, h0=None, coefficient="variant", max_substep=0.02):
    """Integrate the linear gauge ODE h' = -A h alongside the stored samples.

    coefficient="variant" uses the endomorphism driving the trajectory's own
    vector field, so the recovered path satisfies h(t).mu(0) = mu(t).
    coefficient="ricci" uses Ric + ||Ric*||^2 Id, the ungauged normalized
    coefficient whose solution converges in GL exactly in the Einstein case.
    samples are interpolated linearly; too-sparse recording raises.
    """
    variant = Variant.SCALSTAR if traj.variant == Variant.SCAL else traj.variant
    if variant not in (Variant.GAUGED, Variant.SCALSTAR):
        raise GaugeMismatch("gauge recovery needs a gauged or scalstar trajectory")
    dec = beta_decomposition(traj.label)
    n = traj.samples[0].bracket.dim
    h = np.eye(n) if h0 is None else np.array(h0, dtype=float)
    times = traj.times
    coeff_norms = [
        float(np.linalg.norm(_gauge_coefficient(s.bracket.coeffs, coefficient, variant, dec)))
        for s in traj.samples
    ]
    gaps = np.diff(times)
    if np.any(gaps * (np.array(coeff_norms[:-1]) + np.array(coeff_norms[1:])) > 4.0):
        raise InterpolationGap("record_every too large for stable gauge recovery")
    mats = [h.copy()]
    n_samples = len(times)
    for i in range(n_samples - 1):
        gap = times[i + 1] - times[i]
        # Quadratic interpolation of the bracket path through three samples
        # (one-sided at the ends); linear on two-sample trajectories.
        j = min(max(i, 1), n_samples - 2)
        if n_samples >= 3:
            ts = times[j - 1 : j + 2]
            cs = [traj.samples[j - 1 + k].bracket.coeffs for k in range(3)]

            def mu_at(t):
                l0 = (t - ts[1]) * (t - ts[2]) / ((ts[0] - ts[1]) * (ts[0] - ts[2]))
                l1 = (t - ts[0]) * (t - ts[2]) / ((ts[1] - ts[0]) * (ts[1] - ts[2]))
                l2 = (t - ts[0]) * (t - ts[1]) / ((ts[2] - ts[0]) * (ts[2] - ts[1]))
                return l0 * cs[0] + l1 * cs[1] + l2 * cs[2]

        else:
            c0, c1 = traj.samples[i].bracket.coeffs, traj.samples[i + 1].bracket.coeffs
            t0 = times[i]

            def mu_at(t):
                return c0 + (t - t0) / gap * (c1 - c0)

        nsub = max(6, int(math.ceil(gap / max_substep)))
        dt = gap / nsub
        for k in range(nsub):
            t_base = times[i] + k * dt

            def a_at(frac):
                return _gauge_coefficient(mu_at(t_base + frac * dt), coefficient, variant, dec)

            k1 = -a_at(0.0) @ h
            k2 = -a_at(0.5) @ (h + 0.5 * dt * k1)
            k3 = -a_at(0.5) @ (h + 0.5 * dt * k2)
            k4 = -a_at(1.0) @ (h + dt * k3)
            h = h + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        mats.append(h.copy())
    return GaugePath(times=times, mats=mats, coefficient=coefficient)


def blowdown_check(traj, s, spec=None):
    """Parabolic-rescaling identity ||mu_s(1)|| = sqrt(s) ||mu(s)||.

    Reruns the raw flow from sqrt(s)-scaled initial data up to time 1 and
    returns the absolute defect between the two sides.
    """
    if traj.variant != Variant.RAW:
        raise OutOfRange("blow-down scaling applies to raw-variant trajectories")
    if s < 1.0:
        raise OutOfRange("blow-down factor must satisfy s >= 1")
    ref = traj.sample_at(s)
    mu0 = traj.samples[0].bracket
    if spec is None:
        spec = FlowSpec(variant=Variant.RAW, t_end=1.0, record_every=0.5)
    rerun = integrate(mu0.scaled(math.sqrt(s)), FlowSpec(
        variant=Variant.RAW, t_end=1.0, label=None,
        rel_tol=spec.rel_tol, abs_tol=spec.abs_tol, record_every=1.0,
    ))
    return abs(rerun.final.bracket.norm - math.sqrt(s) * ref.bracket.norm)


@dataclass
class SolitonDetection:
    converged: bool
    f_tail: float
    limit: BracketTensor
    bracket_gap: float

    def to_dict(self):
        return {
            "converged": self.converged,
            "f_tail": self.f_tail,
            "bracket_gap": self.bracket_gap,
        }


def detect_soliton_convergence(traj, f_tol=F_TOL, cauchy_tol=1e-6):
    """Convergence test for scalstar runs: trailing f below tolerance and
    a Cauchy trailing window of brackets."""
    if Variant(traj.variant) != Variant.SCALSTAR or traj.label is None:
        raise GaugeMismatch("soliton detection needs a labelled scalstar trajectory")
    window = traj.samples[-CONV_WINDOW:]
    f_tail = max(s.monitors.f for s in window)
    gap = float(
        np.linalg.norm(window[-1].bracket.coeffs - window[0].bracket.coeffs)
    )
    converged = (
        len(traj.samples) >= CONV_WINDOW
        and f_tail <= f_tol
        and gap <= cauchy_tol * (1.0 + window[-1].bracket.norm)
    )
    return SolitonDetection(converged, f_tail, traj.final.bracket, gap)


def estimate_cubic_bound(dim, samples=2000, seed=0):
    """Estimate sup ||pi(Ric_mu) mu|| over the unit sphere of brackets.

    The raw vector field is homogeneous of degree three, so this constant
    bounds ||mu'|| by C ||mu||^3 along any trajectory.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        c = rng.standard_normal((dim, dim, dim))
        c = 0.5 * (c - np.swapaxes(c, 0, 1))
        norm = np.linalg.norm(c)
        if norm == 0.0:
            continue
        c /= norm
        best = max(best, float(np.linalg.norm(flow_field(c, Variant.RAW, None))))
    return best
