import numpy as np
import pytest
import scipy.linalg as sla

from bracketflow import (
    FlowSpec,
    Termination,
    Variant,
    act,
    blowdown_check,
    catalog,
    curvature_pack,
    derived_series,
    detect_soliton_convergence,
    estimate_cubic_bound,
    integrate,
    nilradical,
    normalize_soliton,
    recover_gauge,
    soliton_residual,
    stratum_label,
)
from bracketflow.errors import GaugeMismatch, OutOfRange
from bracketflow.strata import beta_decomposition


@pytest.fixture(scope="module")
def hyp_norm():
    mu = catalog("s3_lambda", lam=1.0).bracket
    return normalize_soliton(mu, soliton_residual(mu))


@pytest.fixture(scope="module")
def hyp_label(hyp_norm):
    return stratum_label(hyp_norm)


@pytest.fixture(scope="module")
def s3_label():
    return stratum_label(catalog("s3").bracket)


class TestRawFlow:
    def test_h3_matches_closed_form(self, mu_h3):
        # On the Heisenberg ray the raw flow is mu(t) = (1+3t)^(-1/2) mu_0.
        traj = integrate(mu_h3, FlowSpec(variant=Variant.RAW, t_end=4.0, record_every=1.0))
        for s in traj.samples:
            expected = (1.0 + 3.0 * s.t) ** -0.5 * mu_h3.coeffs
            np.testing.assert_allclose(s.bracket.coeffs, expected, atol=1e-9)

    def test_h3_type_three_window(self, mu_h3):
        traj = integrate(mu_h3, FlowSpec(variant=Variant.RAW, t_end=50.0, record_every=1.0))
        window = [s.monitors.type3 for s in traj.samples if s.t >= 1.0]
        assert 0.4 <= min(window) and max(window) <= 0.7  # -> 2/3 from below

    def test_orbit_invariants_constant(self, mu_s3, s3_label):
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.RAW, t_end=10.0, label=s3_label, record_every=2.0),
        )
        for s in traj.samples:
            assert derived_series(s.bracket) == [3, 2, 0]
            assert nilradical(s.bracket)[2] == 1

    def test_cubic_bound_holds_along_trajectory(self, mu_h3, mu_s3):
        c_bound = estimate_cubic_bound(3, samples=2000, seed=0)
        for mu in (mu_h3, mu_s3):
            traj = integrate(mu, FlowSpec(variant=Variant.RAW, t_end=10.0, record_every=1.0))
            for s in traj.samples:
                assert s.monitors.field_norm <= 1.25 * c_bound * s.bracket.norm**3


class TestIntegratorOracle:
    def test_raw_flow_matches_solve_ivp(self, mu_s3):
        from scipy.integrate import solve_ivp
        from bracketflow.flows import flow_field

        traj = integrate(mu_s3, FlowSpec(variant=Variant.RAW, t_end=10.0, record_every=10.0))
        sol = solve_ivp(
            lambda t, y: flow_field(y.reshape(3, 3, 3), Variant.RAW, None).ravel(),
            (0.0, 10.0), mu_s3.coeffs.ravel(), method="RK45", rtol=1e-11, atol=1e-13,
        )
        gap = np.linalg.norm(traj.final.bracket.coeffs.ravel() - sol.y[:, -1])
        assert gap <= 1e-9

    def test_normalized_flow_matches_solve_ivp_on_slice(self, mu_s3, s3_label):
        # The scal* = -1 slice is invariant but transversally unstable, so a
        # projection-free reference integration drifts off it exponentially;
        # both endpoints are projected back before comparing.
        from scipy.integrate import solve_ivp
        from bracketflow.curvature import curvature_parts
        from bracketflow.flows import flow_field
        from bracketflow import BracketTensor, curvature_pack

        dec = beta_decomposition(s3_label)
        traj = integrate(
            mu_s3, FlowSpec(variant=Variant.SCALSTAR, t_end=5.0, label=s3_label, record_every=5.0)
        )
        nu0 = mu_s3.coeffs * abs(curvature_pack(mu_s3).scalStar) ** -0.5
        sol = solve_ivp(
            lambda t, y: flow_field(y.reshape(3, 3, 3), Variant.SCALSTAR, dec).ravel(),
            (0.0, 5.0), nu0.ravel(), method="RK45", rtol=1e-12, atol=1e-14,
        )
        ref = sol.y[:, -1].reshape(3, 3, 3)
        s = float(np.trace(curvature_parts(BracketTensor(ref))[4]))
        ref = ref * abs(s) ** -0.5
        gap = np.linalg.norm(traj.final.bracket.coeffs - ref)
        assert gap <= 1e-7


class TestBlowdown:
    def test_trivial_at_one(self, mu_h3):
        traj = integrate(mu_h3, FlowSpec(variant=Variant.RAW, t_end=2.0, record_every=0.5))
        assert blowdown_check(traj, 1.0) <= 1e-9

    def test_h3_scaling_identity(self, mu_h3):
        traj = integrate(mu_h3, FlowSpec(variant=Variant.RAW, t_end=4.0, record_every=0.5))
        assert blowdown_check(traj, 4.0) <= 1e-6

    def test_s31_scaling_identity(self, mu_s31):
        traj = integrate(mu_s31, FlowSpec(variant=Variant.RAW, t_end=9.0, record_every=0.5))
        assert blowdown_check(traj, 9.0) <= 1e-6

    def test_out_of_range(self, mu_h3):
        traj = integrate(mu_h3, FlowSpec(variant=Variant.RAW, t_end=2.0, record_every=0.5))
        with pytest.raises(OutOfRange):
            blowdown_check(traj, 8.0)


class TestNormalizedFlow:
    def test_soliton_is_fixed_point(self, hyp_norm, hyp_label):
        traj = integrate(
            hyp_norm,
            FlowSpec(variant=Variant.SCALSTAR, t_end=5.0, label=hyp_label, record_every=0.5),
        )
        drift = max(
            np.linalg.norm(s.bracket.coeffs - hyp_norm.coeffs) for s in traj.samples
        )
        assert drift <= 1e-9

    def test_gauged_flow_preserves_soliton_ray(self, hyp_norm, hyp_label):
        # The un-normalized gauged flow shrinks a soliton along its ray.
        traj = integrate(
            hyp_norm,
            FlowSpec(variant=Variant.GAUGED, t_end=2.0, label=hyp_label, record_every=0.5),
        )
        direction0 = hyp_norm.coeffs / hyp_norm.norm
        for s in traj.samples:
            d = s.bracket.coeffs / s.bracket.norm
            assert np.linalg.norm(d - direction0) <= 1e-8
        assert traj.final.bracket.norm < hyp_norm.norm

    def test_scalstar_drift_bounded(self, mu_s3, s3_label):
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=20.0, label=s3_label, record_every=0.5),
        )
        for s in traj.samples:
            assert abs(s.pack.scalStar + 1.0) <= 1e-7

    def test_monitor_inequalities_on_real_type_runs(self, s3_label):
        for name, lam in (("s3", None), ("s3_lambda", 0.5), ("s3_lambda_prime", 0.7)):
            entry = catalog(name, lam=lam)
            label = s3_label if name == "s3" else stratum_label(entry.bracket)
            traj = integrate(
                entry.bracket,
                FlowSpec(variant=Variant.SCALSTAR, t_end=30.0, label=label, record_every=0.5),
            )
            for s in traj.samples:
                assert s.monitors.lyapunov >= -1e-8
                assert s.monitors.cs >= -1e-8

    def test_f_trailing_max_decreases(self, mu_s3, s3_label):
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=60.0, label=s3_label, record_every=1.0),
        )
        f = np.array([s.monitors.f for s in traj.samples])
        window = 10
        tails = np.array([f[i : i + window].max() for i in range(5, len(f) - window)])
        assert np.all(np.diff(tails) <= 1e-12)

    def test_requires_label_and_gauge(self, mu_s3, mu_h3):
        with pytest.raises(GaugeMismatch):
            integrate(mu_s3, FlowSpec(variant=Variant.SCALSTAR, t_end=1.0))
        with pytest.raises(GaugeMismatch):
            # s_{3,1} carries negative components in the h3 grading.
            integrate(
                catalog("s3_lambda", lam=1.0).bracket,
                FlowSpec(variant=Variant.SCALSTAR, t_end=1.0, label=stratum_label(mu_h3)),
            )

    def test_k_beta_equivariance_of_gauged_flow(self, mu_s3, s3_label):
        # Rotations in the nilradical block commute with beta; flowing the
        # rotated seed equals rotating the flow.
        theta = 0.7
        k = np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, np.cos(theta), -np.sin(theta)],
                [0.0, np.sin(theta), np.cos(theta)],
            ]
        )
        spec = FlowSpec(variant=Variant.GAUGED, t_end=3.0, label=s3_label, record_every=1.0)
        traj_a = integrate(act(k, mu_s3), spec)
        traj_b = integrate(mu_s3, spec)
        for sa, sb in zip(traj_a.samples, traj_b.samples):
            np.testing.assert_allclose(
                sa.bracket.coeffs, act(k, sb.bracket).coeffs, atol=1e-8
            )

    def test_imaginary_type_normalization_breakdown(self, mu_e2):
        # On the E(2) orbit the normalized flow blows up in finite time:
        # the modified scalar curvature of the shape collapses to zero.
        seed = act(np.diag([1.0, 1.0, 1.5]), mu_e2)
        label = stratum_label(mu_e2)
        traj = integrate(
            seed, FlowSpec(variant=Variant.SCALSTAR, t_end=50.0, label=label, record_every=0.02)
        )
        assert traj.termination in (Termination.DIVERGED, Termination.STEP_FAILURE)
        assert traj.final.bracket.norm >= 100.0 * seed.norm

    def test_e2_raw_flow_scal_to_zero(self, mu_e2):
        seed = act(np.diag([1.0, 1.0, 1.5]), mu_e2)
        traj = integrate(seed, FlowSpec(variant=Variant.RAW, t_end=100.0, record_every=1.0, conv_tol=0.0))
        assert abs(traj.final.pack.scal) <= 1e-6
        assert traj.final.monitors.ric_bound <= 1e-6


class TestScalVariant:
    def test_rescaled_to_unit_scal(self, mu_s3, s3_label):
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCAL, t_end=10.0, label=s3_label, record_every=1.0),
        )
        for s in traj.samples:
            assert s.pack.scal == pytest.approx(-1.0, abs=1e-9)

    def test_matches_rescaled_scalstar_run(self, mu_s3, s3_label):
        spec = dict(t_end=5.0, label=s3_label, record_every=1.0)
        traj_star = integrate(mu_s3, FlowSpec(variant=Variant.SCALSTAR, **spec))
        traj_scal = integrate(mu_s3, FlowSpec(variant=Variant.SCAL, **spec))
        for a, b in zip(traj_star.samples, traj_scal.samples):
            scale = abs(a.pack.scal) ** -0.5
            np.testing.assert_allclose(
                b.bracket.coeffs, scale * a.bracket.coeffs, atol=1e-10
            )


class TestConvergenceDetection:
    def test_fixed_point_converges_immediately(self, hyp_norm, hyp_label):
        traj = integrate(
            hyp_norm,
            FlowSpec(variant=Variant.SCALSTAR, t_end=20.0, label=hyp_label, record_every=0.5),
        )
        det = detect_soliton_convergence(traj)
        assert det.converged and det.f_tail <= 1e-12
        assert traj.termination == Termination.CONVERGED

    def test_s3l_converges_exponentially(self):
        entry = catalog("s3_lambda", lam=0.5)
        label = stratum_label(entry.bracket)
        traj = integrate(
            entry.bracket,
            FlowSpec(variant=Variant.SCALSTAR, t_end=80.0, label=label, record_every=0.5),
        )
        det = detect_soliton_convergence(traj)
        assert det.converged and det.f_tail <= 1e-8
        cert = soliton_residual(det.limit)
        assert cert.residual <= 1e-6

    def test_s3_power_law_tail(self, mu_s3, s3_label):
        # The Einstein limit of the s3 orbit sits on a center manifold: the
        # rigidity function decays like 1/t^2, so t = 100 is far from 1e-8.
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=100.0, label=s3_label, record_every=0.5),
        )
        det = detect_soliton_convergence(traj)
        assert not det.converged
        assert 1e-6 <= det.f_tail <= 1e-4
        assert traj.final.monitors.f * traj.final.t**2 == pytest.approx(0.125, rel=0.1)

    def test_s3_converges_on_its_own_clock(self, mu_s3, s3_label):
        # Following the power law to its 1e-8 crossing takes t ~ 3.5e3; the
        # bracket itself approaches the Einstein limit only like 1/sqrt(t),
        # so the residual-type quantities sit near 1e-2 at that time.
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=4000.0, label=s3_label, record_every=4.0),
        )
        det = detect_soliton_convergence(traj, cauchy_tol=1e-4)
        assert det.converged and det.f_tail <= 1e-8
        cert = soliton_residual(det.limit)
        assert cert.residual <= 2e-2
        ric = np.linalg.eigvalsh(curvature_pack(det.limit).Ric)
        assert ric.max() - ric.min() <= 2e-2  # Einstein at the 1/sqrt(t) rate


class TestGaugeRecovery:
    def test_contract_h_of_t_maps_seed_to_state(self, mu_s3, s3_label):
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=10.0, label=s3_label, record_every=0.25),
        )
        path = recover_gauge(traj, coefficient="variant")
        mu0 = traj.samples[0].bracket
        for t in (2.0, 5.0, 10.0):
            moved = act(path.at(t), mu0)
            gap = np.linalg.norm(moved.coeffs - traj.sample_at(t).bracket.coeffs)
            assert gap <= 1e-4

    def test_stationary_soliton_gives_matrix_exponential(self, hyp_norm, hyp_label):
        traj = integrate(
            hyp_norm,
            FlowSpec(
                variant=Variant.SCALSTAR, t_end=5.0, label=hyp_label,
                record_every=0.25, conv_tol=0.0,
            ),
        )
        path = recover_gauge(traj, coefficient="variant")
        bp = hyp_label.beta_plus
        for t in (1.0, 3.0, 5.0):
            np.testing.assert_allclose(path.at(t), sla.expm(-t * bp), atol=1e-8)

    def test_ricci_coefficient_constant_at_einstein_point(self, hyp_norm, hyp_label):
        # Ric + ||Ric*||^2 Id vanishes at the normalized Einstein bracket, so
        # the ungauged recovery is constant there.
        traj = integrate(
            hyp_norm,
            FlowSpec(
                variant=Variant.SCALSTAR, t_end=5.0, label=hyp_label,
                record_every=0.25, conv_tol=0.0,
            ),
        )
        path = recover_gauge(traj, coefficient="ricci")
        assert np.linalg.norm(path.mats[-1] - np.eye(3)) <= 1e-9

    def test_nilsoliton_gauge_decays_not_gl_convergent(self, mu_h3):
        label = stratum_label(mu_h3)
        traj = integrate(
            mu_h3,
            FlowSpec(
                variant=Variant.SCALSTAR, t_end=40.0, label=label,
                record_every=0.25, conv_tol=0.0,
            ),
        )
        path = recover_gauge(traj, coefficient="variant")
        # h(t) = exp(-t beta+) collapses: dets -> 0, relative increments stay O(1).
        assert path.dets[-1] <= 1e-30
        incs = [r for t, r in path.relative_increments(10.0) if t >= 20.0]
        assert incs and min(incs) >= 0.5

    def test_s3_gauge_cauchy_after_crossing(self, mu_s3, s3_label):
        # The s3-seeded gauge increments decay on the power-law clock and
        # cross 1e-4 near t = 110; from t = 120 the bound holds.
        traj = integrate(
            mu_s3,
            FlowSpec(
                variant=Variant.SCALSTAR, t_end=140.0, label=s3_label,
                record_every=0.25, conv_tol=0.0,
            ),
        )
        path = recover_gauge(traj, coefficient="variant")
        incs = [r for t, r in path.relative_increments(10.0) if t >= 120.0]
        assert incs and max(incs) <= 1e-4

    def test_einstein_orbit_gauge_is_relative_cauchy(self, hyp_norm, hyp_label, rng):
        from bracketflow.experiments import random_parabolic_gauge

        dec = beta_decomposition(hyp_label)
        seed = act(random_parabolic_gauge(rng, dec), hyp_norm)
        traj = integrate(
            seed,
            FlowSpec(
                variant=Variant.SCALSTAR, t_end=60.0, label=hyp_label,
                record_every=0.25, conv_tol=0.0,
            ),
        )
        path = recover_gauge(traj, coefficient="variant")
        incs = [r for t, r in path.relative_increments(10.0) if t >= 40.0]
        assert incs and max(incs) <= 1e-4

    def test_raw_trajectory_rejected(self, mu_h3):
        traj = integrate(mu_h3, FlowSpec(variant=Variant.RAW, t_end=1.0, record_every=0.5))
        with pytest.raises(GaugeMismatch):
            recover_gauge(traj)

    def test_sparse_recording_rejected(self, mu_s3, s3_label):
        from bracketflow.errors import InterpolationGap

        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=20.0, label=s3_label, record_every=10.0),
        )
        with pytest.raises(InterpolationGap):
            recover_gauge(traj)

    def test_sample_times_strictly_increasing(self, mu_s3, s3_label):
        traj = integrate(
            mu_s3,
            FlowSpec(variant=Variant.SCALSTAR, t_end=5.0, label=s3_label, record_every=0.5),
        )
        assert np.all(np.diff(traj.times) > 0)
