import numpy as np
import pytest
import scipy.linalg as sla

from bracketflow import (
    BracketTensor,
    act,
    beta_decomposition,
    check_gauged,
    energy_gradient_flow,
    label_from_beta,
    nilradical,
    pi_action,
    project_qbeta,
    same_label,
    stratum_label,
)
from bracketflow.curvature import moment_map_fast
from bracketflow.errors import NonCanonicalBeta, ZeroBracket
from bracketflow.linalg import random_orthogonal
from bracketflow.strata import grading_components


class TestEnergyFlow:
    def test_h3_already_critical(self, mu_h3):
        limit, resid = energy_gradient_flow(mu_h3)
        assert resid <= 1e-9
        np.testing.assert_allclose(limit.coeffs, mu_h3.coeffs, atol=1e-12)

    def test_rotated_h3_critical_with_conjugated_moment(self, mu_h3, rng):
        k = random_orthogonal(rng, 3)
        limit, resid = energy_gradient_flow(act(k, mu_h3))
        assert resid <= 1e-9
        np.testing.assert_allclose(
            moment_map_fast(limit), k @ np.diag([-1.0, -1, 1]) @ k.T, atol=1e-8
        )

    def test_scaled_hyperbolic(self, mu_s31):
        limit, resid = energy_gradient_flow(mu_s31.scaled(2**-0.5))
        assert resid <= 1e-9
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(moment_map_fast(limit))), [-1.0, 0, 0], atol=1e-8
        )

    def test_energy_monotone_from_gauged_seed(self, mu_h3, rng):
        h = sla.expm(0.4 * rng.standard_normal((3, 3)))
        history = []
        _, resid = energy_gradient_flow(act(h, mu_h3), history=history)
        assert resid <= 1e-9
        diffs = np.diff(np.array(history))
        assert np.all(diffs <= 1e-10)

    def test_zero_bracket_rejected(self):
        with pytest.raises(ZeroBracket):
            energy_gradient_flow(BracketTensor.zero(3))

    def test_step_budget_carries_partial_result(self, mu_s3):
        from bracketflow.errors import MaxStepsExceeded

        with pytest.raises(MaxStepsExceeded) as info:
            energy_gradient_flow(mu_s3, crit_tol=1e-14, max_steps=2)
        assert info.value.result is not None
        assert info.value.residual > 0.0


class TestStratumLabel:
    def test_h3_label(self, mu_h3):
        label = stratum_label(mu_h3)
        np.testing.assert_allclose(label.eigenvalues, [-1.0, -1, 1], atol=1e-8)
        assert label.norm_sq == pytest.approx(3.0, abs=1e-8)
        beta_plus = label.beta_plus
        np.testing.assert_allclose(beta_plus, np.diag([2.0, 2, 4]), atol=1e-7)
        # beta+ is a derivation of h3.
        assert np.linalg.norm(pi_action(beta_plus, mu_h3).coeffs) <= 1e-6

    def test_hyperbolic_label(self, mu_s31):
        label = stratum_label(mu_s31.scaled(2**-0.5))
        np.testing.assert_allclose(label.eigenvalues, [-1.0, 0, 0], atol=1e-8)
        np.testing.assert_allclose(label.beta_plus, np.diag([0.0, 1, 1]), atol=1e-7)
        # image of beta+ inside the nilradical of the critical bracket.
        n_basis, _, _ = nilradical(label.critical_bracket)
        assert n_basis.shape[1] == 2

    def test_scale_invariance(self, mu_s3):
        assert same_label(stratum_label(mu_s3), stratum_label(mu_s3.scaled(3.0)))

    def test_ordering_probe(self, mu_s3, mu_s31, mu_h3, mu_e2):
        # s3 and s_{3,1} share a stratum; the e2 and h3 labels differ.
        assert same_label(stratum_label(mu_s3), stratum_label(mu_s31))
        assert not same_label(stratum_label(mu_e2), stratum_label(mu_h3))


class TestBetaDecomposition:
    def test_rank_one_block_structure(self):
        dec = beta_decomposition(label_from_beta([-1.0, 0.0, 0.0]))
        assert len(dec.g_basis) == 5
        assert len(dec.u_basis) == 2
        assert len(dec.h_basis) == 4
        assert len(dec.sl_basis) == 6
        # u_beta consists of maps from e1 into span(e2, e3).
        for u in dec.u_basis:
            assert np.all(u[:, 1:] == 0.0) and np.all(u[0, :] == 0.0)

    def test_h3_block_structure(self, mu_h3):
        dec = beta_decomposition(stratum_label(mu_h3))
        assert len(dec.u_basis) == 2
        for u in dec.u_basis:
            # maps from span(e1,e2) into span(e3)
            assert np.all(u[:2, :] == 0.0) and np.all(u[:, 2] == 0.0)

    def test_dimension_identity(self, rng):
        for eigs in ([-1.0, 0, 0], [-1.0, -1, 1], [-0.6, -0.3, 0.1, 0.8]):
            dec = beta_decomposition(label_from_beta(eigs))
            n = len(eigs)
            assert len(dec.g_basis) + 2 * len(dec.u_basis) == n * n

    def test_g_beta_commutes(self, mu_h3):
        dec = beta_decomposition(stratum_label(mu_h3))
        beta = dec.label.beta
        for a in dec.g_basis:
            assert np.linalg.norm(beta @ a - a @ beta) <= 1e-10

    def test_non_canonical_rejected(self):
        label = label_from_beta([-1.0, 0, 0])
        label.eigenvalues = np.array([0.0, -1.0, 0.0])
        with pytest.raises(NonCanonicalBeta):
            beta_decomposition(label)


class TestQBetaProjection:
    @pytest.fixture
    def dec(self):
        return beta_decomposition(label_from_beta([-1.0, 0.0, 0.0]))

    def test_identity_on_q_beta(self, dec):
        for a in dec.g_basis + dec.u_basis:
            np.testing.assert_allclose(project_qbeta(a, dec), a, atol=1e-14)

    def test_symmetric_u_part_doubles(self, dec):
        u = dec.u_basis[0]
        sym = u + u.T
        np.testing.assert_allclose(project_qbeta(sym, dec), 2.0 * u, atol=1e-14)

    def test_kills_k_u_beta(self, dec):
        for a in dec.k_u_basis:
            assert np.linalg.norm(project_qbeta(a, dec)) <= 1e-14

    def test_idempotent(self, dec, rng):
        a = rng.standard_normal((3, 3))
        once = project_qbeta(a, dec)
        np.testing.assert_allclose(project_qbeta(once, dec), once, atol=1e-13)

    def test_norm_bounds_symmetric(self, dec, rng):
        for _ in range(20):
            a = rng.standard_normal((3, 3))
            a = a + a.T
            na = np.linalg.norm(a)
            nq = np.linalg.norm(project_qbeta(a, dec))
            assert na - 1e-12 <= nq <= 2.0 * na + 1e-12


class TestGaugeCheck:
    def test_h3_in_v0_of_own_label(self, mu_h3):
        label = stratum_label(mu_h3)
        gauge = check_gauged(mu_h3, label)
        assert gauge.in_nonneg
        assert gauge.v0_norm == pytest.approx(mu_h3.norm, abs=1e-9)
        assert gauge.neg_norm <= 1e-12

    def test_hyperbolic_in_v0(self, mu_s31):
        label = stratum_label(mu_s31.scaled(2**-0.5))
        gauge = check_gauged(mu_s31, label)
        assert gauge.in_nonneg and gauge.v0_norm > 0

    def test_wrong_label_detected(self, mu_s31, mu_h3):
        # s_{3,1} has negative components in the h3 grading: its
        # nilradical-to-nilradical output sits at weight -2.
        gauge = check_gauged(mu_s31, stratum_label(mu_h3))
        assert not gauge.in_nonneg
        assert gauge.neg_norm > 1.0

    def test_grading_is_orthogonal_and_complete(self, mu_h3, rng):
        dec = beta_decomposition(stratum_label(mu_h3))
        c = rng.standard_normal((3, 3, 3))
        mu = BracketTensor(0.5 * (c - np.swapaxes(c, 0, 1)))
        comps = grading_components(mu, dec)
        total = sum(v**2 for _, v in comps)
        assert total == pytest.approx(mu.norm_sq, abs=1e-12)
