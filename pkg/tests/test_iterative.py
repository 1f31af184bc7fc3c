import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invreg.errors import ArgumentError
from invreg.numcore import GridFunction1D, NoiseSpec, add_noise
from invreg.problems import CExampleProblem, DiagonalOperator, diagonal_tikhonov_exact
from invreg.iterative import (
    DataDrivenPrior,
    StoppingRule,
    apriori_stop_index,
    geometric_schedule,
    irgn,
    irgn_variant,
    irli_variant,
    ksest_bound,
    landweber,
    modified_landweber,
    operator_norm_estimate,
    resest_threshold,
    two_step_irli,
)

ONE = DiagonalOperator([1.0])
HALF = DiagonalOperator([0.5])


def fixed(k):
    return StoppingRule.max_iterations(k)


class TestLandweber:
    def test_one_step_exact(self):
        x, log = landweber(ONE, [1.0], [0.0], StoppingRule.discrepancy(0.0, 2.0), scale=1.0)
        assert x[0] == 1.0 and log.residual[-1] == 0.0 and log.stop_index == 1

    def test_affine_recursion(self):
        for k in range(6):
            x, log = landweber(HALF, [1.0], [0.0], fixed(k), scale=1.0)
            assert x[0] == pytest.approx(2 * (1 - 0.75**k), abs=1e-14)
            assert len(log.residual) == k + 1

    def test_noisy_scalar_bound(self):
        delta, tau = 0.01, 2.5
        x, log = landweber(HALF, [1.0 + delta], [0.0], StoppingRule.discrepancy(delta, tau), scale=1.0, x_ref=[2.0])
        assert log.stop_reason == "discrepancy"
        k = log.stop_index
        assert k * (tau * delta) ** 2 <= ksest_bound(tau, 0.0, 2.0)

    def test_scale_from_norm_estimate(self):
        P = DiagonalOperator([3.0, 1.0])
        assert operator_norm_estimate(P, np.zeros(2)) == pytest.approx(3.0, rel=1e-8)
        _, log = landweber(P, [1.0, 1.0], np.zeros(2), fixed(1))
        assert log.scale == pytest.approx(1 / 3, rel=1e-8)

    def test_tau_must_exceed_one(self):
        with pytest.raises(ArgumentError):
            StoppingRule.discrepancy(0.1, 1.0)

    def test_divergence_guard(self):
        x, log = landweber(ONE, [1.0], [0.0], fixed(100), scale=2.0)
        assert log.stop_reason == "diverged"


class TestModifiedLandweber:
    def test_same_operator_is_landweber(self):
        a, la = landweber(HALF, [1.0], [0.0], fixed(7), scale=1.0)
        b, lb = modified_landweber(HALF, HALF, [1.0], [0.0], fixed(7), scale=1.0)
        assert a.tobytes() == b.tobytes() and la.residual == lb.residual

    def test_hand_recursion(self):
        x = 0.0
        for k in range(1, 8):
            x = x - 0.9 * (0.5 * x - 1.0)
            got, _ = modified_landweber(HALF, DiagonalOperator([0.9]), [1.0], [0.0], fixed(k), scale=1.0)
            assert got[0] == pytest.approx(x, abs=1e-12)

    def test_zero_surrogate_freezes(self):
        x, log = modified_landweber(HALF, DiagonalOperator([0.0]), [1.0], [0.3], fixed(5), scale=1.0)
        assert x[0] == 0.3 and len(set(log.residual)) == 1


class TestIRGN:
    def test_scalar_first_step(self):
        x, _ = irgn(ONE, [1.0], [0.0], [0.0], stop=fixed(1))
        assert x[0] == pytest.approx(0.5)

    def test_update_from_exact_solution(self):
        # x_k = x* = 1, x0 = 0, alpha_0 = 1: update = -(1 + 1)^-1 * 1 * (1 - 0)
        x, _ = irgn(ONE, [1.0], [1.0], [0.0], stop=fixed(1))
        assert x[0] == pytest.approx(0.5)
        x, _ = irgn(ONE, [0.0], [0.0], [0.0], stop=fixed(3))
        assert x[0] == 0.0

    def test_ratio_bound(self):
        with pytest.raises(ArgumentError):
            irgn(ONE, [1.0], [0.0], [0.0], alpha_schedule=[1.0, 0.1, 0.05], stop=fixed(2))
        with pytest.raises(ArgumentError):
            irgn(ONE, [1.0], [0.0], [0.0], alpha_schedule=[1.0, 2.0], stop=fixed(2))

    @given(st.integers(0, 2**31))
    @settings(max_examples=20, deadline=None)
    def test_one_step_is_linearized_tikhonov(self, seed):
        r = np.random.default_rng(seed)
        n = int(r.integers(1, 8))
        op = DiagonalOperator(r.uniform(0.05, 2, n))
        y, x0, a = r.standard_normal(n), r.standard_normal(n), float(r.uniform(0.01, 2))
        x, _ = irgn(op, y, x0, x0, alpha_schedule=[a, a], stop=fixed(1))
        np.testing.assert_allclose(x, diagonal_tikhonov_exact(op, y, x0, a), atol=1e-10)

    def test_long_default_schedule_runs(self):
        # 2^-k underflows after ~1075 steps; the run must not trip the ratio check
        _, log = irgn(ONE, [1.0], [0.0], [0.0], stop=fixed(1200))
        assert log.stop_reason == "max_iterations"


class TestApriori:
    def test_case2(self):
        assert apriori_stop_index(None, 0.1, 1.0, case=2) == 4

    def test_case1(self):
        assert apriori_stop_index(None, 0.1, 1.0, case=1) == 0

    def test_monotone_in_delta(self):
        ks = [apriori_stop_index(geometric_schedule(), d, 1.0) for d in (0.2, 0.1, 0.05)]
        assert ks == sorted(ks)

    def test_apriori_rule_stops(self):
        _, log = irgn(ONE, [1.0], [0.0], [0.0], stop=StoppingRule.apriori(3))
        assert log.stop_index == 3 and log.stop_reason == "apriori"


class TestTwoStep:
    def test_scalar_step(self):
        x, log = two_step_irli(ONE, [1.0], [0.0], [0.0], mu_schedule=[0.5], stop=fixed(1))
        assert x[0] == pytest.approx(0.5)
        assert log.half_residual == [0.0]

    def test_mu_zero_is_landweber(self):
        a, _ = landweber(HALF, [1.0], [0.0], fixed(9))
        b, _ = two_step_irli(HALF, [1.0], [0.0], [0.0], mu_schedule=lambda k: 0.0, stop=fixed(9))
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_mu_one_returns_prior(self):
        for k in (1, 4):
            x, _ = two_step_irli(HALF, [1.0], [0.0], [0.7], mu_schedule=lambda k: 1.0, stop=fixed(k))
            assert x[0] == 0.7

    def test_mu_out_of_range(self):
        with pytest.raises(ArgumentError):
            two_step_irli(ONE, [1.0], [0.0], [0.0], mu_schedule=[1.5], stop=fixed(1))


class TestVariants:
    def test_singleton_weighted_is_single(self):
        x0 = np.array([0.3])
        a, la = irli_variant(HALF, [1.0], [0.0], DataDrivenPrior("single", x0=x0), stop=fixed(10))
        b, lb = irli_variant(HALF, [1.0], [0.0], DataDrivenPrior("weighted_mean", U=(x0,)), stop=fixed(10))
        np.testing.assert_allclose(a, b, atol=1e-12)
        np.testing.assert_allclose(la.residual, lb.residual, atol=1e-12)

    def test_singleton_irgn_is_irgn(self):
        x0 = np.array([0.3])
        a, _ = irgn(HALF, [1.0], [0.0], x0, stop=fixed(6))
        for mode in ("weighted_mean", "cyclic", "randomized"):
            b, _ = irgn_variant(HALF, [1.0], [0.0], DataDrivenPrior(mode, U=(x0,)), stop=fixed(6))
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_cyclic_indices(self):
        p = DataDrivenPrior("cyclic", U=(np.zeros(1), np.ones(1)))
        assert p.index_sequence(6) == [0, 1, 0, 1, 0, 1]

    def test_cyclic_uses_alternating_targets(self):
        U = (np.array([0.0]), np.array([1.0]))
        # with F' = 0 only the prior term acts: x <- x - mu (x - u_k)
        x, _ = irli_variant(DiagonalOperator([0.0]), [0.0], [0.5], DataDrivenPrior("cyclic", U=U),
                            mu_schedule=lambda k: 1.0, stop=fixed(3), scale=1.0)
        assert x[0] == 0.0  # u_2 = U[0]

    def test_randomized_reproducible(self):
        U = tuple(np.full(1, i) for i in range(5))
        a = DataDrivenPrior("randomized", U=U, seed=4).index_sequence(50)
        b = DataDrivenPrior("randomized", U=U, seed=4).index_sequence(50)
        assert a == b and set(a) <= set(range(5))

    def test_supervised_doubles_gradient(self):
        # x1 = x0 - omega F'(F x0 - y) (1 + mu) with F = Fl = 0.5, omega = 1, mu = 1
        x, _ = irli_variant(HALF, [1.0], [0.0], DataDrivenPrior("supervised", learned=HALF),
                            mu_schedule=[1.0], stop=fixed(1), scale=1.0)
        assert x[0] == pytest.approx(0.0 - 1.0 * 0.5 * (0.0 - 1.0) * 2.0)

    def test_supervised_irgn_is_newton(self):
        # (2 F'^2)^-1 2 F' r = r / F': one step reaches the solution of 0.5 x = 1
        x, _ = irgn_variant(HALF, [1.0], [0.0], DataDrivenPrior("supervised", learned=HALF),
                            alpha_schedule=[1.0, 1.0], stop=fixed(1))
        assert x[0] == pytest.approx(2.0, abs=1e-12)

    def test_mu_to_zero_reduces_to_landweber(self):
        a, _ = landweber(HALF, [1.0], [0.0], fixed(5))
        for mode, kw in (("weighted_mean", {"U": (np.ones(1),)}), ("supervised", {"learned": HALF})):
            b, _ = irli_variant(HALF, [1.0], [0.0], DataDrivenPrior(mode, **kw), mu_schedule=lambda k: 0.0, stop=fixed(5))
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_empty_set(self):
        with pytest.raises(ArgumentError):
            DataDrivenPrior("cyclic", U=())


def test_landweber_cexample_properties():
    P = CExampleProblem(lambda s: 50.0 + 0 * s, 64)
    xt = 1 + 0.5 * np.sin(2 * np.pi * P.s) ** 2
    tau, delta = 2.5, 1e-3
    yd = add_noise(GridFunction1D(P.apply(xt)), NoiseSpec(delta, 0)).values
    x, log = landweber(P, yd, np.ones(65), StoppingRule.discrepancy(delta, tau), x_ref=xt)
    assert log.stop_reason == "discrepancy"
    eta = log.eta_cone
    assert eta <= 0.2
    thr = resest_threshold(delta, eta)
    for k in range(log.stop_index):
        if log.residual[k] > thr:
            assert log.error[k + 1] <= log.error[k]
    assert log.stop_index * (tau * delta) ** 2 <= ksest_bound(tau, eta, log.error[0])


def test_threshold_formulas():
    assert resest_threshold(1.0, 0.0) == 2.0
    assert resest_threshold(1.0, 0.5) == float("inf")
    assert ksest_bound(2.5, 0.0, 1.0) == pytest.approx(2.5 / 0.5)
