import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invreg.errors import ArgumentError, DimensionError, DomainError
from invreg.numcore import GridFunction1D, fit_rate, nodes, norm_l2
from invreg.problems import (
    AExampleProblem,
    CExampleProblem,
    DiagonalOperator,
    MatrixOperator,
    adjoint_gap,
    aexample_apply,
    cexample_apply,
    cexample_deriv,
    diagonal_tikhonov_exact,
    tangential_cone_ratio,
)

PI2 = np.pi**2


def sine_load(c=0.0):
    return lambda s: (PI2 + c) * np.sin(np.pi * s)


class TestCExample:
    def test_poisson(self):
        P = CExampleProblem(sine_load(), 256)
        y = cexample_apply(GridFunction1D(np.zeros(257)), P)
        assert np.max(np.abs(y.values - np.sin(np.pi * y.s))) <= 5e-4

    def test_zero_source(self):
        P = CExampleProblem(lambda s: 0 * s, 32)
        assert np.all(P.apply(np.ones(33)) == 0.0)

    def test_reaction(self):
        P = CExampleProblem(sine_load(3.0), 256)
        y = P.apply(np.full(257, 3.0))
        assert norm_l2(GridFunction1D(y - np.sin(np.pi * P.s))) <= 1e-3

    def test_deriv_zero_direction(self, rng):
        P = CExampleProblem(sine_load(), 32)
        x = 1 + rng.random(33)
        assert np.all(cexample_deriv(x, np.zeros(33), P).values == 0.0)

    def test_finite_difference(self, rng):
        P = CExampleProblem(sine_load(), 64)
        x = 1 + rng.random(65)
        h = rng.standard_normal(65)
        eps = 1e-5
        fd = (P.apply(x + eps * h) - P.apply(x)) / eps
        d = P.deriv(x, h)
        assert np.linalg.norm(fd - d) / np.linalg.norm(d) <= 1e-3

    def test_jacobian_matches_deriv(self, rng):
        P = CExampleProblem(sine_load(), 20)
        x, h = 1 + rng.random(21), rng.standard_normal(21)
        np.testing.assert_allclose(P.jacobian(x) @ h, P.deriv(x, h), atol=1e-13)

    def test_domain(self):
        P = CExampleProblem(sine_load(), 16)
        with pytest.raises(DomainError):
            P.apply(-np.ones(17))
        with pytest.raises(DimensionError):
            P.apply(np.ones(5))

    def test_projection_idempotent(self, rng):
        P = CExampleProblem(sine_load(), 16)
        x = rng.standard_normal(17)
        p = P.project_domain(x)
        np.testing.assert_array_equal(P.project_domain(p), p)
        ok = np.abs(x)
        np.testing.assert_array_equal(P.project_domain(ok), ok)

    def test_tangential_cone_shrinks(self, rng):
        P = CExampleProblem(sine_load(), 64)
        x = 1 + 0.5 * np.sin(2 * np.pi * P.s) ** 2
        d = np.sin(3 * np.pi * P.s)
        ratios = [tangential_cone_ratio(P, x, x + t * d) for t in (1e-1, 1e-2, 1e-3)]
        assert all(np.isfinite(ratios))
        assert ratios[0] > ratios[1] > ratios[2]


class TestAExample:
    def test_unit_coefficient(self):
        P = AExampleProblem(sine_load(), 256)
        y = aexample_apply(GridFunction1D(np.ones(257)), P)
        assert norm_l2(GridFunction1D(y.values - np.sin(np.pi * y.s))) <= 1e-3

    def test_zero_source(self):
        P = AExampleProblem(lambda s: 0 * s, 32)
        assert np.all(P.apply(np.ones(33)) == 0.0)

    def test_bound(self):
        P = AExampleProblem(sine_load(), 16, nu=0.1)
        with pytest.raises(DomainError):
            P.apply(np.full(17, 0.05))
        assert np.all(P.project_domain(np.zeros(17)) == 0.1)

    def test_finite_difference(self, rng):
        P = AExampleProblem(sine_load(), 64)
        x = 1 + rng.random(65)
        h = rng.standard_normal(65)
        eps = 1e-5
        fd = (P.apply(x + eps * h) - P.apply(x)) / eps
        d = P.deriv(x, h)
        assert np.linalg.norm(fd - d) / np.linalg.norm(d) <= 1e-3


@pytest.mark.parametrize("cls", [CExampleProblem, AExampleProblem])
@given(seed=st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_adjoint_identity(cls, seed):
    r = np.random.default_rng(seed)
    P = cls(sine_load(), 48)
    x = 0.5 + r.random(49)
    assert adjoint_gap(P, x, r.standard_normal(49), r.standard_normal(49)) <= 1e-8


@pytest.mark.parametrize("cls", [CExampleProblem, AExampleProblem])
def test_fem_rate(cls):
    ref = cls(sine_load(), 4096)
    x = 1 + 0.5 * np.sin(2 * np.pi * ref.s) ** 2
    yref = ref.apply(x)
    pairs = []
    for n in (16, 32, 64, 128):
        step = 4096 // n
        P = cls(sine_load(), n)
        e = P.apply(x[::step]) - yref[::step]
        pairs.append((1.0 / n, norm_l2(GridFunction1D(e))))
    assert fit_rate(pairs)[0] == pytest.approx(2.0, abs=0.3)


class TestDiagonal:
    def test_scalar(self):
        np.testing.assert_allclose(diagonal_tikhonov_exact(DiagonalOperator([1.0]), [1.0], [0.0], 1.0), [0.5])

    def test_large_alpha(self, rng):
        op = DiagonalOperator(rng.random(5))
        x0 = rng.standard_normal(5)
        np.testing.assert_allclose(diagonal_tikhonov_exact(op, rng.standard_normal(5), x0, 1e12), x0, atol=1e-10)

    def test_null_direction(self):
        assert diagonal_tikhonov_exact(DiagonalOperator([0.0]), [1.0], [0.0], 0.3)[0] == 0.0

    def test_alpha_must_be_positive(self):
        with pytest.raises(ArgumentError):
            diagonal_tikhonov_exact(DiagonalOperator([1.0]), [1.0], [0.0], 0.0)

    @given(st.integers(0, 2**31))
    @settings(max_examples=20, deadline=None)
    def test_linear_adjoints(self, seed):
        r = np.random.default_rng(seed)
        for P, n in ((DiagonalOperator(r.random(4)), 4), (MatrixOperator(r.standard_normal((3, 4))), 4)):
            assert adjoint_gap(P, np.zeros(n), r.standard_normal(n), r.standard_normal(P.apply(np.zeros(n)).size)) <= 1e-12
