import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invreg.errors import ArgumentError, DimensionError
from invreg.numcore import (
    GridFunction1D,
    NoiseSpec,
    SinogramGrid,
    add_noise,
    fit_rate,
    inner_l2,
    nodes,
    norm_l2,
    read_grid_csv,
    read_sinogram_csv,
    sinogram_nodes,
    trapezoid_weights,
    weighted_radon_norm,
    write_grid_csv,
    write_sinogram_csv,
)


def gf(fn, n):
    return GridFunction1D(fn(nodes(n)))


class TestInner:
    def test_constant_one(self):
        one = gf(np.ones_like, 10)
        assert inner_l2(one, one) == pytest.approx(1.0, abs=1e-14)

    def test_zero(self, rng):
        g = GridFunction1D(rng.standard_normal(11))
        assert inner_l2(GridFunction1D(np.zeros(11)), g) == 0.0

    def test_sine_squared(self):
        f = gf(lambda s: np.sin(np.pi * s), 200)
        assert abs(inner_l2(f, f) - 0.5) <= 1e-3

    def test_mismatched_grids(self):
        with pytest.raises(DimensionError):
            inner_l2(GridFunction1D(np.ones(5)), GridFunction1D(np.ones(6)))

    def test_weights_sum_to_one(self):
        for n in (2, 7, 64):
            assert math.fsum(trapezoid_weights(n)) == pytest.approx(1.0, abs=1e-15)

    @given(st.integers(2, 40), st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=40, deadline=None)
    def test_symmetric_and_bilinear(self, n, seed, a, b):
        r = np.random.default_rng(seed)
        f, g, h = (GridFunction1D(r.standard_normal(n + 1)) for _ in range(3))
        assert inner_l2(f, g) == pytest.approx(inner_l2(g, f), rel=1e-12, abs=1e-14)
        lhs = inner_l2(GridFunction1D(a * f.values + b * h.values), g)
        rhs = a * inner_l2(f, g) + b * inner_l2(h, g)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    def test_grid_too_small(self):
        with pytest.raises(ArgumentError):
            GridFunction1D(np.ones(2))

    def test_nonfinite_rejected(self):
        with pytest.raises(ArgumentError):
            GridFunction1D(np.array([0.0, np.nan, 1.0]))


class TestSinogram:
    def test_nodes_inside(self):
        t, th = sinogram_nodes(64, 32)
        assert np.all(np.abs(t) < 1) and th[0] == 0.0 and th[-1] < np.pi

    def test_zero(self):
        assert weighted_radon_norm(SinogramGrid(np.zeros((8, 4)))) == 0.0

    def test_constant_one(self):
        # int (1-t^2)^(-1/2) dt = pi, times the angular length pi
        z = SinogramGrid(np.ones((4000, 8)))
        assert weighted_radon_norm(z) == pytest.approx(math.pi, rel=0.02)

    def test_weight_itself(self):
        t, _ = sinogram_nodes(2000, 8)
        z = SinogramGrid(np.repeat(np.sqrt(1 - t**2)[:, None], 8, axis=1))
        assert weighted_radon_norm(z) == pytest.approx(math.sqrt(math.pi**2 / 2), rel=0.02)


class TestNoise:
    def test_zero_delta(self, rng):
        y = GridFunction1D(rng.standard_normal(33))
        np.testing.assert_array_equal(add_noise(y, NoiseSpec(0.0, 1)).values, y.values)

    @given(st.floats(1e-6, 10.0), st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_exact_norm(self, delta, seed):
        y = GridFunction1D(np.sin(np.pi * nodes(40)))
        yd = add_noise(y, NoiseSpec(delta, seed))
        assert norm_l2(GridFunction1D(yd.values - y.values)) == pytest.approx(delta, rel=1e-12)

    def test_same_seed_identical(self):
        y = GridFunction1D(np.zeros(17))
        a = add_noise(y, NoiseSpec(0.1, 7)).values
        b = add_noise(y, NoiseSpec(0.1, 7)).values
        assert a.tobytes() == b.tobytes()

    def test_negative_delta(self):
        with pytest.raises(ArgumentError):
            NoiseSpec(-1.0)


class TestFitRate:
    def test_square(self):
        assert fit_rate([(h, h * h) for h in (1, 0.5, 0.25)])[0] == pytest.approx(2.0, abs=1e-10)

    def test_sqrt(self):
        assert fit_rate([(h, 3 * math.sqrt(h)) for h in (1, 0.5, 0.25)])[0] == pytest.approx(0.5, abs=1e-10)

    def test_constant(self):
        assert fit_rate([(h, 1.0) for h in (1, 0.5, 0.25)])[0] == pytest.approx(0.0, abs=1e-12)

    @given(st.floats(-3, 3), st.floats(1e-3, 1e3))
    @settings(max_examples=40, deadline=None)
    def test_power_law(self, p, c):
        hs = [2.0**-j for j in range(5)]
        assert fit_rate([(h, c * h**p) for h in hs])[0] == pytest.approx(p, abs=1e-8)

    def test_rejects_nonpositive(self):
        with pytest.raises(ArgumentError):
            fit_rate([(1.0, 0.0), (0.5, 1.0)])


class TestCSV:
    def test_grid_roundtrip(self, tmp_path, rng):
        f = GridFunction1D(rng.standard_normal(21))
        write_grid_csv(f, tmp_path / "f.csv")
        assert (tmp_path / "f.csv").read_text().splitlines()[0] == "s,value"
        np.testing.assert_array_equal(read_grid_csv(tmp_path / "f.csv").values, f.values)

    def test_sinogram_roundtrip(self, tmp_path, rng):
        z = SinogramGrid(rng.standard_normal((6, 5)))
        write_sinogram_csv(z, tmp_path / "z.csv")
        assert (tmp_path / "z.csv").read_text().splitlines()[0] == "t,theta,value"
        np.testing.assert_array_equal(read_sinogram_csv(tmp_path / "z.csv").values, z.values)
