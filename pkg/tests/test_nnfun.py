import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from invreg.errors import ArgumentError, DegenerateParametrizationError
from invreg.numcore import GridFunction1D, nodes
from invreg.nnfun import (
    Activation,
    ALNNParams,
    GaussNewtonOptions,
    RQNNAtom,
    activation_eval,
    alnn_eval,
    alnn_jacobian,
    gauss_newton_fit,
    greedy_approximate,
    load_alnn_csv,
    rqnn_atom_eval,
    rqnn_normalizer,
    rqnn_wavelet_eval,
    save_alnn_csv,
    wavelet_dictionary,
)

SMOOTH = ["sigmoid", "tanh", "softplus", "elu", "celu", "selu", "log_sigmoid", "gaussian", "linear"]


def known_params():
    return ALNNParams(np.array([1.0, -0.7, 0.5]), np.array([[4.0], [-3.0], [6.0]]), np.array([-1.0, 2.0, -4.5]))


class TestActivations:
    def test_relu(self):
        relu = Activation("relu")
        assert activation_eval(relu, -1.0) == 0.0
        assert activation_eval(Activation("relu", 1.0, 0.0), 2.0) == 2.0

    def test_softplus_zero(self):
        assert activation_eval(Activation("softplus"), 0.0) == pytest.approx(math.log(2), abs=1e-12)

    def test_logistic_antisymmetry(self):
        sig = Activation("sigmoid", 1.0, 0.0)
        a = activation_eval(sig, 0.7) - 0.5
        b = activation_eval(sig, -0.7) - 0.5
        assert abs(a + b) <= 1e-12

    def test_sigmoidal_limits(self):
        for kind in ("sigmoid", "tanh"):
            act = Activation(kind)
            lo, hi = activation_eval(act, -50.0), activation_eval(act, 50.0)
            assert hi == pytest.approx(1.0) and lo == pytest.approx(0.0 if kind == "sigmoid" else -1.0)

    @pytest.mark.parametrize("kind", SMOOTH)
    @pytest.mark.parametrize("order", [1, 2])
    def test_derivatives(self, kind, order):
        act = Activation(kind)
        s = np.linspace(-2.3, 2.1, 9)
        eps = 1e-5
        fd = (activation_eval(act, s + eps, order - 1) - activation_eval(act, s - eps, order - 1)) / (2 * eps)
        np.testing.assert_allclose(activation_eval(act, s, order), fd, atol=1e-6)

    def test_order_limits(self):
        with pytest.raises(ArgumentError):
            activation_eval(Activation("heaviside"), 0.3, 1)
        with pytest.raises(ArgumentError):
            Activation("swishy")


class TestALNN:
    def test_zero_outer_weights(self, rng):
        p = ALNNParams(np.zeros(3), rng.standard_normal((3, 1)), rng.standard_normal(3))
        assert np.all(alnn_eval(p, Activation("tanh"), np.linspace(0, 1, 7)) == 0)

    def test_linear_neuron(self):
        p = ALNNParams(np.array([2.0]), np.array([[1.0]]), np.array([0.5]))
        assert alnn_eval(p, Activation("linear", 1.0, 0.0), 1.0) == pytest.approx(3.0)

    def test_zero_weight_constant(self):
        p = ALNNParams(np.array([1.5]), np.array([[0.0]]), np.array([0.4]))
        np.testing.assert_allclose(alnn_eval(p, Activation("tanh"), np.linspace(-1, 1, 5)), 1.5 * math.tanh(0.4))

    def test_vector_roundtrip(self, rng):
        p = ALNNParams.random(4, 2, rng, 1.0)
        q = ALNNParams.from_vector(p.to_vector(), 2)
        for a, b in ((p.alpha, q.alpha), (p.w, q.w), (p.theta, q.theta)):
            np.testing.assert_array_equal(a, b)
        assert p.to_vector().size == 4 * (2 + 2)

    @pytest.mark.parametrize("kind", ["tanh", "sigmoid", "softplus"])
    def test_jacobian_vs_finite_differences(self, kind):
        act = Activation(kind)
        r = np.random.default_rng(12)
        for _ in range(10):
            p = ALNNParams.random(3, 1, r, 1.5)
            s = r.uniform(-1, 1, 6)
            J = alnn_jacobian(p, act, s)
            v = p.to_vector()
            fd = np.empty_like(J)
            for i in range(v.size):
                e = np.zeros_like(v)
                e[i] = 1e-6
                fd[:, i] = (alnn_eval(ALNNParams.from_vector(v + e, 1), act, s)
                            - alnn_eval(ALNNParams.from_vector(v - e, 1), act, s)) / 2e-6
            assert np.max(np.abs(J - fd)) / np.max(np.abs(J)) <= 1e-6

    def test_jacobian_structure(self, rng):
        p = ALNNParams(np.array([0.0, 1.3]), rng.standard_normal((2, 1)), rng.standard_normal(2))
        s = np.array([0.4, -0.8, 1.1])
        J = alnn_jacobian(p, Activation("tanh"), s)
        # layout per neuron: alpha, w, theta
        assert np.all(J[:, 1:3] == 0)
        np.testing.assert_allclose(J[:, 5], J[:, 4] / s, rtol=1e-12)

    def test_csv_roundtrip(self, tmp_path, rng):
        p = ALNNParams.random(3, 2, rng, 1.0)
        save_alnn_csv(p, tmp_path / "p.csv")
        q = load_alnn_csv(tmp_path / "p.csv")
        np.testing.assert_array_equal(p.to_vector(), q.to_vector())


class TestRQNN:
    def test_normalizer_default(self):
        assert rqnn_normalizer() == pytest.approx(1 / math.sqrt(math.pi), rel=1e-10)

    def test_phi_unit_mass(self):
        s = np.linspace(-12, 12, 48001)
        phi = rqnn_atom_eval(RQNNAtom.at(0, 0.0), None, s)
        assert trapezoid(phi, s) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("k", [-1, 0, 2])
    def test_psi_zero_mass(self, k):
        s = np.linspace(-30, 30, 120001)
        psi = rqnn_wavelet_eval(RQNNAtom.at(k, 0.25), None, s)
        assert abs(trapezoid(psi, s)) <= 1e-6

    def test_translation(self):
        s = np.linspace(-2, 3, 101)
        a = rqnn_wavelet_eval(RQNNAtom.at(1, 1.5), None, s)
        b = rqnn_wavelet_eval(RQNNAtom.at(1, 0.0), None, s - 1.5)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_parameter_map(self):
        for k in range(-4, 5):
            for kv in range(-8, 9):
                atom = RQNNAtom(k, (kv,))
                qp, qm = atom.q_plus, atom.q_minus
                assert qp[0] == 2.0 ** (2 * k) and qm[0] == 2.0 ** (2 * k - 2)
                assert qp[1] == 2.0 ** (-k) * kv
                assert RQNNAtom.from_q_plus(qp) == atom

    def test_unknown_profile(self):
        with pytest.raises(ArgumentError):
            rqnn_normalizer(1, Activation("relu"))


def wavelet_sum(terms, n=512):
    s = nodes(n)
    return GridFunction1D(sum(c * rqnn_wavelet_eval(RQNNAtom.at(k, t), None, s) for c, k, t in terms))


class TestGreedy:
    def test_single_atom(self):
        atom = wavelet_dictionary(2)[5]
        f = GridFunction1D(rqnn_wavelet_eval(atom, None, nodes(256)))
        res = greedy_approximate(f, 2, 1)
        assert res.residuals[0] <= 1e-10 and res.atoms[0] == atom

    def test_zero_target(self):
        res = greedy_approximate(GridFunction1D(np.zeros(129)), 2, 4)
        assert all(r == 0.0 for r in res.residuals)

    def test_constructed_rate(self):
        res = greedy_approximate(wavelet_sum([(1.0, 0, 0.0), (0.5, 1, 0.5), (0.25, -1, 0.0)]), 3, 12)
        for N, r in enumerate(res.residuals, 1):
            assert r <= 1.75 * (N + 1) ** -0.5

    @given(st.integers(0, 2**31))
    @settings(max_examples=10, deadline=None)
    def test_random_sums(self, seed):
        r = np.random.default_rng(seed)
        J = int(r.integers(1, 4))
        dic = wavelet_dictionary(2)
        idx = r.choice(len(dic), J, replace=False)
        coeffs = r.uniform(-1, 1, J)
        s = nodes(256)
        f = GridFunction1D(sum(c * rqnn_wavelet_eval(dic[i], None, s) for c, i in zip(coeffs, idx)))
        res = greedy_approximate(f, 2, 4 * J)
        bound = float(np.sum(np.abs(coeffs)))
        assert all(b <= a + 1e-12 for a, b in zip(res.residuals, res.residuals[1:]))
        for N, rn in enumerate(res.residuals, 1):
            assert rn <= bound * (N + 1) ** -0.5


class TestGaussNewton:
    def test_recovers_known(self):
        act = Activation("tanh")
        p_star = known_params()
        s = nodes(200)
        target = GridFunction1D(alnn_eval(p_star, act, s))
        v = p_star.to_vector() + 1e-2 * np.random.default_rng(3).standard_normal(9)
        p, log = gauss_newton_fit(target, ALNNParams.from_vector(v, 1), act, GaussNewtonOptions(max_iter=20))
        assert log.residual[-1] <= 1e-8
        r = [x for x in log.residual if x > 1e-14]
        tail = [b / a for a, b in zip(r[-4:], r[-3:])]
        assert all(t2 < t1 for t1, t2 in zip(tail, tail[1:])) or tail[-1] < 1e-3

    def test_fixed_point(self):
        act = Activation("tanh")
        p_star = known_params()
        target = GridFunction1D(alnn_eval(p_star, act, nodes(64)))
        p, log = gauss_newton_fit(target, p_star, act)
        assert log.residual[0] == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_array_equal(p.to_vector(), p_star.to_vector())

    def test_degenerate(self):
        # all-zero neurons: the Jacobian vanishes in every direction but alpha,
        # and a zero target gives zero alpha columns too
        p0 = ALNNParams(np.zeros(2), np.zeros((2, 1)), np.zeros(2))
        with pytest.raises(DegenerateParametrizationError):
            gauss_newton_fit(GridFunction1D(np.ones(33)), p0, Activation("relu"))
