"""Benchmark forward problems.

``CExampleProblem``
    x -> y with -y'' + x y = f, y(0) = y(1) = 0, domain x >= 0.
``AExampleProblem``
    x -> y with -(x y')' = f, y(0) = y(1) = 0, domain x >= nu > 0.
``DiagonalOperator``
    componentwise multiplication by singular values, a closed-form oracle.

Both PDE problems use piecewise linear finite elements on the uniform
grid with ``n`` cells. Reaction and load terms are lumped (trapezoidal
rule), so every solve is a symmetric tridiagonal system. The derivative
adjoints are exact transposes with respect to the trapezoidal inner
products, not merely discretizations of the continuous adjoint.

All problem methods take and return plain node arrays of length ``n + 1``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solveh_banded

from .errors import ArgumentError, DimensionError, DomainError
from .numcore import GridFunction1D, nodes, trapezoid_weights

__all__ = [
    "ForwardProblem",
    "CExampleProblem",
    "AExampleProblem",
    "DiagonalOperator",
    "MatrixOperator",
    "cexample_apply",
    "cexample_deriv",
    "cexample_deriv_adjoint",
    "aexample_apply",
    "aexample_deriv",
    "aexample_deriv_adjoint",
    "diagonal_tikhonov_exact",
    "adjoint_gap",
    "tangential_cone_ratio",
]


class ForwardProblem:
    """Contract for an operator F: X -> Y on finite-dimensional arrays.

    Subclasses implement ``apply``, ``deriv`` and ``deriv_adjoint`` and may
    override the inner products and ``project_domain``.
    """

    linear = False
    # diagonal quadrature weights of the two inner products
    wx = 1.0
    wy = 1.0
    lower_bound: float | None = None

    def apply(self, x):
        raise NotImplementedError

    def deriv(self, x, h):
        raise NotImplementedError

    def deriv_adjoint(self, x, w):
        raise NotImplementedError

    def project_domain(self, x):
        return np.asarray(x, dtype=float)

    def param_inner(self, a, b) -> float:
        return float(np.sum(self.wx * np.asarray(a) * np.asarray(b)))

    def data_inner(self, a, b) -> float:
        return float(np.sum(self.wy * np.asarray(a) * np.asarray(b)))

    def param_norm(self, a) -> float:
        return float(np.sqrt(max(self.param_inner(a, a), 0.0)))

    def data_norm(self, a) -> float:
        return float(np.sqrt(max(self.data_inner(a, a), 0.0)))

    def jacobian(self, x) -> np.ndarray:
        """Dense matrix of F'[x] built column by column (small problems only)."""
        x = np.asarray(x, dtype=float)
        cols = []
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = 1.0
            cols.append(self.deriv(x, e))
        return np.column_stack(cols)


def _as_nodes(v, n: int | None = None) -> np.ndarray:
    a = v.values if isinstance(v, GridFunction1D) else np.asarray(v, dtype=float)
    if a.ndim != 1 or (n is not None and a.size != n + 1):
        raise DimensionError(f"expected {n + 1 if n else 'n+1'} node values, got shape {a.shape}")
    return a


class _FEMProblem(ForwardProblem):
    bound = 0.0

    def __init__(self, f, n: int | None = None):
        if callable(f) and not isinstance(f, GridFunction1D):
            if n is None:
                raise ArgumentError("n is required when f is a callable")
            f = GridFunction1D.from_callable(f, n)
        fv = _as_nodes(f)
        if n is not None and fv.size != n + 1:
            raise DimensionError(f"f has {fv.size} nodes, expected {n + 1}")
        if fv.size < 3:
            raise DimensionError("need n >= 2")
        self.n = fv.size - 1
        self.h = 1.0 / self.n
        self.f = fv.copy()
        self.s = nodes(self.n)
        self.w = trapezoid_weights(self.n)
        self.wx = self.w
        self.wy = self.w
        self.lower_bound = self.bound

    def project_domain(self, x):
        return np.maximum(_as_nodes(x, self.n), self.bound)

    def _check(self, x):
        x = _as_nodes(x, self.n)
        if np.any(x < self.bound - 1e-14):
            raise DomainError(f"parameter below the admissible bound {self.bound}")
        return x

    def _solve(self, bands, rhs_int):
        """Solve the SPD tridiagonal system with upper bands ``(off, diag)``."""
        ab = np.zeros((2, self.n - 1))
        ab[0, 1:] = bands[0]
        ab[1] = bands[1]
        try:
            return solveh_banded(ab, rhs_int)
        except np.linalg.LinAlgError as exc:
            raise DomainError("assembled FEM system is not positive definite") from exc

    def _pad(self, v_int):
        out = np.zeros(self.n + 1)
        out[1:-1] = v_int
        return out


class CExampleProblem(_FEMProblem):
    """-y'' + x y = f with homogeneous Dirichlet data; parameter x >= 0."""

    bound = 0.0

    def _bands(self, x):
        h = self.h
        off = np.full(self.n - 2, -1.0 / h)
        diag = 2.0 / h + h * x[1:-1]
        return off, diag

    def _state(self, x):
        return self._pad(self._solve(self._bands(x), self.h * self.f[1:-1]))

    def apply(self, x):
        return self._state(self._check(x))

    def deriv(self, x, h):
        x = self._check(x)
        y = self._state(x)
        hv = _as_nodes(h, self.n)
        return self._pad(self._solve(self._bands(x), -self.h * hv[1:-1] * y[1:-1]))

    def deriv_adjoint(self, x, w):
        x = self._check(x)
        y = self._state(x)
        wv = _as_nodes(w, self.n)
        p = self._pad(self._solve(self._bands(x), self.h * wv[1:-1]))
        return -y * p

    def jacobian(self, x):
        x = self._check(x)
        y = self._state(x)
        rhs = np.zeros((self.n - 1, self.n + 1))
        idx = np.arange(self.n - 1)
        rhs[idx, idx + 1] = -self.h * y[1:-1]
        J = np.zeros((self.n + 1, self.n + 1))
        J[1:-1] = self._solve(self._bands(x), rhs)
        return J


class AExampleProblem(_FEMProblem):
    """-(x y')' = f with homogeneous Dirichlet data; parameter x >= nu > 0.

    On each cell the coefficient is the trapezoidal mean of the two nodal
    values, which integrates the piecewise linear x exactly.
    """

    def __init__(self, f, n: int | None = None, nu: float = 0.1):
        if not nu > 0.0:
            raise ArgumentError("nu must be > 0")
        super().__init__(f, n)
        self.nu = float(nu)
        self.bound = self.nu
        self.lower_bound = self.nu

    def _bands(self, x):
        xe = 0.5 * (x[:-1] + x[1:]) / self.h
        return -xe[1:-1], xe[:-1] + xe[1:]

    def _stiff(self, x, y):
        """K(x) y at interior nodes."""
        xe = 0.5 * (x[:-1] + x[1:]) / self.h
        dy = np.diff(y)
        return xe[:-1] * dy[:-1] - xe[1:] * dy[1:]

    def _state(self, x):
        return self._pad(self._solve(self._bands(x), self.h * self.f[1:-1]))

    def apply(self, x):
        return self._state(self._check(x))

    def deriv(self, x, h):
        x = self._check(x)
        y = self._state(x)
        hv = _as_nodes(h, self.n)
        return self._pad(self._solve(self._bands(x), -self._stiff(hv, y)))

    def deriv_adjoint(self, x, w):
        x = self._check(x)
        y = self._state(x)
        wv = _as_nodes(w, self.n)
        p = self._pad(self._solve(self._bands(x), self.h * wv[1:-1]))
        # <K(h) y, p> = sum_e h_e dy_e dp_e / h with h_e the cell mean of h
        g = np.diff(y) * np.diff(p) / (2.0 * self.h)
        nodal = np.zeros(self.n + 1)
        nodal[:-1] += g
        nodal[1:] += g
        return -nodal / self.w

    def jacobian(self, x):
        x = self._check(x)
        y = self._state(x)
        dy = np.diff(y) / (2.0 * self.h)
        # column i perturbs the two cells adjacent to node i by 1/2 each
        rhs = np.zeros((self.n - 1, self.n + 1))
        for e in range(self.n):
            # cell e is the right cell of node e and the left cell of node e + 1
            if e >= 1:
                rhs[e - 1, e] -= dy[e]
                rhs[e - 1, e + 1] -= dy[e]
            if e <= self.n - 2:
                rhs[e, e] += dy[e]
                rhs[e, e + 1] += dy[e]
        J = np.zeros((self.n + 1, self.n + 1))
        J[1:-1] = self._solve(self._bands(x), -rhs)
        return J


class DiagonalOperator(ForwardProblem):
    """F x = sigma * x componentwise, with the Euclidean inner products."""

    linear = True

    def __init__(self, sigma):
        self.sigma = np.atleast_1d(np.asarray(sigma, dtype=float)).copy()
        if np.any(self.sigma < 0.0):
            raise ArgumentError("singular values must be >= 0")

    def apply(self, x):
        return self.sigma * np.asarray(x, dtype=float)

    def deriv(self, x, h):
        return self.sigma * np.asarray(h, dtype=float)

    def deriv_adjoint(self, x, w):
        return self.sigma * np.asarray(w, dtype=float)

    def singular_values(self):
        return self.sigma


class MatrixOperator(ForwardProblem):
    """Linear F x = A x with Euclidean inner products."""

    linear = True

    def __init__(self, A):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))

    def apply(self, x):
        return self.A @ np.asarray(x, dtype=float)

    def deriv(self, x, h):
        return self.A @ np.asarray(h, dtype=float)

    def deriv_adjoint(self, x, w):
        return self.A.T @ np.asarray(w, dtype=float)

    def singular_values(self):
        return np.linalg.svd(self.A, compute_uv=False)


def _gf(v) -> GridFunction1D:
    return GridFunction1D(v)


def cexample_apply(x, prob: CExampleProblem) -> GridFunction1D:
    return _gf(prob.apply(_as_nodes(x)))


def cexample_deriv(x, h, prob: CExampleProblem) -> GridFunction1D:
    return _gf(prob.deriv(_as_nodes(x), _as_nodes(h)))


def cexample_deriv_adjoint(x, w, prob: CExampleProblem) -> GridFunction1D:
    return _gf(prob.deriv_adjoint(_as_nodes(x), _as_nodes(w)))


def aexample_apply(x, prob: AExampleProblem) -> GridFunction1D:
    return _gf(prob.apply(_as_nodes(x)))


def aexample_deriv(x, h, prob: AExampleProblem) -> GridFunction1D:
    return _gf(prob.deriv(_as_nodes(x), _as_nodes(h)))


def aexample_deriv_adjoint(x, w, prob: AExampleProblem) -> GridFunction1D:
    return _gf(prob.deriv_adjoint(_as_nodes(x), _as_nodes(w)))


def diagonal_tikhonov_exact(op: DiagonalOperator, y, x0, alpha: float) -> np.ndarray:
    """Closed-form minimizer (sigma y + alpha x0) / (sigma^2 + alpha)."""
    if not alpha > 0.0:
        raise ArgumentError("alpha must be > 0")
    s = op.sigma
    return (s * np.asarray(y, dtype=float) + alpha * np.asarray(x0, dtype=float)) / (s**2 + alpha)


def adjoint_gap(problem: ForwardProblem, x, h, w) -> float:
    """|<F'[x]h, w>_Y - <h, F'[x]*w>_X| / (|h|_X |w|_Y)."""
    lhs = problem.data_inner(problem.deriv(x, h), w)
    rhs = problem.param_inner(h, problem.deriv_adjoint(x, w))
    denom = problem.param_norm(h) * problem.data_norm(w)
    return abs(lhs - rhs) / denom if denom > 0 else abs(lhs - rhs)


def tangential_cone_ratio(problem: ForwardProblem, x, x_tilde) -> float:
    """|F[x] - F[x~] - F'[x](x - x~)| / |F[x] - F[x~]| (eta_cone sample)."""
    fx, ft = problem.apply(x), problem.apply(x_tilde)
    d = np.asarray(x, dtype=float) - np.asarray(x_tilde, dtype=float)
    num = problem.data_norm(fx - ft - problem.deriv(x, d))
    den = problem.data_norm(fx - ft)
    return num / den if den > 0 else float("inf") if num > 0 else 0.0
