"""Learning operators from expert pairs (x^(l), y^(l)).

Vectors are stored as rows of 2-D arrays. Optional diagonal weights ``wx``
and ``wy`` define the inner products of parameter and data space, so the
same code serves plain vectors and discretized function spaces.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DependenceError, DimensionError, NumericalError
from .problems import ForwardProblem

__all__ = [
    "ExpertSet",
    "OrthoBasis",
    "KernelSpec",
    "RKHSModel",
    "VRKHSModel",
    "gram_schmidt",
    "gs_learn_solve",
    "least_squares_operator",
    "bi_orthonormalize_svd",
    "kernel_eval",
    "kernel_gram",
    "rkhs_regress",
    "rkhs_predict",
    "vrkhs_fit",
    "vrkhs_predict",
    "vrkhs_objective",
    "load_experts_csv",
    "save_experts_csv",
]


@dataclass(frozen=True)
class ExpertSet:
    """Rows of ``X`` are parameters x^(l), rows of ``Y`` data y^(l)."""

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape[0] == 0 or X.shape[0] != Y.shape[0]:
            raise ArgumentError("expert set must be nonempty with one y per x")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if self.Z is not None:
            Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
            if Z.shape[0] != X.shape[0]:
                raise ArgumentError("features must match the number of pairs")
            object.__setattr__(self, "Z", Z)

    @property
    def n0(self) -> int:
        return self.X.shape[0]

    @classmethod
    def from_operator(cls, op, xs) -> "ExpertSet":
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return cls(xs, np.stack([np.asarray(op(x), dtype=float).ravel() for x in xs]))


def _w(w, d):
    return np.ones(d) if w is None else np.broadcast_to(np.asarray(w, dtype=float), (d,))


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal rows ``vectors`` with ``inputs = R^T @ vectors`` (columnwise Q R)."""

    vectors: np.ndarray
    r_matrix: np.ndarray
    epsilon: float
    near_dependent: tuple = field(default_factory=tuple)


def gram_schmidt(vectors, epsilon: float = 0.0, weights=None) -> OrthoBasis:
    """Modified Gram-Schmidt with normalizer sqrt(|a|^2 + epsilon^2).

    With ``epsilon = 0`` a residual below 1e-12 of the input norm raises
    :class:`DependenceError`. With ``epsilon > 0`` such inputs produce
    short directions and are listed in ``near_dependent``.
    """
    if epsilon < 0.0:
        raise ArgumentError("epsilon must be >= 0")
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    k, d = V.shape
    w = _w(weights, d)
    Q = np.zeros((k, d))
    R = np.zeros((k, k))
    flagged = []
    for j in range(k):
        a = V[j].copy()
        vnorm = np.sqrt(np.sum(w * a * a))
        for i in range(j):
            R[i, j] = np.sum(w * Q[i] * a)
            a -= R[i, j] * Q[i]
        an = np.sqrt(np.sum(w * a * a))
        if an <= 1e-12 * vnorm or an == 0.0:
            if epsilon == 0.0:
                raise DependenceError(f"vector {j} is linearly dependent on its predecessors")
            flagged.append(j)
        R[j, j] = np.sqrt(an**2 + epsilon**2)
        Q[j] = a / R[j, j]
    if flagged:
        warnings.warn(f"near-dependent inputs {flagged} in regularized Gram-Schmidt", RuntimeWarning, stacklevel=2)
    return OrthoBasis(Q, R, float(epsilon), tuple(flagged))


def gs_learn_solve(experts: ExpertSet, y_query, epsilon: float = 0.0, wy=None) -> np.ndarray:
    """x = sum <y, ybar_l> xbar_l with ybar from Gram-Schmidt and xbar = X R^{-1}."""
    basis = gram_schmidt(experts.Y, epsilon, wy)
    w = _w(wy, experts.Y.shape[1])
    Xu = np.linalg.solve(basis.r_matrix.T, experts.X)
    coords = basis.vectors @ (w * np.asarray(y_query, dtype=float))
    return coords @ Xu


def least_squares_operator(experts: ExpertSet) -> np.ndarray:
    """Matrix F = Y X^T (X X^T)^+ with columns x^(l) in X and y^(l) in Y."""
    Xc = experts.X.T
    Yc = experts.Y.T
    return Yc @ Xc.T @ np.linalg.pinv(Xc @ Xc.T)


def bi_orthonormalize_svd(experts: ExpertSet, wx=None, wy=None, epsilon: float = 0.0):
    """Singular-value estimates from expert pairs by two-step orthonormalization.

    The x^(l) are orthonormalized (R factor R); ybar = Y R^{-1} are then the
    images of the orthonormal inputs. The eigenvalues of ``A = Ybar Ybar*``
    are computed via the equivalent small Gram matrix ``Ybar* Ybar`` and
    returned as ``(sqrt(eigenvalue), unit data-space direction)`` pairs,
    sorted descending.
    """
    basis = gram_schmidt(experts.X, epsilon, wx)
    Yb = np.linalg.solve(basis.r_matrix.T, experts.Y)
    w = _w(wy, experts.Y.shape[1])
    G = (Yb * w) @ Yb.T
    lam, V = np.linalg.eigh(0.5 * (G + G.T))
    order = np.argsort(lam)[::-1]
    out = []
    for i in order:
        s = float(np.sqrt(max(lam[i], 0.0)))
        d = V[:, i] @ Yb
        nd = np.sqrt(np.sum(w * d * d))
        out.append((s, d / nd if nd > 0 else d))
    return out


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    sigma: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "exponential", "cauchy", "t_student", "inverse_multiquadric"):
            raise ArgumentError(f"unknown kernel {self.kind!r}")
        if not self.sigma > 0.0:
            raise ArgumentError("kernel bandwidth must be > 0")
        if self.kind == "t_student" and not 0.0 < self.theta < 2.0:
            raise ArgumentError("t-student exponent must lie in (0, 2)")


def kernel_eval(kernel: KernelSpec, r):
    """Radial profile kappa(r) of the kernel."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ArgumentError("kernel distance must be >= 0")
    s2 = kernel.sigma**2
    if kernel.kind == "gaussian":
        out = np.exp(-(r**2) / s2)
    elif kernel.kind == "exponential":
        out = np.exp(-r / s2)
    elif kernel.kind == "cauchy":
        out = 1.0 / (1.0 + r**2 / s2)
    elif kernel.kind == "t_student":
        out = 1.0 / (1.0 + r**kernel.theta)
    else:
        out = 1.0 / np.sqrt(r**2 + s2)
    return float(out) if out.ndim == 0 else out


def _kernel_dr_over_r(kernel: KernelSpec, r):
    """kappa'(r) / r, continuously extended (or set to 0) at r = 0."""
    r = np.asarray(r, dtype=float)
    s2 = kernel.sigma**2
    safe = np.where(r > 0, r, 1.0)
    if kernel.kind == "gaussian":
        return -2.0 / s2 * np.exp(-(r**2) / s2)
    if kernel.kind == "cauchy":
        return -2.0 / s2 / (1.0 + r**2 / s2) ** 2
    if kernel.kind == "inverse_multiquadric":
        return -((r**2 + s2) ** -1.5)
    if kernel.kind == "exponential":
        return np.where(r > 0, -np.exp(-r / s2) / (s2 * safe), 0.0)
    th = kernel.theta
    return np.where(r > 0, -th * safe ** (th - 2.0) / (1.0 + safe**th) ** 2, 0.0)


def _dist(A, B, w):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    d2 = np.sum(w * A * A, 1)[:, None] + np.sum(w * B * B, 1)[None, :] - 2.0 * (A * w) @ B.T
    return np.sqrt(np.maximum(d2, 0.0))


def kernel_gram(kernel: KernelSpec, points, other=None, weights=None) -> np.ndarray:
    P = _points(points)
    O = P if other is None else _points(other)
    return kernel_eval(kernel, _dist(P, O, _w(weights, P.shape[1])))


def _coef_matrix(K, alpha):
    n0 = K.shape[0]
    M = alpha * np.eye(n0) + K / n0
    try:
        return np.linalg.inv(M) / n0
    except np.linalg.LinAlgError as exc:
        raise NumericalError("kernel system is singular") from exc


@dataclass(frozen=True)
class RKHSModel:
    points: np.ndarray
    coefficients: np.ndarray
    kernel: KernelSpec
    alpha: float


def _points(points):
    P = np.asarray(points, dtype=float)
    return P[:, None] if P.ndim == 1 else P


def rkhs_regress(points, values, kernel: KernelSpec, alpha: float) -> RKHSModel:
    """Kernel ridge regression c = n0^{-1} (alpha I + n0^{-1} K)^{-1} Y."""
    if not alpha > 0.0:
        raise ArgumentError("alpha must be > 0")
    P = _points(points)
    Y = np.asarray(values, dtype=float)
    K = kernel_eval(kernel, _dist(P, P, 1.0))
    c = _coef_matrix(K, alpha) @ Y
    return RKHSModel(P, c, kernel, float(alpha))


def rkhs_predict(model: RKHSModel, query):
    """Prediction at one point (scalar or length-d vector) or at the rows of a 2-D batch."""
    q = np.asarray(query, dtype=float)
    single = q.ndim == 0 or (q.ndim == 1 and q.size == model.points.shape[1])
    Q = q.reshape(1, -1) if single else _points(q)
    out = kernel_eval(model.kernel, _dist(Q, model.points, 1.0)) @ model.coefficients
    return float(out[0]) if single else out


class VRKHSModel(ForwardProblem):
    """Operator learned by vector-valued kernel regression.

    F(x) = sum_l y^(l) c_l(x), c(x) = n0^{-1}(alpha I + n0^{-1} K)^{-1} k(x),
    k(x)_l = kappa(|x - x^(l)|). Usable as a forward problem: the derivative
    follows from the analytic gradient of kappa.
    """

    linear = False

    def __init__(self, experts: ExpertSet, kernel: KernelSpec, alpha: float, wx=None, wy=None, lower_bound=None):
        if not alpha > 0.0:
            raise ArgumentError("alpha must be > 0")
        self.experts = experts
        self.kernel = kernel
        self.alpha = float(alpha)
        self.wx = _w(wx, experts.X.shape[1]).copy()
        self.wy = _w(wy, experts.Y.shape[1]).copy()
        self.lower_bound = lower_bound
        self.gram = kernel_eval(kernel, _dist(experts.X, experts.X, self.wx))
        self.M = _coef_matrix(self.gram, self.alpha)
        # F(x) = A^T k(x) with A = M Y
        self.A = self.M @ experts.Y

    def project_domain(self, x):
        x = np.asarray(x, dtype=float)
        return x if self.lower_bound is None else np.maximum(x, self.lower_bound)

    def coefficients(self, x) -> np.ndarray:
        return self.M @ self._k(x)

    def _k(self, x):
        r = _dist(np.asarray(x, dtype=float)[None, :], self.experts.X, self.wx)[0]
        return kernel_eval(self.kernel, r), r

    def apply(self, x):
        k, _ = self._k(x)
        return self.A.T @ k

    def _dk(self, x):
        """Euclidean Jacobian of k(x), shape (n0, d)."""
        x = np.asarray(x, dtype=float)
        _, r = self._k(x)
        fac = _kernel_dr_over_r(self.kernel, r)
        return fac[:, None] * (self.wx * (x[None, :] - self.experts.X))

    def jacobian(self, x):
        return self.A.T @ self._dk(x)

    def deriv(self, x, h):
        return self.jacobian(x) @ np.asarray(h, dtype=float)

    def deriv_adjoint(self, x, w):
        return (self.jacobian(x).T @ (self.wy * np.asarray(w, dtype=float))) / self.wx


def vrkhs_fit(experts: ExpertSet, kernel: KernelSpec, alpha: float, wx=None, wy=None, lower_bound=None) -> VRKHSModel:
    return VRKHSModel(experts, kernel, alpha, wx, wy, lower_bound)


def vrkhs_predict(model: VRKHSModel, x_query) -> np.ndarray:
    return model.apply(x_query)


def vrkhs_objective(model: VRKHSModel, A=None) -> float:
    """(1/n0) sum_l |y^(l) - F(x^(l))|^2 + alpha |F|_H^2 for coefficient rows A."""
    A = model.A if A is None else np.asarray(A, dtype=float)
    K = model.gram
    fit = K @ A - model.experts.Y
    data = np.sum(model.wy * fit * fit) / model.experts.n0
    reg = np.sum((A * model.wy) @ A.T * K)
    return float(data + model.alpha * reg)


def save_experts_csv(experts: ExpertSet, path) -> None:
    dx, dy = experts.X.shape[1], experts.Y.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(dx)] + [f"y{i}" for i in range(dy)])
        for x, y in zip(experts.X, experts.Y):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])


def load_experts_csv(path) -> ExpertSet:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    head = [h.strip() for h in rows[0]]
    xi = [i for i, h in enumerate(head) if h.startswith("x")]
    yi = [i for i, h in enumerate(head) if h.startswith("y")]
    if not xi or not yi or len(xi) + len(yi) != len(head):
        raise DimensionError("expert CSV header must be x0..xm,y0..yn")
    data = np.array([[float(c) for c in r] for r in rows[1:] if r])
    return ExpertSet(data[:, xi], data[:, yi])
