"""Shallow neural-network functions.

Covers the activation catalog, affine linear networks (ALNN) with their
parameter Jacobian, radial quadratic atoms (RQNN) and the wavelet
dictionary built from them, orthogonal greedy approximation, and
Gauss-Newton fitting of network parameters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import expit, gammaln

from .errors import ArgumentError, DegenerateParametrizationError, DimensionError
from .iterative import IterationLog
from .numcore import GridFunction1D, trapezoid_weights

__all__ = [
    "Activation",
    "activation_eval",
    "ALNNParams",
    "alnn_eval",
    "alnn_jacobian",
    "RQNNAtom",
    "rqnn_atom_eval",
    "rqnn_wavelet_eval",
    "rqnn_normalizer",
    "wavelet_dictionary",
    "GreedyResult",
    "greedy_approximate",
    "GaussNewtonOptions",
    "gauss_newton_fit",
    "save_alnn_csv",
    "load_alnn_csv",
]

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

# kind -> (default a, default b, highest supported derivative order)
_CATALOG = {
    "sigmoid": (1.0, 0.0, 2),
    "tanh": (1.0, 0.0, 2),
    "relu": (1.0, 0.0, 2),
    "relu_pow": (1.0, 0.0, 2),
    "relu6": (1.0, 0.0, 2),
    "leaky_relu": (0.01, 0.0, 2),
    "hard_swish": (1.0, 0.0, 2),
    "log_sigmoid": (1.0, 0.0, 2),
    "softplus": (1.0, 0.0, 2),
    "elu": (1.0, 0.0, 2),
    "celu": (1.0, 0.0, 2),
    "selu": (1.0, 0.0, 2),
    "hard_shrink": (0.5, 0.0, 0),
    "soft_shrink": (0.5, 0.0, 2),
    "hard_sigmoid": (1.0, 0.0, 2),
    "gaussian": (1.0, 0.0, 2),
    "heaviside": (1.0, 0.0, 0),
    "linear": (1.0, 0.0, 2),
}


@dataclass(frozen=True)
class Activation:
    """An activation function from the catalog.

    ``a`` and ``b`` are the shape parameters of the chosen kind: slope and
    offset for sigmoid/relu/heaviside/linear, width and center for gaussian,
    the negative-side parameter for leaky_relu/elu/celu and the threshold for
    the shrinkage and hard_sigmoid kinds. ``k`` is the power of relu_pow.
    """

    kind: str = "tanh"
    a: float | None = None
    b: float | None = None
    k: int = 2

    def __post_init__(self):
        if self.kind not in _CATALOG:
            raise ArgumentError(f"unknown activation {self.kind!r}")
        da, db, _ = _CATALOG[self.kind]
        if self.a is None:
            object.__setattr__(self, "a", da)
        if self.b is None:
            object.__setattr__(self, "b", db)
        if self.kind == "relu_pow" and self.k < 1:
            raise ArgumentError("relu_pow needs k >= 1")
        if self.kind in ("gaussian", "hard_shrink", "soft_shrink", "hard_sigmoid", "celu") and self.a <= 0:
            raise ArgumentError(f"{self.kind} parameter must be > 0")

    @property
    def max_order(self) -> int:
        return _CATALOG[self.kind][2]


def _eval(act: Activation, s: np.ndarray, order: int) -> np.ndarray:
    a, b, kind = act.a, act.b, act.kind
    z = np.zeros_like(s)
    if kind == "sigmoid":
        v = expit(a * s + b)
        return (v, a * v * (1 - v), a * a * v * (1 - v) * (1 - 2 * v))[order]
    if kind == "tanh":
        t = np.tanh(s)
        return (t, 1 - t * t, -2 * t * (1 - t * t))[order]
    if kind == "linear":
        return (a * s + b, z + a, z)[order]
    if kind == "relu":
        u = a * s + b
        return (np.maximum(u, 0.0), a * (u > 0), z)[order]
    if kind == "relu_pow":
        k = act.k
        sp = np.maximum(s, 0.0)
        if order == 0:
            return sp**k
        if order == 1:
            return k * sp ** (k - 1) if k > 1 else (s > 0).astype(float)
        return k * (k - 1) * sp ** (k - 2) if k > 2 else (z + 2.0 * (s > 0) if k == 2 else z)
    if kind == "relu6":
        return (np.clip(s, 0.0, 6.0), ((s > 0) & (s < 6)).astype(float), z)[order]
    if kind == "leaky_relu":
        return (np.where(s > 0, s, a * s), np.where(s > 0, 1.0, a), z)[order]
    if kind == "hard_swish":
        mid = (s > -3) & (s < 3)
        if order == 0:
            return s * np.clip(s + 3.0, 0.0, 6.0) / 6.0
        if order == 1:
            return np.where(s >= 3, 1.0, np.where(mid, (2 * s + 3) / 6.0, 0.0))
        return np.where(mid, 1.0 / 3.0, 0.0)
    if kind == "log_sigmoid":
        if order == 0:
            return -np.logaddexp(0.0, -s)
        v = expit(s)
        return 1 - v if order == 1 else -v * (1 - v)
    if kind == "softplus":
        if order == 0:
            return np.logaddexp(0.0, s)
        v = expit(s)
        return v if order == 1 else v * (1 - v)
    if kind in ("elu", "selu"):
        al, lam = (a, 1.0) if kind == "elu" else (SELU_ALPHA, SELU_LAMBDA)
        e = np.exp(np.minimum(s, 0.0))
        neg = s < 0 if kind == "elu" else s <= 0
        out = (np.where(neg, al * (e - 1), s), np.where(neg, al * e, 1.0), np.where(neg, al * e, 0.0))[order]
        return lam * out
    if kind == "celu":
        e = np.exp(np.minimum(s, 0.0) / a)
        return (np.where(s < 0, a * (e - 1), s), np.where(s < 0, e, 1.0), np.where(s < 0, e / a, 0.0))[order]
    if kind == "hard_shrink":
        return np.where(np.abs(s) > a, s, 0.0)
    if kind == "soft_shrink":
        return (np.sign(s) * np.maximum(np.abs(s) - a, 0.0), (np.abs(s) > a).astype(float), z)[order]
    if kind == "hard_sigmoid":
        inside = (s > -a) & (s < a)
        return (np.clip(s / (2 * a) + 0.5, 0.0, 1.0), np.where(inside, 1.0 / (2 * a), 0.0), z)[order]
    if kind == "gaussian":
        g = np.exp(-((s - b) ** 2) / (2 * a * a))
        return (g, -(s - b) / a**2 * g, ((s - b) ** 2 / a**4 - 1 / a**2) * g)[order]
    # heaviside
    return (a * s + b > 0).astype(float)


def activation_eval(act: Activation, s, order: int = 0):
    """Value (order 0) or derivative (orders 1, 2) of the activation.

    At kinks the derivative takes the subgradient value 0 or the one-sided
    value given by the case split.
    """
    if order not in (0, 1, 2) or order > act.max_order:
        raise ArgumentError(f"order {order} not supported by {act.kind}")
    arr = np.asarray(s, dtype=float)
    out = _eval(act, arr, order)
    return float(out) if arr.ndim == 0 else np.asarray(out, dtype=float)


@dataclass(frozen=True)
class ALNNParams:
    """Per neuron j: outer weight alpha_j, inner weights w_j (m,), bias theta_j."""

    alpha: np.ndarray
    w: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        al = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        w = np.asarray(self.w, dtype=float)
        w = w.reshape(al.size, -1) if w.size else w.reshape(al.size, 0)
        if th.size != al.size or w.shape[0] != al.size or w.shape[1] < 1:
            raise DimensionError("ALNN parameter blocks have inconsistent sizes")
        object.__setattr__(self, "alpha", al)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "theta", th)

    @property
    def neurons(self) -> int:
        return self.alpha.size

    @property
    def dim(self) -> int:
        return self.w.shape[1]

    def to_vector(self) -> np.ndarray:
        """Flatten as (alpha_j, w_j, theta_j) for j = 1..N, length (m+2)N."""
        return np.column_stack([self.alpha, self.w, self.theta]).ravel()

    @classmethod
    def from_vector(cls, p, m: int) -> "ALNNParams":
        p = np.asarray(p, dtype=float)
        if p.size % (m + 2):
            raise DimensionError(f"parameter length {p.size} is not a multiple of m+2={m + 2}")
        blk = p.reshape(-1, m + 2)
        return cls(blk[:, 0], blk[:, 1:-1], blk[:, -1])

    @classmethod
    def random(cls, neurons: int, m: int, rng: np.random.Generator, scale: float = 1.0) -> "ALNNParams":
        return cls(rng.normal(0, scale, neurons), rng.normal(0, scale, (neurons, m)), rng.normal(0, scale, neurons))


def _samples(p: ALNNParams, s):
    S = np.asarray(s, dtype=float)
    single = S.ndim == 0 or (S.ndim == 1 and p.dim > 1)
    S = np.atleast_1d(S)
    if S.ndim == 1:
        S = S.reshape(-1, p.dim) if p.dim > 1 else S[:, None]
    if S.shape[1] != p.dim:
        raise ArgumentError(f"sample dimension {S.shape[1]} does not match network input size {p.dim}")
    return S, single


def alnn_eval(p: ALNNParams, act: Activation, s):
    """sum_j alpha_j sigma(w_j . s + theta_j); scalar for one sample, else array."""
    S, single = _samples(p, s)
    out = _eval(act, S @ p.w.T + p.theta, 0) @ p.alpha
    return float(out[0]) if single else out


def alnn_jacobian(p: ALNNParams, act: Activation, s) -> np.ndarray:
    """Gradient with respect to the flattened parameters, one row per sample."""
    if act.max_order < 1:
        raise ArgumentError(f"{act.kind} is not differentiable")
    S, single = _samples(p, s)
    u = S @ p.w.T + p.theta
    v = _eval(act, u, 0)
    dv = _eval(act, u, 1) * p.alpha
    K, N, m = S.shape[0], p.neurons, p.dim
    J = np.empty((K, N, m + 2))
    J[:, :, 0] = v
    J[:, :, 1:-1] = dv[:, :, None] * S[:, None, :]
    J[:, :, -1] = dv
    J = J.reshape(K, N * (m + 2))
    return J[0] if single else J


def save_alnn_csv(p: ALNNParams, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha"] + [f"w{i}" for i in range(p.dim)] + ["theta"])
        for row in np.column_stack([p.alpha, p.w, p.theta]):
            w.writerow([repr(float(v)) for v in row])


def load_alnn_csv(path) -> ALNNParams:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(ln for ln in fh if not ln.startswith("#")) if r]
    data = np.array([[float(c) for c in r] for r in rows[1:]])
    return ALNNParams(data[:, 0], data[:, 1:-1], data[:, -1])


# RQNN atoms -----------------------------------------------------------------


def _radial_profile(act: Activation | None):
    """sigma used inside phi(s) = C sigma(r^2 - |s|^2).

    ``None`` selects exp(u - r^2), i.e. phi proportional to exp(-|s|^2).
    Logistic and softplus also decay fast enough and are accepted.
    """
    if act is None:
        return None
    if act.kind not in ("sigmoid", "softplus"):
        raise ArgumentError(f"{act.kind} does not decay as required for radial atoms")
    if act.kind == "sigmoid" and act.a <= 0:
        raise ArgumentError("radial logistic profile needs a > 0")
    return act


def _sigma_radial(act, u, r):
    if act is None:
        return np.exp(u - r * r)
    return _eval(act, u, 0)


@lru_cache(maxsize=64)
def _normalizer(key, m: int, r: float) -> float:
    act = None if key is None else Activation(*key)

    def f(rho):
        return rho ** (m - 1) * _sigma_radial(act, np.asarray(r * r - rho * rho), r)

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    sphere = 2.0 * np.exp(0.5 * m * np.log(np.pi) - gammaln(0.5 * m))
    return 1.0 / (sphere * val)


def rqnn_normalizer(m: int = 1, act: Activation | None = None, r: float = 1.0) -> float:
    """C_m making phi integrate to one, computed by radial quadrature."""
    act = _radial_profile(act)
    key = None if act is None else (act.kind, act.a, act.b, act.k)
    return _normalizer(key, m, float(r))


@dataclass(frozen=True)
class RQNNAtom:
    """Scale index ``k`` and integer shift ``kvec``; center is 2^{-k/m} kvec."""

    k: int
    kvec: tuple

    def __post_init__(self):
        kv = tuple(int(v) for v in np.atleast_1d(self.kvec))
        if not kv:
            raise DimensionError("kvec must be nonempty")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "kvec", kv)

    @property
    def m(self) -> int:
        return len(self.kvec)

    @property
    def center(self) -> np.ndarray:
        return 2.0 ** (-self.k / self.m) * np.asarray(self.kvec, dtype=float)

    @property
    def q_plus(self) -> tuple:
        return (2.0 ** (2 * self.k / self.m), *self.center)

    @property
    def q_minus(self) -> tuple:
        return (2.0 ** ((2 * self.k - 2) / self.m), *self.center)

    @classmethod
    def from_q_plus(cls, q) -> "RQNNAtom":
        q = np.asarray(q, dtype=float)
        m = q.size - 1
        k = int(round(0.5 * m * np.log2(q[0])))
        kvec = np.rint(2.0 ** (k / m) * q[1:]).astype(int)
        return cls(k, tuple(kvec))

    @classmethod
    def at(cls, k: int, center) -> "RQNNAtom":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(k, tuple(np.rint(2.0 ** (k / c.size) * c).astype(int)))


def _pts(s, m):
    S = np.asarray(s, dtype=float)
    return (S[..., None] if m == 1 else S), S


def _scaling(k, center, s, act, r, m):
    S, _ = _pts(s, m)
    d2 = np.sum((S - center) ** 2, axis=-1)
    C = rqnn_normalizer(m, act, r)
    return 2.0**k * C * _sigma_radial(_radial_profile(act), r * r - 2.0 ** (2 * k / m) * d2, r)


def rqnn_atom_eval(atom: RQNNAtom, act: Activation | None, s, r: float = 1.0):
    """Scaling function S_{k,t}(s) = 2^k phi(2^{k/m}(s - t))."""
    out = _scaling(atom.k, atom.center, s, act, r, atom.m)
    return float(out) if np.ndim(out) == 0 else out


def rqnn_wavelet_eval(atom: RQNNAtom, act: Activation | None, s, r: float = 1.0):
    """Wavelet psi_{k,t} = 2^{-k/2}(S_{k,t} - S_{k-1,t}), both at the atom's center."""
    c = atom.center
    out = 2.0 ** (-atom.k / 2) * (_scaling(atom.k, c, s, act, r, atom.m) - _scaling(atom.k - 1, c, s, act, r, atom.m))
    return float(out) if np.ndim(out) == 0 else out


def wavelet_dictionary(max_scale: int, lo: float = 0.0, hi: float = 1.0) -> list[RQNNAtom]:
    """1-D atoms with |k| <= max_scale and centers covering [lo, hi] plus one on each side."""
    if max_scale < 0:
        raise ArgumentError("max_scale must be >= 0")
    atoms = []
    for k in range(-max_scale, max_scale + 1):
        step = 2.0**-k
        j0 = int(np.floor(lo / step)) - 1
        j1 = int(np.ceil(hi / step)) + 1
        atoms.extend(RQNNAtom(k, (j,)) for j in range(j0, j1 + 1))
    return atoms


@dataclass(frozen=True)
class GreedyResult:
    approximant: GridFunction1D
    atoms: tuple
    coefficients: np.ndarray
    residuals: tuple


def greedy_approximate(
    f: GridFunction1D, max_scale: int, N: int, act: Activation | None = None, dictionary=None
) -> GreedyResult:
    """Orthogonal greedy approximation by RQNN wavelets in the discrete L^2 norm.

    Each step adds the atom with the largest normalized correlation to the
    residual (ties to the first in dictionary order) and re-projects f onto
    the span of all atoms chosen so far.
    """
    if N < 1:
        raise ArgumentError("atom budget N must be >= 1")
    atoms = list(dictionary) if dictionary is not None else wavelet_dictionary(max_scale)
    if not atoms:
        raise ArgumentError("dictionary is empty")
    fv = np.asarray(f.values, dtype=float)
    s = f.s
    sw = np.sqrt(trapezoid_weights(f.n))
    G = np.stack([rqnn_wavelet_eval(a, act, s) for a in atoms]) * sw
    gn = np.linalg.norm(G, axis=1)
    usable = gn > 0
    b = fv * sw
    r = b.copy()
    chosen: list[int] = []
    res = []
    coef = np.zeros(0)
    for _ in range(min(N, int(usable.sum()))):
        score = np.zeros(len(atoms))
        score[usable] = np.abs(G[usable] @ r) / gn[usable]
        score[chosen] = -1.0
        j = int(np.argmax(score))
        chosen.append(j)
        A = G[chosen].T
        coef, *_ = np.linalg.lstsq(A, b, rcond=None)
        r = b - A @ coef
        res.append(float(np.linalg.norm(r)))
    approx = (coef @ G[chosen]) / sw if chosen else np.zeros_like(fv)
    return GreedyResult(GridFunction1D(approx), tuple(atoms[j] for j in chosen), coef, tuple(res))


# Gauss-Newton fitting -------------------------------------------------------


@dataclass(frozen=True)
class GaussNewtonOptions:
    max_iter: int = 50
    tol: float = 1e-12
    rcond: float = 1e-10
    armijo: float = 1e-4
    max_backtracks: int = 30


def gauss_newton_fit(target: GridFunction1D, p_init: ALNNParams, act: Activation | None = None, options=None):
    """Fit ALNN parameters to samples of ``target`` on its grid.

    Steps use the Moore-Penrose inverse of the weighted Jacobian with
    singular values below ``rcond * max`` dropped, damped by Armijo
    backtracking on the residual norm. Returns ``(p_fit, IterationLog)``;
    the log's ``residual`` holds the discrete L^2 residual per iterate.
    """
    act = act or Activation("tanh")
    opt = options or GaussNewtonOptions()
    if p_init.dim != 1:
        raise DimensionError("grid targets are one-dimensional")
    s = target.s
    sw = np.sqrt(trapezoid_weights(target.n))
    y = np.asarray(target.values, dtype=float)
    p = p_init.to_vector()

    def resid(q):
        return sw * (alnn_eval(ALNNParams.from_vector(q, 1), act, s) - y)

    r = resid(p)
    rn = float(np.linalg.norm(r))
    log = IterationLog()
    log.residual.append(rn)
    log.mu_or_alpha.append(float("nan"))
    log.stop_reason = "max_iter"
    for _ in range(opt.max_iter):
        if rn <= opt.tol:
            log.stop_reason = "converged"
            break
        J = sw[:, None] * alnn_jacobian(ALNNParams.from_vector(p, 1), act, s)
        U, sv, Vt = np.linalg.svd(J, full_matrices=False)
        if sv.size == 0 or sv[0] == 0.0:
            raise DegenerateParametrizationError("Jacobian vanishes; all directions truncated")
        keep = sv > opt.rcond * sv[0]
        coords = U[:, keep].T @ r
        step = -(Vt[keep].T @ (coords / sv[keep]))
        # directional derivative of |r|^2 along the step is -2 |P r|^2
        decrease = float(coords @ coords)
        t = 1.0
        for _ in range(opt.max_backtracks):
            cand = p + t * step
            rc = resid(cand)
            rcn = float(np.linalg.norm(rc))
            if rcn**2 <= rn**2 - 2.0 * opt.armijo * t * decrease or rcn <= opt.tol:
                break
            t *= 0.5
        else:
            log.stop_reason = "stalled"
            break
        p, r, rn = cand, rc, rcn
        log.residual.append(rn)
        log.mu_or_alpha.append(t)
    else:
        if rn <= opt.tol:
            log.stop_reason = "converged"
    log.error.extend([float("nan")] * len(log.residual))
    return ALNNParams.from_vector(p, 1), log
