"""Iterative regularization: Landweber, IRGN and the data-driven variants.

Every scheme runs through one driver that evaluates the residual, checks
the stopping rule, applies the update and records an :class:`IterationLog`.
A run never raises on numerical trouble; it stops with a status instead
(``diverged``, ``solve_failed``) so the caller can decide what to do.

Landweber-type steps use ``omega = scale**2`` as step size. If no scale is
given it is set once from a power-iteration estimate of ``|F'[x_start]|``
so that ``|scale F'| = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError
from .numcore import GridFunction1D
from .problems import ForwardProblem, tangential_cone_ratio

__all__ = [
    "StoppingRule",
    "IterationLog",
    "DataDrivenPrior",
    "operator_norm_estimate",
    "landweber",
    "modified_landweber",
    "irgn",
    "apriori_stop_index",
    "two_step_irli",
    "irli_variant",
    "irgn_variant",
    "ksest_bound",
    "resest_threshold",
    "geometric_schedule",
]


def _arr(v) -> np.ndarray:
    return v.values.copy() if isinstance(v, GridFunction1D) else np.array(v, dtype=float)


@dataclass(frozen=True)
class StoppingRule:
    """``discrepancy`` (residual <= tau delta), ``apriori`` (fixed k_star)
    or ``max_iterations``. ``max_iter`` caps every kind."""

    kind: str = "discrepancy"
    delta: float = 0.0
    tau: float = 2.5
    k_star: int | None = None
    max_iter: int = 5000

    def __post_init__(self):
        if self.kind not in ("discrepancy", "apriori", "max_iterations"):
            raise ArgumentError(f"unknown stopping rule {self.kind!r}")
        if self.kind == "discrepancy" and not self.tau > 1.0:
            raise ArgumentError("discrepancy principle needs tau > 1")
        if self.delta < 0.0:
            raise ArgumentError("delta must be >= 0")
        if self.kind == "apriori" and (self.k_star is None or self.k_star < 0):
            raise ArgumentError("a-priori stopping needs k_star >= 0")
        if self.max_iter < 0:
            raise ArgumentError("max_iter must be >= 0")

    @classmethod
    def discrepancy(cls, delta: float, tau: float = 2.5, max_iter: int = 5000) -> "StoppingRule":
        return cls("discrepancy", delta=delta, tau=tau, max_iter=max_iter)

    @classmethod
    def apriori(cls, k_star: int) -> "StoppingRule":
        return cls("apriori", k_star=k_star, max_iter=k_star)

    @classmethod
    def max_iterations(cls, k: int) -> "StoppingRule":
        return cls("max_iterations", max_iter=k)


@dataclass
class IterationLog:
    residual: list = field(default_factory=list)
    error: list = field(default_factory=list)
    mu_or_alpha: list = field(default_factory=list)
    half_residual: list = field(default_factory=list)
    cone_samples: list = field(default_factory=list)
    stop_reason: str = ""
    scale: float = 1.0

    @property
    def stop_index(self) -> int:
        return len(self.residual) - 1

    @property
    def eta_cone(self) -> float:
        """Largest sampled tangential-cone ratio (nan if none was sampled)."""
        vals = [c for c in self.cone_samples if np.isfinite(c)]
        return float(max(vals)) if vals else float("nan")

    def rows(self):
        for k in range(len(self.residual)):
            yield k, self.residual[k], self.error[k], self.mu_or_alpha[k]


@dataclass(frozen=True)
class DataDrivenPrior:
    """Prior information for the IRLI/IRGN variants.

    mode: ``none`` | ``single`` (x0) | ``weighted_mean`` | ``cyclic`` |
    ``randomized`` (use ``U``) | ``supervised`` (use ``learned`` operator).
    """

    mode: str = "single"
    x0: np.ndarray | None = None
    U: tuple = ()
    learned: ForwardProblem | None = None
    seed: int = 0

    def __post_init__(self):
        modes = ("none", "single", "weighted_mean", "cyclic", "randomized", "supervised")
        if self.mode not in modes:
            raise ArgumentError(f"unknown prior mode {self.mode!r}")
        if self.mode == "single" and self.x0 is None:
            raise ArgumentError("single prior needs x0")
        if self.mode in ("weighted_mean", "cyclic", "randomized") and len(self.U) == 0:
            raise ArgumentError("unsupervised prior needs a nonempty set U")
        if self.mode == "supervised" and self.learned is None:
            raise ArgumentError("supervised prior needs a learned operator")
        object.__setattr__(self, "U", tuple(_arr(u) for u in self.U))

    def index_sequence(self, count: int) -> list[int]:
        """Element indices used at steps 0..count-1 (cyclic or randomized)."""
        n0 = len(self.U)
        if self.mode == "cyclic":
            return [k - n0 * (k // n0) for k in range(count)]
        if self.mode == "randomized":
            return [int(i) for i in np.random.default_rng(self.seed).integers(0, n0, size=count)]
        raise ArgumentError("index sequence only exists for cyclic or randomized priors")


def geometric_schedule(a0: float = 1.0, q: float = 0.5) -> Callable[[int], float]:
    return lambda k: a0 * q**k


def _schedule(s, default) -> Callable[[int], float]:
    if s is None:
        return default
    if callable(s):
        return s
    seq = np.asarray(s, dtype=float)

    def get(k):
        if k >= seq.size:
            raise ArgumentError("schedule exhausted before the iteration stopped")
        return float(seq[k])

    return get


def operator_norm_estimate(problem: ForwardProblem, x, iters: int = 100, seed: int = 0) -> float:
    """Power iteration for |F'[x]| in the problem's inner products."""
    x = _arr(x)
    v = np.random.default_rng(seed).standard_normal(x.size)
    v /= problem.param_norm(v)
    lam = 0.0
    for _ in range(iters):
        w = problem.deriv_adjoint(x, problem.deriv(x, v))
        nw = problem.param_norm(w)
        if nw == 0.0:
            return 0.0
        new = problem.param_inner(v, w)
        v = w / nw
        if abs(new - lam) <= 1e-12 * abs(new):
            lam = new
            break
        lam = new
    return float(np.sqrt(max(lam, 0.0)))


def _run(problem, ydelta, x_start, stop: StoppingRule, step, x_ref=None, measure_cone=None, log=None):
    """Shared iteration driver. ``step(k, x, res)`` returns (x_new, param, half_residual)."""
    y = _arr(ydelta)
    x = problem.project_domain(_arr(x_start))
    log = log or IterationLog()
    xr = None if x_ref is None else _arr(x_ref)
    if measure_cone is None:
        measure_cone = xr is not None
    fx = problem.apply(x)
    r0 = problem.data_norm(fx - y)
    k = 0
    while True:
        res = fx - y
        rn = problem.data_norm(res)
        log.residual.append(rn)
        log.error.append(problem.param_norm(x - xr) if xr is not None else float("nan"))
        if measure_cone and xr is not None and np.any(x != xr):
            log.cone_samples.append(tangential_cone_ratio(problem, x, xr))
            log.cone_samples.append(tangential_cone_ratio(problem, xr, x))
        if not np.isfinite(rn) or rn > 1e6 * max(r0, 1e-300):
            log.mu_or_alpha.append(float("nan"))
            log.stop_reason = "diverged"
            break
        if stop.kind == "discrepancy" and rn <= stop.tau * stop.delta:
            log.mu_or_alpha.append(float("nan"))
            log.stop_reason = "discrepancy"
            break
        if stop.kind == "apriori" and k >= stop.k_star:
            log.mu_or_alpha.append(float("nan"))
            log.stop_reason = "apriori"
            break
        if k >= stop.max_iter:
            log.mu_or_alpha.append(float("nan"))
            log.stop_reason = "max_iterations"
            break
        try:
            x_new, param, half = step(k, x, res)
        except np.linalg.LinAlgError:
            log.mu_or_alpha.append(float("nan"))
            log.stop_reason = "solve_failed"
            break
        log.mu_or_alpha.append(float(param))
        if half is not None:
            log.half_residual.append(half)
        x_new = problem.project_domain(x_new)
        if measure_cone and xr is not None and np.any(x_new != x):
            log.cone_samples.append(tangential_cone_ratio(problem, x, x_new))
        x = x_new
        fx = problem.apply(x)
        k += 1
    return x, log


def _omega(problem, x_start, scale):
    if scale is None:
        est = operator_norm_estimate(problem, x_start)
        scale = 1.0 / est if est > 0 else 1.0
    return float(scale) ** 2, float(scale)


def modified_landweber(problem: ForwardProblem, surrogate, ydelta, x_start, stop: StoppingRule, scale=None, x_ref=None):
    """x_{k+1} = x_k - omega G'[x_k]^*(F[x_k] - yδ) with projection."""
    omega, sc = _omega(problem, x_start, scale)

    def step(k, x, res):
        return x - omega * surrogate.deriv_adjoint(x, res), omega, None

    log = IterationLog(scale=sc)
    return _run(problem, ydelta, x_start, stop, step, x_ref, log=log)


def landweber(problem: ForwardProblem, ydelta, x_start, stop: StoppingRule, scale=None, x_ref=None):
    """Projected Landweber iteration with discrepancy or fixed-count stopping."""
    return modified_landweber(problem, problem, ydelta, x_start, stop, scale, x_ref)


def _weighted_solve(problem, x, rhs_grad, reg, extra=None):
    """Solve (J*J + reg I + extra) d = rhs_grad in the problem metric.

    ``rhs_grad`` is a Riesz gradient (X-space vector); ``extra`` an optional
    (matrix in weighted form) added to the normal matrix.
    """
    J = problem.jacobian(x)
    wx = np.broadcast_to(np.asarray(problem.wx, dtype=float), x.shape)
    wy = np.broadcast_to(np.asarray(problem.wy, dtype=float), (J.shape[0],))
    N = J.T @ (wy[:, None] * J) + reg * np.diag(wx)
    if extra is not None:
        N = N + extra
    b = wx * rhs_grad
    if np.linalg.cond(N) > 1e14:
        return np.linalg.lstsq(N, b, rcond=None)[0]
    return np.linalg.solve(N, b)


def _validate_ratio(a_prev, a_next, r):
    if not (a_next > 0.0 and 1.0 <= a_prev / a_next <= r * (1 + 1e-12)):
        raise ArgumentError(f"schedule violates 1 <= alpha_k/alpha_(k+1) <= {r}: {a_prev} -> {a_next}")


def irgn(problem: ForwardProblem, ydelta, x_start, x0_prior, alpha_schedule=None, stop: StoppingRule | None = None,
         x_ref=None, ratio_bound: float = 2.0):
    """Iteratively regularized Gauss-Newton with alpha_k defaulting to 2^-k."""
    prior = DataDrivenPrior("single", x0=_arr(x0_prior))
    return irgn_variant(problem, ydelta, x_start, prior, alpha_schedule, stop, x_ref=x_ref, ratio_bound=ratio_bound)


def apriori_stop_index(alpha_schedule, delta: float, eta: float, case: int = 2, kmax: int = 100000) -> int:
    """A-priori stopping index.

    case 2: first k with eta alpha_k <= delta.
    case 1: first k with delta / sqrt(alpha_k) <= eta.
    """
    if not (delta > 0.0 and eta > 0.0):
        raise ArgumentError("delta and eta must be > 0")
    if case not in (1, 2):
        raise ArgumentError("case must be 1 or 2")
    get = _schedule(alpha_schedule, geometric_schedule())
    for k in range(kmax):
        try:
            a = get(k)
        except ArgumentError:
            break
        if a <= 0.0:
            raise ArgumentError("schedule must stay positive")
        if (case == 2 and eta * a <= delta) or (case == 1 and delta / np.sqrt(a) <= eta):
            return k
    raise ArgumentError("schedule never satisfies the a-priori rule")


def two_step_irli(problem: ForwardProblem, ydelta, x_start, x0_prior, mu_schedule=None, stop: StoppingRule | None = None,
                  scale=None, x_ref=None):
    """x_{k+1/2} = x_k - omega F'*(F x_k - yδ);  x_{k+1} = (1-mu_k) x_{k+1/2} + mu_k x0."""
    prior = DataDrivenPrior("single", x0=_arr(x0_prior))
    return irli_variant(problem, ydelta, x_start, prior, mu_schedule, stop, two_step=True, scale=scale, x_ref=x_ref)


def _target(prior: DataDrivenPrior, k: int, seq: list | None):
    if prior.mode == "single":
        return prior.x0
    if prior.mode == "weighted_mean":
        return np.mean(np.stack(prior.U), axis=0)
    return prior.U[seq[k]]


def _indices(prior, stop):
    if prior.mode in ("cyclic", "randomized"):
        return prior.index_sequence(stop.max_iter + 1)
    return None


def irli_variant(problem: ForwardProblem, ydelta, x_start, prior: DataDrivenPrior, mu_schedule=None,
                 stop: StoppingRule | None = None, two_step: bool = False, scale=None, x_ref=None):
    """Iteratively regularized Landweber with data-driven prior terms.

    One-step form: x_{k+1} = x_k - omega F'*(F x_k - yδ) - mu_k P_k(x_k).
    Two-step form: the data step gives x_{k+1/2}, then
    x_{k+1} = x_{k+1/2} - mu_k P_k(x_{k+1/2}).
    P_k is x - u_k for unsupervised priors and omega Fl'*(Fl x - yδ) for
    the supervised prior (evaluated at the half step in the two-step form).
    """
    stop = stop or StoppingRule.max_iterations(100)
    mu = _schedule(mu_schedule, geometric_schedule(0.5, 0.5))
    omega, sc = _omega(problem, x_start, scale)
    y = _arr(ydelta)
    seq = _indices(prior, stop)

    def prior_term(k, x):
        if prior.mode == "none":
            return np.zeros_like(x)
        if prior.mode == "supervised":
            L = prior.learned
            return omega * L.deriv_adjoint(x, L.apply(x) - y)
        return x - _target(prior, k, seq)

    def step(k, x, res):
        m = mu(k)
        if not 0.0 <= m <= 1.0:
            raise ArgumentError(f"mu_k must lie in [0, 1], got {m}")
        grad = omega * problem.deriv_adjoint(x, res)
        if two_step:
            xh = problem.project_domain(x - grad)
            half = problem.data_norm(problem.apply(xh) - y)
            return xh - m * prior_term(k, xh), m, half
        return x - grad - m * prior_term(k, x), m, None

    log = IterationLog(scale=sc)
    return _run(problem, ydelta, x_start, stop, step, x_ref, log=log)


def irgn_variant(problem: ForwardProblem, ydelta, x_start, prior: DataDrivenPrior, alpha_schedule=None,
                 stop: StoppingRule | None = None, two_step: bool = False, x_ref=None, ratio_bound: float = 2.0):
    """IRGN with the prior point replaced by data-driven information.

    Unsupervised: (alpha_k I + J*J)^{-1}(J* r + alpha_k (x - u_k)).
    Supervised: (J*J + alpha_k Jl*Jl)^{-1}(J* r + alpha_k Jl*(Fl x - yδ)).
    Two-step forms split the data and prior corrections, reusing the same
    normal operator built at x_k.
    """
    stop = stop or StoppingRule.max_iterations(50)
    alpha = _schedule(alpha_schedule, geometric_schedule(1.0, 0.5))
    y = _arr(ydelta)
    seq = _indices(prior, stop)
    prev = {"a": None}

    def step(k, x, res):
        a = alpha(k)
        if prev["a"] is not None and a < np.finfo(float).tiny:
            a = prev["a"]  # hold the last normal value once the schedule underflows
        if prev["a"] is not None:
            _validate_ratio(prev["a"], a, ratio_bound)
        elif not a > 0.0:
            raise ArgumentError("alpha_0 must be > 0")
        prev["a"] = a
        g = problem.deriv_adjoint(x, res)
        if prior.mode == "supervised":
            L = prior.learned
            Jl = L.jacobian(x)
            wl = np.broadcast_to(np.asarray(L.wy, dtype=float), (Jl.shape[0],))
            extra = a * (Jl.T @ (wl[:, None] * Jl))
            if not two_step:
                gl = L.deriv_adjoint(x, L.apply(x) - y)
                return x - _weighted_solve(problem, x, g + a * gl, 0.0, extra), a, None
            xh = problem.project_domain(x - _weighted_solve(problem, x, g, 0.0, extra))
            gl = L.deriv_adjoint(xh, L.apply(xh) - y)
            half = problem.data_norm(problem.apply(xh) - y)
            return xh - a * _weighted_solve(problem, x, gl, 0.0, extra), a, half
        if prior.mode == "none":
            return x - _weighted_solve(problem, x, g, a), a, None
        u = _target(prior, k, seq)
        if not two_step:
            return x - _weighted_solve(problem, x, g + a * (x - u), a), a, None
        xh = problem.project_domain(x - _weighted_solve(problem, x, g, a))
        half = problem.data_norm(problem.apply(xh) - y)
        return xh - a * _weighted_solve(problem, x, xh - u, a), a, half

    _schedule_check(alpha, stop, ratio_bound)
    return _run(problem, ydelta, x_start, stop, step, x_ref)


def _schedule_check(alpha, stop, r):
    """Validate an explicit schedule up front when its length is known."""
    n = min(stop.max_iter, 10000)
    a_prev = alpha(0)
    if not a_prev > 0.0:
        raise ArgumentError("alpha_0 must be > 0")
    for k in range(1, n + 1):
        try:
            a = alpha(k)
        except ArgumentError:
            return
        if a < np.finfo(float).tiny:
            # geometric schedules underflow long before max_iter
            return
        _validate_ratio(a_prev, a, r)
        a_prev = a


def resest_threshold(delta: float, eta_cone: float) -> float:
    """Residual level 2 (1+eta)/(1-2 eta) delta above which the error decreases."""
    if eta_cone >= 0.5:
        return float("inf")
    return 2.0 * (1.0 + eta_cone) / (1.0 - 2.0 * eta_cone) * delta


def ksest_bound(tau: float, eta_cone: float, dist0: float) -> float:
    """Right-hand side tau / ((1-2 eta) tau - 2 (1+eta)) |x_0 - x*|^2."""
    den = (1.0 - 2.0 * eta_cone) * tau - 2.0 * (1.0 + eta_cone)
    if den <= 0.0:
        return float("inf")
    return tau / den * dist0**2
