"""Regularization-parameter selection rules.

All rules work on a strictly decreasing grid of alphas and break ties by
the smallest grid index.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, InvRegError
from .oplearn import ExpertSet
from .problems import ForwardProblem
from .variational import TikhonovConfig, tikhonov_minimize

__all__ = [
    "AlphaGrid",
    "SelectionReport",
    "TikhonovSolver",
    "apriori_alpha",
    "morozov_select",
    "gcv_select",
    "gcv_function",
    "lcurve_select",
    "lcurve_curvature",
    "empirical_risk_select",
]


@dataclass(frozen=True)
class AlphaGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 2 or np.any(v <= 0) or np.any(np.diff(v) >= 0):
            raise ArgumentError("alpha grid must be positive, strictly decreasing, length >= 2")
        object.__setattr__(self, "values", v)

    @classmethod
    def geometric(cls, a_max: float, a_min: float, count: int) -> "AlphaGrid":
        return cls(np.geomspace(a_max, a_min, count))

    def __len__(self) -> int:
        return self.values.size

    def refine(self, factor: int = 10) -> "AlphaGrid":
        """Log-uniform grid over the same range with ``factor`` times the density."""
        return AlphaGrid(np.geomspace(self.values[0], self.values[-1], factor * (len(self) - 1) + 1))


@dataclass
class SelectionReport:
    rule: str
    alpha: float
    index: int
    alphas: np.ndarray
    residual: np.ndarray
    xnorm: np.ndarray
    score: np.ndarray
    flags: tuple = ()
    warnings: list = field(default_factory=list)

    def rows(self):
        for i in range(len(self.alphas)):
            yield self.alphas[i], self.residual[i], self.xnorm[i], self.score[i]

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for ln in header_lines:
                fh.write(f"# {ln}\n")
            fh.write(f"# rule={self.rule} index={self.index} flags={';'.join(self.flags)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "residual", "xnorm", "score"])
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "SelectionReport":
        meta = {}
        with open(path, newline="", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        body = []
        for ln in lines:
            if ln.startswith("# rule="):
                meta = dict(kv.split("=", 1) for kv in ln[2:].split(" "))
            elif not ln.startswith("#") and ln:
                body.append(ln)
        data = np.array([[float(c) for c in r] for r in csv.reader(body[1:])]).reshape(-1, 4)
        idx = int(meta["index"])
        flags = tuple(f for f in meta.get("flags", "").split(";") if f)
        return cls(meta["rule"], float(data[idx, 0]), idx, data[:, 0], data[:, 1], data[:, 2], data[:, 3], flags)


class TikhonovSolver:
    """Callable (problem, ydelta, alpha, x_start) -> x_alpha with a fixed prior."""

    def __init__(self, x0, multistarts: int = 1, max_iter: int = 100, tol: float = 1e-10, seed: int = 0):
        self.x0 = np.asarray(x0, dtype=float)
        self.multistarts = multistarts
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def __call__(self, problem, ydelta, alpha, x_start=None):
        cfg = TikhonovConfig(alpha, self.x0, self.max_iter, self.tol, self.multistarts, seed=self.seed)
        x, _ = tikhonov_minimize(problem, ydelta, cfg, x_start=x_start)
        return x


def _grid(grid) -> AlphaGrid:
    return grid if isinstance(grid, AlphaGrid) else AlphaGrid(grid)


def _sweep(problem, ydelta, grid: AlphaGrid, solver, x0):
    """Warm-started solves in grid order; failures give nan rows."""
    y = np.asarray(ydelta, dtype=float)
    res = np.full(len(grid), np.nan)
    xn = np.full(len(grid), np.nan)
    xs = [None] * len(grid)
    notes = []
    start = None
    for i, a in enumerate(grid.values):
        try:
            x = solver(problem, y, a, start)
        except InvRegError as exc:
            notes.append(f"alpha={a!r}: {exc}")
            warnings.warn(f"solver failed at alpha={a}: {exc}", RuntimeWarning, stacklevel=3)
            continue
        xs[i] = x
        start = x
        res[i] = problem.data_norm(problem.apply(x) - y)
        xn[i] = problem.param_norm(x - x0)
    return xs, res, xn, notes


def _x0(solver, problem, ydelta):
    x0 = getattr(solver, "x0", None)
    if x0 is not None:
        return np.asarray(x0, dtype=float)
    return np.zeros_like(problem.deriv_adjoint(None, np.asarray(ydelta, dtype=float)))


def apriori_alpha(delta: float, c: float = 1.0) -> float:
    if not (delta > 0 and c > 0):
        raise ArgumentError("delta and c must be > 0")
    return c * delta


def morozov_select(problem: ForwardProblem, ydelta, delta: float, tau: float, grid, solver) -> SelectionReport:
    """Largest grid alpha whose residual is at most tau*delta.

    Falls back to the smallest alpha with flag ``no_alpha_qualifies``.
    """
    if tau < 1.0 or delta < 0:
        raise ArgumentError("need tau >= 1 and delta >= 0")
    grid = _grid(grid)
    x0 = _x0(solver, problem, ydelta)
    _, res, xn, notes = _sweep(problem, ydelta, grid, solver, x0)
    ok = np.flatnonzero(res <= tau * delta)
    flags = ()
    if ok.size:
        i = int(ok[0])
    else:
        i = len(grid) - 1
        flags = ("no_alpha_qualifies",)
    return SelectionReport("morozov", float(grid.values[i]), i, grid.values, res, xn, res - tau * delta, flags, notes)


def _weighted_matrix(problem: ForwardProblem, x0):
    J = np.asarray(problem.jacobian(x0), dtype=float)
    sy = np.sqrt(np.broadcast_to(np.asarray(problem.wy, dtype=float), (J.shape[0],)))
    sx = np.sqrt(np.broadcast_to(np.asarray(problem.wx, dtype=float), (J.shape[1],)))
    return sy[:, None] * J / sx[None, :], sy


def gcv_function(problem: ForwardProblem, ydelta, alphas):
    """psi(alpha) = |F x_alpha - y| / rho(alpha), rho = (alpha/n) tr((alpha I + F F*)^{-1}).

    Returns ``(psi, residual, xnorm)`` over ``alphas``; x_alpha is the
    Tikhonov solution with zero prior, computed from the SVD.
    """
    if not getattr(problem, "linear", False):
        raise ArgumentError("GCV is defined for linear problems only")
    y = np.asarray(ydelta, dtype=float)
    x0 = np.zeros_like(problem.deriv_adjoint(None, y))
    B, sy = _weighted_matrix(problem, x0)
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    b = sy * y
    c = U.T @ b
    perp = max(float(b @ b - c @ c), 0.0)
    n = b.size
    alphas = np.asarray(alphas, dtype=float)
    psi = np.empty(alphas.size)
    res = np.empty(alphas.size)
    xn = np.empty(alphas.size)
    for i, a in enumerate(alphas):
        f = a / (a + s * s)
        res[i] = math.sqrt(float(np.sum((f * c) ** 2)) + perp)
        xn[i] = float(np.linalg.norm(s * c / (a + s * s)))
        rho = (float(np.sum(f)) + (n - s.size)) / n
        psi[i] = res[i] / rho
    return psi, res, xn


def _first_argmin(v) -> int:
    v = np.where(np.isfinite(v), v, np.inf)
    return int(np.flatnonzero(v == v.min())[0])


def _flat(v) -> bool:
    v = v[np.isfinite(v)]
    return v.size == 0 or float(v.max() - v.min()) <= 1e-12 * max(float(np.abs(v).max()), 1e-300)


def gcv_select(problem: ForwardProblem, ydelta, grid) -> SelectionReport:
    grid = _grid(grid)
    psi, res, xn = gcv_function(problem, ydelta, grid.values)
    flags = ("degenerate",) if _flat(psi) else ()
    i = 0 if flags else _first_argmin(psi)
    return SelectionReport("gcv", float(grid.values[i]), i, grid.values, res, xn, psi, flags)


def lcurve_curvature(log_res, log_xn) -> np.ndarray:
    """Signed circumcircle curvature of consecutive triples; ends are nan.

    With alpha decreasing, the L-corner turns clockwise, so the corner is
    where the returned value (negated signed curvature) is largest.
    """
    P = np.column_stack([log_res, log_xn])
    k = np.full(len(P), np.nan)
    for i in range(1, len(P) - 1):
        a, b, c = P[i - 1], P[i], P[i + 1]
        u, v = b - a, c - b
        cross = u[0] * v[1] - u[1] * v[0]
        den = np.linalg.norm(u) * np.linalg.norm(v) * np.linalg.norm(c - a)
        if np.all(np.isfinite([cross, den])) and den > 0:
            k[i] = -2.0 * cross / den
    return k


def lcurve_select(problem: ForwardProblem, ydelta, grid, solver) -> SelectionReport:
    """Alpha of maximal L-curve curvature in (log residual, log |x - x0|)."""
    grid = _grid(grid)
    if len(grid) < 5:
        raise ArgumentError("the L-curve rule needs at least 5 grid points")
    x0 = _x0(solver, problem, ydelta)
    _, res, xn, notes = _sweep(problem, ydelta, grid, solver, x0)
    good = np.isfinite(res) & np.isfinite(xn) & (res > 0) & (xn > 0)
    if good.sum() < 5:
        raise ArgumentError("fewer than 5 usable L-curve points")
    idx = np.flatnonzero(good)
    kap = np.full(len(grid), np.nan)
    kap[idx] = lcurve_curvature(np.log(res[idx]), np.log(xn[idx]))
    score = np.where(np.isfinite(kap), -kap, np.inf)
    i = _first_argmin(score)
    flags = ()
    if not kap[i] > 0 or i in (idx[1], idx[-2]):
        flags = ("low_confidence",)
    return SelectionReport("lcurve", float(grid.values[i]), i, grid.values, res, xn, kap, flags, notes)


def empirical_risk_select(problem: ForwardProblem, experts: ExpertSet, grid, solver, loss=None) -> SelectionReport:
    """Argmin over the grid of (1/n0) sum_l loss(x^(l), x_alpha^(l)).

    ``loss`` defaults to the squared parameter-space distance. Sums use
    ``math.fsum`` so the result does not depend on the order of the pairs.
    """
    grid = _grid(grid)
    loss = loss or (lambda a, b: problem.param_norm(np.asarray(a) - np.asarray(b)) ** 2)
    x0 = _x0(solver, problem, experts.Y[0])
    risk = np.empty(len(grid))
    res = np.empty(len(grid))
    xn = np.empty(len(grid))
    notes = []
    for i, a in enumerate(grid.values):
        terms, rterms, nterms = [], [], []
        for x_true, y in zip(experts.X, experts.Y):
            try:
                xa = solver(problem, y, a, None)
            except InvRegError as exc:
                notes.append(f"alpha={a!r}: {exc}")
                warnings.warn(f"solver failed at alpha={a}: {exc}", RuntimeWarning, stacklevel=2)
                xa = x0
            terms.append(loss(x_true, xa))
            rterms.append(problem.data_norm(problem.apply(xa) - y) ** 2)
            nterms.append(problem.param_norm(xa - x0) ** 2)
        n0 = experts.n0
        risk[i] = math.fsum(terms) / n0
        res[i] = math.sqrt(math.fsum(rterms) / n0)
        xn[i] = math.sqrt(math.fsum(nterms) / n0)
    i = _first_argmin(risk)
    return SelectionReport("erm", float(grid.values[i]), i, grid.values, res, xn, risk, (), notes)
