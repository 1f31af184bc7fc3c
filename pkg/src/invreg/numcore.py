"""Grids, inner products, weighted norms, noise injection and rate fitting.

Every other module builds on these primitives. Functions on [0, 1] live on
uniform node grids and use the trapezoidal rule; sinograms live on a
midpoint grid in ``t`` so the weight ``w(t) = sqrt(1 - t^2)`` never vanishes.

Random numbers come from :func:`numpy.random.default_rng` (PCG64) seeded
with an integer, so a given seed reproduces the same stream on any platform.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DimensionError

__all__ = [
    "GridFunction1D",
    "SinogramGrid",
    "NoiseSpec",
    "nodes",
    "trapezoid_weights",
    "inner_l2",
    "norm_l2",
    "sinogram_nodes",
    "radon_weights",
    "weighted_radon_norm",
    "add_noise",
    "fit_rate",
    "write_grid_csv",
    "read_grid_csv",
    "write_sinogram_csv",
    "read_sinogram_csv",
]


def nodes(n: int) -> np.ndarray:
    """Uniform nodes 0, 1/n, ..., 1."""
    return np.linspace(0.0, 1.0, n + 1)


def trapezoid_weights(n: int) -> np.ndarray:
    """Trapezoidal quadrature weights on the ``n + 1`` node grid."""
    w = np.full(n + 1, 1.0 / n)
    w[0] = w[-1] = 0.5 / n
    return w


@dataclass(frozen=True)
class GridFunction1D:
    """Real function sampled at the ``n + 1`` uniform nodes of [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise DimensionError("GridFunction1D needs n >= 2, i.e. at least 3 nodes")
        if not np.all(np.isfinite(v)):
            raise ArgumentError("GridFunction1D values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def s(self) -> np.ndarray:
        return nodes(self.n)

    @classmethod
    def from_callable(cls, fun, n: int) -> "GridFunction1D":
        return cls(np.broadcast_to(fun(nodes(n)), (n + 1,)).astype(float))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, (GridFunction1D, SinogramGrid)) else np.asarray(f, dtype=float)


def inner_l2(f, g) -> float:
    """Trapezoidal L2(0,1) inner product of two node-sampled functions."""
    a, b = _values(f), _values(g)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"grid mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(trapezoid_weights(a.size - 1) * a * b))


def norm_l2(f) -> float:
    return float(np.sqrt(max(inner_l2(f, f), 0.0)))


def sinogram_nodes(nt: int, ntheta: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint nodes in t on (-1, 1) and equispaced angles on [0, pi)."""
    t = -1.0 + (np.arange(nt) + 0.5) * (2.0 / nt)
    theta = np.arange(ntheta) * (np.pi / ntheta)
    return t, theta


def radon_weights(nt: int, ntheta: int) -> np.ndarray:
    """Quadrature weights of the w^{-1}-weighted inner product, shape (nt, ntheta)."""
    t, _ = sinogram_nodes(nt, ntheta)
    wt = (2.0 / nt) * (np.pi / ntheta) / np.sqrt(1.0 - t**2)
    return np.repeat(wt[:, None], ntheta, axis=1)


@dataclass(frozen=True)
class SinogramGrid:
    """Function of (t, theta) sampled on a (nt, ntheta) midpoint grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 1:
            raise DimensionError("SinogramGrid values must be a 2-D (nt, ntheta) array")
        if not np.all(np.isfinite(v)):
            raise ArgumentError("SinogramGrid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def ntheta(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return sinogram_nodes(self.nt, self.ntheta)[0]

    @property
    def theta(self) -> np.ndarray:
        return sinogram_nodes(self.nt, self.ntheta)[1]

    @classmethod
    def from_callable(cls, fun, nt: int, ntheta: int) -> "SinogramGrid":
        t, th = sinogram_nodes(nt, ntheta)
        T, TH = np.meshgrid(t, th, indexing="ij")
        return cls(np.broadcast_to(fun(T, TH), (nt, ntheta)).astype(float))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def weighted_radon_norm(z) -> float:
    """(int int z^2 w^{-1} dtheta dt)^{1/2} by midpoint quadrature."""
    v = _values(z)
    return float(np.sqrt(np.sum(radon_weights(*v.shape) * v**2)))


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    seed: int = 0

    def __post_init__(self):
        if not (self.delta >= 0.0 and np.isfinite(self.delta)):
            raise ArgumentError(f"noise level must be finite and >= 0, got {self.delta}")


def add_noise(y, spec: NoiseSpec, norm=None):
    """Return ``y + delta * e`` with ``norm(e) == 1``.

    ``norm`` measures data-space length; it defaults to the trapezoidal L2
    norm for 1-D node data, the weighted sinogram norm for 2-D data, and
    the Euclidean norm otherwise. A zero draw is retried with ``seed + 1``.
    """
    v = _values(y)
    if norm is None:
        if isinstance(y, SinogramGrid) or v.ndim == 2:
            norm = weighted_radon_norm
        elif isinstance(y, GridFunction1D):
            norm = norm_l2
        else:
            norm = lambda a: float(np.linalg.norm(a))  # noqa: E731
    if spec.delta == 0.0:
        return y
    seed = spec.seed
    while True:
        e = np.random.default_rng(seed).standard_normal(v.shape)
        if isinstance(y, GridFunction1D):
            # keep Dirichlet data clean at the boundary nodes
            e[0] = e[-1] = 0.0
        ne = norm(e)
        if ne > 0.0:
            break
        seed += 1
    out = v + (spec.delta / ne) * e
    if isinstance(y, GridFunction1D):
        return GridFunction1D(out)
    if isinstance(y, SinogramGrid):
        return SinogramGrid(out)
    return out


def fit_rate(pairs) -> tuple[float, float]:
    """Least-squares slope and intercept of log e against log h."""
    arr = np.asarray(list(pairs), dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3 or arr.shape[1] != 2:
        raise ArgumentError("fit_rate needs at least 3 (h, e) pairs")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ArgumentError("fit_rate needs strictly positive finite entries")
    lh, le = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(lh, le, 1)
    return float(slope), float(intercept)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_grid_csv(f: GridFunction1D, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "value"])
        for s, v in zip(f.s, f.values):
            w.writerow([_fmt(s), _fmt(v)])


def read_grid_csv(path) -> GridFunction1D:
    rows = _read_rows(path, ["s", "value"])
    return GridFunction1D(np.array([r[1] for r in rows]))


def write_sinogram_csv(z: SinogramGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "theta", "value"])
        for i, t in enumerate(z.t):
            for j, th in enumerate(z.theta):
                w.writerow([_fmt(t), _fmt(th), _fmt(z.values[i, j])])


def read_sinogram_csv(path) -> SinogramGrid:
    rows = np.array(_read_rows(path, ["t", "theta", "value"]))
    nt = np.unique(rows[:, 0]).size
    ntheta = np.unique(rows[:, 1]).size
    if nt * ntheta != rows.shape[0]:
        raise DimensionError("sinogram CSV is not a full (t, theta) grid")
    return SinogramGrid(rows[:, 2].reshape(nt, ntheta))


def _read_rows(path, header: list[str]) -> list[list[float]]:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    head = next(reader)
    if [h.strip() for h in head] != header:
        raise ArgumentError(f"expected header {','.join(header)}, got {','.join(head)}")
    return [[float(c) for c in row] for row in reader if row]
