"""Radon transform on the unit disk and its analytic singular system.

Images live on an ``m x m`` pixel grid over [-1, 1]^2 (pixel centers,
zero outside the unit disk). Sinograms live on the midpoint grid of
:func:`invreg.numcore.sinogram_nodes` with the weighted inner product
``<z1, z2> = int int z1 z2 / w(t) dt dtheta``, ``w(t) = sqrt(1 - t^2)``.

The forward transform, the adjoint and the back-projection are assembled
once per grid shape as sparse matrices and cached.

Angular harmonics are orthonormal in L2(0, pi)::

    Y_0 = 1/sqrt(pi),  Y_j = sqrt(2/pi) cos(j theta),  Y_{-j} = sqrt(2/pi) sin(j theta)

(cos/sin pairs are orthogonal on (0, pi) whenever their indices share parity,
which is always the case inside one singular subspace).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.special import eval_chebyu

from .errors import ArgumentError, DimensionError
from .numcore import SinogramGrid, radon_weights, sinogram_nodes
from .problems import ForwardProblem

__all__ = [
    "ImageGrid",
    "SingularTriple",
    "pixel_centers",
    "disk_mask",
    "image_inner",
    "radon_matrix",
    "adjoint_matrix",
    "radon_apply",
    "radon_adjoint",
    "backprojection",
    "chebyshev2",
    "spherical_harmonic_2d",
    "index_set",
    "analytic_gamma",
    "analytic_singular_system",
    "weighted_radon_svd",
    "cluster_values",
    "RadonProblem",
]


def pixel_centers(m: int) -> np.ndarray:
    return -1.0 + (np.arange(m) + 0.5) * (2.0 / m)


@lru_cache(maxsize=16)
def disk_mask(m: int) -> np.ndarray:
    c = pixel_centers(m)
    S1, S2 = np.meshgrid(c, c, indexing="ij")
    mask = S1**2 + S2**2 <= 1.0
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class ImageGrid:
    """Pixel image on [-1, 1]^2, indexed ``values[i1, i2]`` at ``(c[i1], c[i2])``.

    Values outside the unit disk are set to zero on construction.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError("ImageGrid values must be a square 2-D array")
        if not np.all(np.isfinite(v)):
            raise ArgumentError("ImageGrid values must be finite")
        v = np.where(disk_mask(v.shape[0]), v, 0.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_callable(cls, fun, m: int) -> "ImageGrid":
        c = pixel_centers(m)
        S1, S2 = np.meshgrid(c, c, indexing="ij")
        return cls(np.broadcast_to(fun(S1, S2), (m, m)).astype(float))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def image_inner(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    m = a.shape[0]
    return float(np.sum(a * b) * (2.0 / m) ** 2)


def _bilinear(m: int, p1: np.ndarray, p2: np.ndarray):
    """Sparse bilinear weights of the points (p1, p2) on the pixel-center grid."""
    hp = 2.0 / m
    u1 = (p1 + 1.0) / hp - 0.5
    u2 = (p2 + 1.0) / hp - 0.5
    i1 = np.floor(u1).astype(np.int64)
    i2 = np.floor(u2).astype(np.int64)
    f1, f2 = u1 - i1, u2 - i2
    mask = disk_mask(m).ravel()
    out_idx, out_w, out_pt = [], [], []
    pts = np.arange(p1.size)
    for d1, g1 in ((0, 1.0 - f1), (1, f1)):
        for d2, g2 in ((0, 1.0 - f2), (1, f2)):
            j1, j2 = i1 + d1, i2 + d2
            ok = (j1 >= 0) & (j1 < m) & (j2 >= 0) & (j2 < m)
            col = np.where(ok, j1 * m + j2, 0)
            ok &= mask[col]
            out_idx.append(col[ok])
            out_w.append((g1 * g2)[ok])
            out_pt.append(pts[ok])
    return np.concatenate(out_pt), np.concatenate(out_idx), np.concatenate(out_w)


@lru_cache(maxsize=8)
def radon_matrix(m: int, nt: int, ntheta: int) -> sp.csr_matrix:
    """Sparse matrix of the forward transform, rows in (t, theta) C-order.

    Each line integral uses the composite midpoint rule with step <= 2/m.
    """
    t, theta = sinogram_nodes(nt, ntheta)
    c, s = np.cos(theta), np.sin(theta)
    rows, cols, vals = [], [], []
    for i, ti in enumerate(t):
        half = np.sqrt(1.0 - ti**2)
        ns = max(1, int(np.ceil(half * m)))
        ds = 2.0 * half / ns
        sk = -half + (np.arange(ns) + 0.5) * ds
        p1 = ti * c[:, None] - sk[None, :] * s[:, None]
        p2 = ti * s[:, None] + sk[None, :] * c[:, None]
        pt, col, w = _bilinear(m, p1.ravel(), p2.ravel())
        rows.append(i * ntheta + pt // ns)
        cols.append(col)
        vals.append(w * ds)
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nt * ntheta, m * m),
    )
    return A.tocsr()


def _t_interp(nt: int, xi: np.ndarray, clamp: bool):
    """Linear interpolation weights in t at positions xi (flattened)."""
    dt = 2.0 / nt
    t0 = -1.0 + 0.5 * dt
    if clamp:
        xi = np.clip(xi, t0, -t0)
    u = (xi - t0) / dt
    i0 = np.clip(np.floor(u).astype(np.int64), 0, nt - 2)
    f = u - i0
    return i0, f


@lru_cache(maxsize=8)
def adjoint_matrix(m: int, nt: int, ntheta: int, weighted: bool = True) -> sp.csr_matrix:
    """Sparse matrix of R* (weighted) or of pi * back-projection (unweighted).

    The weighted form is the exact transpose of :func:`radon_matrix` with
    respect to the w^{-1} sinogram product and the pixel-area image product,
    so the adjoint identity holds to rounding. The unweighted form
    interpolates linearly in t, which reproduces constants exactly.
    Rows are pixels (C-order), columns sinogram cells (C-order).
    """
    if weighted:
        W = sp.diags(radon_weights(nt, ntheta).ravel())
        return (radon_matrix(m, nt, ntheta).T @ W / (2.0 / m) ** 2).tocsr()
    _, theta = sinogram_nodes(nt, ntheta)
    c = pixel_centers(m)
    S1, S2 = np.meshgrid(c, c, indexing="ij")
    pix = np.flatnonzero(disk_mask(m).ravel())
    xi = S1.ravel()[pix, None] * np.cos(theta)[None, :] + S2.ravel()[pix, None] * np.sin(theta)[None, :]
    jj = np.broadcast_to(np.arange(ntheta)[None, :], xi.shape)
    rr = np.broadcast_to(pix[:, None], xi.shape)
    xi, jj, rr = xi.ravel(), jj.ravel(), rr.ravel()
    i0, f = _t_interp(nt, xi, clamp=True)
    scale = np.pi / ntheta
    rows = np.concatenate([rr, rr])
    cols = np.concatenate([i0 * ntheta + jj, (i0 + 1) * ntheta + jj])
    vals = np.concatenate([(1.0 - f) * scale, f * scale])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(m * m, nt * ntheta))
    return A.tocsr()


def radon_apply(x, nt: int, ntheta: int) -> SinogramGrid:
    """Line integrals of the image ``x`` on the (nt, ntheta) sinogram grid."""
    img = x if isinstance(x, ImageGrid) else ImageGrid(x)
    z = radon_matrix(img.m, nt, ntheta) @ img.values.ravel()
    return SinogramGrid(z.reshape(nt, ntheta))


def radon_adjoint(z, m: int) -> ImageGrid:
    """Adjoint from the w^{-1}-weighted sinogram space into L2 of the disk."""
    v = np.asarray(z, dtype=float)
    x = adjoint_matrix(m, *v.shape, True) @ v.ravel()
    return ImageGrid(x.reshape(m, m))


def backprojection(z, m: int) -> ImageGrid:
    """Angular average (1/pi) int z(<s, n(theta)>, theta) dtheta."""
    v = np.asarray(z, dtype=float)
    x = adjoint_matrix(m, *v.shape, False) @ v.ravel() / np.pi
    return ImageGrid(x.reshape(m, m))


def chebyshev2(k: int, t):
    """Chebyshev polynomial of the second kind, sin((k+1) a)/sin(a), t = cos(a)."""
    if k < 0:
        raise ArgumentError("Chebyshev degree must be >= 0")
    tt = np.asarray(t, dtype=float)
    if np.any(np.abs(tt) > 1.0):
        raise ArgumentError("chebyshev2 needs |t| <= 1")
    out = eval_chebyu(k, tt)
    return float(out) if np.ndim(out) == 0 else out


def spherical_harmonic_2d(idx: int, theta):
    """Real angular harmonic Y_idx, orthonormal on (0, pi)."""
    th = np.asarray(theta, dtype=float)
    if idx == 0:
        out = np.full(th.shape, 1.0 / np.sqrt(np.pi))
    elif idx > 0:
        out = np.sqrt(2.0 / np.pi) * np.cos(idx * th)
    else:
        out = np.sqrt(2.0 / np.pi) * np.sin(-idx * th)
    return float(out) if np.ndim(out) == 0 else out


def index_set(kmax: int) -> list[tuple[int, int]]:
    """Pairs (k, l) with 0 <= l <= k <= kmax and k + l even, in (k, l) order."""
    if kmax < 0:
        raise ArgumentError("kmax must be >= 0")
    return [(k, l) for k in range(kmax + 1) for l in range(k + 1) if (k + l) % 2 == 0]


def analytic_gamma(k: int) -> float:
    return float(np.sqrt(2.0 * np.pi / (k + 1)))


@dataclass(frozen=True)
class SingularTriple:
    k: int
    l: int
    gamma: float
    v: SinogramGrid
    u: ImageGrid


def analytic_singular_system(kmax: int, m: int, nt: int, ntheta: int) -> list[SingularTriple]:
    """Build (gamma_k, u_kl, v_kl) for every (k, l) in the index set.

    ``v = c_k w(t) U_k(t) Y_{k-2l}(theta)`` with ``c_k`` fixed by quadrature
    so that the weighted norm of ``v`` is one; ``u = R* v / gamma_k``.
    """
    t, theta = sinogram_nodes(nt, ntheta)
    dt = 2.0 / nt
    w = np.sqrt(1.0 - t**2)
    out = []
    for k, l in index_set(kmax):
        ck = chebyshev2(k, t)
        norm_t = np.sqrt(np.sum(w * ck**2) * dt)
        v = (w * ck / norm_t)[:, None] * spherical_harmonic_2d(k - 2 * l, theta)[None, :]
        g = analytic_gamma(k)
        u = radon_adjoint(v, m).values / g
        out.append(SingularTriple(k, l, g, SinogramGrid(v), ImageGrid(u)))
    return out


def weighted_radon_svd(m: int, nt: int, ntheta: int) -> np.ndarray:
    """Singular values of the forward matrix between the weighted spaces.

    The matrix is ``Wy^{1/2} A Wx^{-1/2}`` restricted to disk pixels, where
    ``Wy`` holds the w^{-1} sinogram weights and ``Wx`` the pixel area.
    """
    A = radon_matrix(m, nt, ntheta)
    cols = np.flatnonzero(disk_mask(m).ravel())
    wy = np.sqrt(radon_weights(nt, ntheta).ravel())
    M = (A[:, cols].toarray() * wy[:, None]) / (2.0 / m)
    return np.linalg.svd(M, compute_uv=False)


def cluster_values(values, count: int, rel_gap: float = 0.03) -> list[tuple[float, int]]:
    """Group sorted-descending values into clusters split at relative gaps.

    Returns ``(mean, size)`` for the first ``count`` clusters.
    """
    vals = np.sort(np.asarray(values, dtype=float))[::-1]
    groups: list[list[float]] = [[vals[0]]]
    for a in vals[1:]:
        if len(groups) == count and groups[-1][-1] - a > rel_gap * groups[-1][-1]:
            break
        if groups[-1][-1] - a > rel_gap * groups[-1][-1]:
            groups.append([a])
        else:
            groups[-1].append(a)
    return [(float(np.mean(g)), len(g)) for g in groups[:count]]


class RadonProblem(ForwardProblem):
    """Radon transform as a linear forward problem on flattened disk images.

    The adjoint is the exact transpose of the forward matrix with respect to
    the discrete inner products, so iterative schemes see a consistent pair.
    """

    linear = True

    def __init__(self, m: int, nt: int, ntheta: int):
        self.m, self.nt, self.ntheta = m, nt, ntheta
        self.A = radon_matrix(m, nt, ntheta)
        self.wy = radon_weights(nt, ntheta).ravel()
        self.wx = (2.0 / m) ** 2
        self.mask = disk_mask(m).ravel()

    def apply(self, x):
        return self.A @ (np.asarray(x, dtype=float) * self.mask)

    def deriv(self, x, h):
        return self.apply(h)

    def deriv_adjoint(self, x, w):
        return (self.A.T @ (self.wy * np.asarray(w, dtype=float))) * self.mask / self.wx

    def project_domain(self, x):
        return np.asarray(x, dtype=float) * self.mask

    def jacobian(self, x):
        return self.A.toarray() * self.mask[None, :]
