"""Radon transform on the unit disk: forward map, adjoint and spectrum.

Run with ``python3 demos/radon_spectrum.py``.
"""
# %%
import math

import numpy as np

from invreg.numcore import radon_weights
from invreg.radon import (
    ImageGrid,
    analytic_gamma,
    cluster_values,
    disk_mask,
    image_inner,
    radon_adjoint,
    radon_apply,
    weighted_radon_svd,
)

# %% The indicator of the disk has chord lengths 2 sqrt(1 - t^2) along every line.
m, nt, ntheta = 64, 128, 32
z = radon_apply(ImageGrid(disk_mask(m) * 1.0), nt, ntheta)
t = z.t
inner = np.abs(t) < 0.8
err = np.abs(z.values[inner] - 2 * np.sqrt(1 - t[inner, None] ** 2))
print(f"disk chords, |t| < 0.8: max error {err.max():.3f} (pixel width {2 / m:.3f})")

# %% The adjoint is the transpose in the weighted sinogram product.
rng = np.random.default_rng(1)
x = rng.standard_normal((m, m)) * disk_mask(m)
w = rng.standard_normal((nt, ntheta))
lhs = float(np.sum(radon_apply(x, nt, ntheta).values * w * radon_weights(nt, ntheta)))
rhs = image_inner(x, radon_adjoint(w, m))
print(f"<Rx, w> = {lhs:.10f}, <x, R*w> = {rhs:.10f}")

# %% Singular values cluster near sqrt(2 pi / (k + 1)), with k + 1 copies each.
sv = weighted_radon_svd(32, 64, 64)
for k, (val, mult) in enumerate(cluster_values(sv, 8)):
    print(f"k={k}: numeric {val:.4f}  analytic {analytic_gamma(k):.4f}  copies {mult}")
print(f"sqrt(2 pi) = {math.sqrt(2 * math.pi):.4f}")
