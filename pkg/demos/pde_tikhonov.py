"""Parameter identification in 1-D elliptic equations with Tikhonov regularization.

The c-example recovers the reaction coefficient c in -u'' + c u = f; the
a-example recovers the diffusion coefficient a in -(a u')' = f.
"""
# %%
import numpy as np

from invreg import harness as h
from invreg.numcore import GridFunction1D, NoiseSpec, add_noise
from invreg.problems import AExampleProblem, CExampleProblem, adjoint_gap
from invreg.variational import TikhonovConfig, tikhonov_minimize

# %% Linear finite elements converge at second order in the mesh width.
for kind in ("cexample", "aexample"):
    res, _ = h.run_rate_fem(h.ExperimentConfig("rate-fem", {"problem": kind}))
    print(kind, " ".join(f"h={p[0]:.4f}:{p[1]:.2e}" for p in res.pairs), f"slope {res.exponent:.2f}")

# %% Derivative and adjoint are consistent to rounding.
rng = np.random.default_rng(0)
for cls in (CExampleProblem, AExampleProblem):
    P = cls(lambda s: 10.0 + 0 * s, 64)
    x = 1 + 0.5 * rng.random(65)
    print(cls.__name__, "adjoint gap", f"{adjoint_gap(P, x, rng.standard_normal(65), rng.standard_normal(65)):.1e}")

# %% A single reconstruction from noisy data.
P = CExampleProblem(lambda s: 10.0 + 0 * s, 64)
xt = h.truth_profile(P.s)
yd = add_noise(GridFunction1D(P.apply(xt)), NoiseSpec(1e-3, seed=3)).values
x, rep = tikhonov_minimize(P, yd, TikhonovConfig(1e-4, np.ones_like(xt), multistarts=4))
print(f"alpha=1e-4: error {P.param_norm(x - xt):.3e}, |grad| {rep.grad_norm:.1e}")

# %% With a prior satisfying the source condition the error decays like sqrt(delta).
res, table = h.run_rate_tikhonov(h.ExperimentConfig("rate-tikhonov", {}))
for d, e in res.pairs:
    print(f"delta={d:.0e}  error={e:.3e}")
print(f"fitted exponent {res.exponent:.3f}, noise-free floor {res.floor:.1e}")
