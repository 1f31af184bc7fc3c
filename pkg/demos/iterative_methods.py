"""Landweber, iteratively regularized Gauss-Newton and their data-driven variants."""
# %%
import numpy as np

from invreg import harness as h
from invreg.iterative import StoppingRule, irgn, ksest_bound, landweber, resest_threshold
from invreg.numcore import GridFunction1D, NoiseSpec, add_noise
from invreg.problems import CExampleProblem

# %% Landweber with the discrepancy principle on the c-example.
P = CExampleProblem(lambda s: 50.0 + 0 * s, 64)
xt = h.truth_profile(P.s)
tau, delta = 2.5, 1e-3
yd = add_noise(GridFunction1D(P.apply(xt)), NoiseSpec(delta, seed=0)).values
x, log = landweber(P, yd, np.ones(65), StoppingRule.discrepancy(delta, tau), x_ref=xt)
eta = log.eta_cone
print(f"stopped after {log.stop_index} steps, residual {log.residual[-1]:.2e} <= {tau * delta:.2e}")
print(f"measured cone constant {eta:.3f}; error monotone while residual > {resest_threshold(delta, eta):.2e}")
print(f"k* (tau delta)^2 = {log.stop_index * (tau * delta) ** 2:.2e} <= {ksest_bound(tau, eta, log.error[0]):.2e}")

# %% Gauss-Newton needs far fewer steps.
x, log = irgn(P, yd, np.ones(65), np.ones(65), stop=StoppingRule.discrepancy(delta, tau), x_ref=xt)
print(f"IRGN: {log.stop_index} steps, error {log.error[-1]:.3e}")

# %% All methods side by side on the scalar problem and on the c-example.
for problem in ("scalar", "cexample"):
    cfg = h.ExperimentConfig("iterate", {"method": "compare", "problem": problem, "n": 32, "max_iter": 2000})
    rows, _ = h.run_iterative_compare(cfg)
    print(f"\n{problem}")
    for method, k, err, res, reason in rows:
        print(f"  {method:16s} k*={k:5d}  error={err:.3e}  residual={res:.3e}  {reason}")
