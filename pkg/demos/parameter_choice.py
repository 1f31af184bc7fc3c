"""Choosing the regularization parameter: discrepancy, GCV, L-curve and empirical risk."""
# %%
import numpy as np

from invreg import harness as h
from invreg.oplearn import ExpertSet
from invreg.paramsel import (
    AlphaGrid,
    TikhonovSolver,
    apriori_alpha,
    empirical_risk_select,
    gcv_select,
    lcurve_select,
    morozov_select,
)

P, xt, yd, delta = h.diagonal_family(seed=2)
grid = AlphaGrid.geometric(1.0, 1e-6, 25)
solver = TikhonovSolver(np.zeros(xt.size))


def error(alpha):
    return np.linalg.norm(solver(P, yd, alpha) - xt)


# %%
X, Y = [], []
for l in range(8):
    _, x_l, y_l, _ = h.diagonal_family(2000 + l)
    X.append(x_l)
    Y.append(y_l)

reports = {
    "morozov": morozov_select(P, yd, delta, 1.5, grid, solver),
    "gcv": gcv_select(P, yd, grid),
    "lcurve": lcurve_select(P, yd, grid, solver),
    "erm": empirical_risk_select(P, ExpertSet(np.array(X), np.array(Y)), grid, solver),
}
a = apriori_alpha(delta, 1.0)
print(f"apriori   alpha={a:.2e}  error={error(a):.4f}")
for name, rep in reports.items():
    print(f"{name:9s} alpha={rep.alpha:.2e}  error={error(rep.alpha):.4f}  flags={rep.flags}")
best = min(grid.values, key=error)
print(f"oracle    alpha={best:.2e}  error={error(best):.4f}")
