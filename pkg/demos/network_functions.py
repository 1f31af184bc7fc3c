"""Shallow networks: activation catalog, Gauss-Newton fitting and greedy wavelet approximation."""
# %%
import numpy as np

from invreg.nnfun import (
    Activation,
    ALNNParams,
    GaussNewtonOptions,
    RQNNAtom,
    activation_eval,
    alnn_eval,
    gauss_newton_fit,
    greedy_approximate,
    rqnn_wavelet_eval,
)
from invreg.numcore import GridFunction1D, nodes

# %% A few activations on a small grid.
s = np.linspace(-2, 2, 5)
for kind in ("sigmoid", "tanh", "relu", "softplus", "elu"):
    print(f"{kind:9s}", np.round(activation_eval(Activation(kind), s), 4))

# %% Fit a three-neuron tanh network to samples of a known one.
act = Activation("tanh")
p_star = ALNNParams(np.array([1.0, -0.7, 0.5]), np.array([[4.0], [-3.0], [6.0]]), np.array([-1.0, 2.0, -4.5]))
target = GridFunction1D(alnn_eval(p_star, act, nodes(200)))
start = ALNNParams.from_vector(p_star.to_vector() + 0.01 * np.random.default_rng(0).standard_normal(9), 1)
p, log = gauss_newton_fit(target, start, act, GaussNewtonOptions(max_iter=20))
print("Gauss-Newton residuals:", " ".join(f"{r:.1e}" for r in log.residual))

# %% Greedy selection from the radial wavelet dictionary.
grid = nodes(256)
terms = [(1.0, RQNNAtom.at(0, 0.0)), (0.5, RQNNAtom.at(1, 0.5)), (0.25, RQNNAtom.at(-1, 0.0))]
f = GridFunction1D(sum(c * rqnn_wavelet_eval(a, None, grid) for c, a in terms))
res = greedy_approximate(f, 3, 8)
for N, (r, a) in enumerate(zip(res.residuals, res.atoms), 1):
    print(f"N={N}: residual {r:.3e}  bound {1.75 * (N + 1) ** -0.5:.3f}  atom k={a.k} shift={a.center[0]:+.3f}")
