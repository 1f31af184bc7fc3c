"""Learning a forward operator from expert pairs."""
# %%
import numpy as np

from invreg.oplearn import (
    ExpertSet,
    KernelSpec,
    bi_orthonormalize_svd,
    gs_learn_solve,
    least_squares_operator,
    vrkhs_fit,
    vrkhs_predict,
)

rng = np.random.default_rng(4)
A = rng.standard_normal((5, 5)) @ np.diag([3, 1, 0.3, 0.1, 0.03])

# %% Gram-Schmidt inversion reproduces the training inputs from their data.
X = rng.standard_normal((3, 5))
E = ExpertSet.from_operator(lambda x: A @ x, X)
print("pair reproduction:", max(np.abs(gs_learn_solve(E, y) - x).max() for x, y in zip(E.X, E.Y)))

# %% With a full set of pairs the least-squares operator is A itself.
E = ExpertSet.from_operator(lambda x: A @ x, rng.standard_normal((5, 5)))
print("operator error:", np.abs(least_squares_operator(E) - A).max())

# %% Bi-orthonormalization gives the singular values without forming A.
est = bi_orthonormalize_svd(E)
print("learned  ", np.round([s for s, _ in est], 6))
print("direct   ", np.round(np.linalg.svd(A, compute_uv=False), 6))

# %% A vector-valued kernel model of a nonlinear map.
f = lambda x: np.tanh(A @ x)
X = rng.uniform(-1, 1, (60, 5))
model = vrkhs_fit(ExpertSet.from_operator(f, X), KernelSpec("gaussian", 1.5), 1e-8)
Q = rng.uniform(-1, 1, (5, 5))
err = [np.linalg.norm(vrkhs_predict(model, q) - f(q)) / np.linalg.norm(f(q)) for q in Q]
print("vRKHS relative errors at fresh points:", np.round(err, 3))
