"""How tight is the variational bound?

For a single node the exact marginal log-likelihood is a 1-D integral, so the
bound can be compared directly.  Each xi gives a valid lower bound; the fixed
point xi^2 = S + m^2 picks the tightest one.
"""

import numpy as np

from gcrfbc import Dataset, ModelParams, StructuredInstance, bound_parts, optimal_xi
from gcrfbc.learning import exact_log_likelihood_1d

inst = StructuredInstance(np.array([[0.6]]), np.zeros((1, 1, 1)), np.array([1.0]))
data = Dataset(inst.predictors[None], inst.similarities[None], inst.labels[None])

for alpha in (0.1, 1.0, 10.0):
    p = ModelParams([alpha], [1.0])
    exact = exact_log_likelihood_1d(p, inst)
    print(f"alpha={alpha}: exact {exact:.5f}")
    for xi in (0.1, 1.0, 3.0):
        print(f"  xi={xi:<4} bound {bound_parts(p, inst, [xi]).value:.5f}")
    best = optimal_xi(p, data).xi[0, 0]
    print(f"  xi*={best:.3f} bound {bound_parts(p, inst, [best]).value:.5f}")

# The gap shrinks with the latent variance 1/(2 alpha).
