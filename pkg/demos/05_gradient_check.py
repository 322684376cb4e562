"""Verifying analytic gradients against central differences."""

import numpy as np

from gcrfbc import GenConfig, ModelParams, VariationalState, check_gradients, generate
from gcrfbc.learning import grad_b, grad_nb, lower_bound, nb_log_likelihood

data = generate(GenConfig(n_nodes=3, n_instances=2, seed=0))
theta = np.array([0.7, 1.3, 2.0, 0.4])
M, N = data.n_instances, data.n_nodes


def unpack(x):
    return ModelParams.from_theta(x[:4], 2), VariationalState(x[4:].reshape(M, N))


def bound(x):
    p, xi = unpack(x)
    return lower_bound(p, data, xi)


def bound_grad(x):
    ga, gb, gx = grad_b(*unpack(x)[:1], data, unpack(x)[1])
    return np.concatenate([ga, gb, gx.ravel()])


x0 = np.concatenate([theta, np.full(M * N, 0.8)])
rep = check_gradients(bound, bound_grad, x0)
print("bound:  max rel. error", f"{rep.max_rel_error:.2e}", "flagged", rep.flagged.tolist())

rep = check_gradients(lambda t: nb_log_likelihood(ModelParams.from_theta(t, 2), data),
                      lambda t: np.concatenate(grad_nb(ModelParams.from_theta(t, 2), data)), theta)
print("nb:     max rel. error", f"{rep.max_rel_error:.2e}", "flagged", rep.flagged.tolist())


# a deliberately wrong gradient is caught coordinate by coordinate
def broken(t):
    g = np.concatenate(grad_nb(ModelParams.from_theta(t, 2), data))
    g[1] *= 2
    return g


rep = check_gradients(lambda t: nb_log_likelihood(ModelParams.from_theta(t, 2), data), broken, theta)
print("broken: flagged", rep.flagged.tolist())
