"""Per-node probabilities P(y_i = 1 | x) for both model variants.

The Bayesian variant integrates the sigmoid against the latent marginal
N(mu_i, Sigma_ii) with composite Simpson on [mu_i - w sigma_i, mu_i + w sigma_i];
the MAP variant plugs in the latent mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit, log_expit

from .core import Dataset, ModelParams, StructuredInstance, batch_canonical, canonical
from .errors import ConditioningError

VARIANCE_FLOOR = 1e-12


def sigmoid(x):
    """Logistic function; saturates cleanly instead of overflowing."""
    return expit(x)


def log_sigmoid(x):
    """log(sigmoid(x)) without cancellation for large |x|."""
    return log_expit(x)


@dataclass(frozen=True)
class QuadConfig:
    """Composite Simpson settings: ``n_points`` nodes over ``+/- width`` std devs."""

    n_points: int = 257
    width: float = 10.0

    def __post_init__(self):
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError(f"n_points must be odd and >= 3, got {self.n_points}")
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")


def simpson_rule(a: float, b: float, n_points: int):
    """Nodes and weights of composite Simpson's rule on [a, b]."""
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of points >= 3")
    x = np.linspace(a, b, n_points)
    h = (b - a) / (n_points - 1)
    w = np.full(n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3.0


def expected_sigmoid(mu, var, quad: QuadConfig = QuadConfig()):
    """E[sigmoid(z)] for z ~ N(mu, var), elementwise.

    Substituting ``z = mu + sigma t`` turns every integral into one over the
    standard-normal range ``t in [-width, width]``, so a single set of Simpson
    nodes serves all nodes at once.
    """
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(var < 0):
        raise ConditioningError(f"negative marginal variance {var.min():.3g}")
    t, w = simpson_rule(-quad.width, quad.width, quad.n_points)
    phi_w = w * np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
    sd = np.sqrt(var)
    probs = expit(mu[..., None] + sd[..., None] * t) @ phi_w
    degenerate = var < VARIANCE_FLOOR
    if np.any(degenerate):
        probs = np.where(degenerate, expit(mu), probs)
    return np.clip(probs, 0.0, 1.0)


@dataclass(frozen=True)
class PredictionResult:
    """Probabilities plus the latent moments they came from.

    For a single instance the arrays are (N,); for a dataset they are (M, N)
    and ``variance_norm`` is the per-instance vector of norms.
    """

    probs: np.ndarray
    mu: np.ndarray
    marginal_var: np.ndarray
    variance_norm: Union[float, np.ndarray]

    @property
    def mean_variance_norm(self) -> float:
        return float(np.mean(self.variance_norm))


def _result(probs, mu, var):
    norm = np.linalg.norm(var, axis=-1)
    if np.ndim(norm) == 0:
        norm = float(norm)
    return PredictionResult(probs, mu, var, norm)


def _moments(params, data):
    if isinstance(data, StructuredInstance):
        g = canonical(params, data)
        return g.mu, g.marginal_var
    g = batch_canonical(params, data)
    return g.mu, g.marginal_var.copy()


def predict_b(
    params: ModelParams,
    data: Union[StructuredInstance, Dataset],
    quad: QuadConfig = QuadConfig(),
) -> PredictionResult:
    """Bayesian prediction: integrate the sigmoid over each latent marginal."""
    mu, var = _moments(params, data)
    return _result(expected_sigmoid(mu, var, quad), mu, var)


def predict_nb(params: ModelParams, data: Union[StructuredInstance, Dataset]) -> PredictionResult:
    """MAP prediction: sigmoid of the latent mean."""
    mu, var = _moments(params, data)
    return _result(expit(mu), mu, var)


def predict(variant: str, params, data, quad: QuadConfig = QuadConfig()) -> PredictionResult:
    if variant == "b":
        return predict_b(params, data, quad)
    if variant == "nb":
        return predict_nb(params, data)
    raise ValueError(f"unknown variant {variant!r}; expected 'b' or 'nb'")
