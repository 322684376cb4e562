"""Learning objectives and analytic gradients.

Bayesian variant
----------------
Each sigmoid factor is replaced by its exponential-quadratic lower bound

    sigmoid(x) >= sigmoid(xi) exp((x - xi)/2 - lambda(xi) (x^2 - xi^2)),
    lambda(xi) = (sigmoid(xi) - 1/2) / (2 xi),

which makes the latent integral Gaussian.  With P = 2Q, S^{-1} = P + 2 Lambda,
a = y - 1/2 + b (note P mu = b) and m = S a, the per-instance bound is

    sum_i [log sigmoid(xi_i) - xi_i/2 + lambda_i xi_i^2]
      - 1/2 mu^T P mu + 1/2 m^T S^{-1} m + 1/2 log|S| - 1/2 log|Sigma|.

The last term is kept: it is not constant in (alpha, beta).  Differentiating
with dP/dtheta = D and db/dtheta = db gives

    dL/dtheta = (m - mu)^T db + 1/2 mu^T D mu - 1/2 m^T D m + 1/2 tr((Sigma - S) D)
    dL/dxi_i  = lambda'(xi_i) (xi_i^2 - m_i^2 - S_ii)

with D = 2I, db = 2 R_k for alpha_k and D = 2 Lap_l, db = 0 for beta_l.

MAP variant
-----------
Bernoulli log-likelihood at sigmoid(mu); dmu = Sigma (db - D mu).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .core import (
    LOG_2PI,
    Dataset,
    ModelParams,
    StructuredInstance,
    batch_canonical,
    cholesky,
    cholesky_inverse,
    graph_laplacians,
    log_det_from_cholesky,
)
from .errors import DataError, DefinitenessError, ConditioningError, StructuralError

XI_INIT = 1.0
_SERIES_CUTOFF = 1e-2


def lambda_xi(xi):
    """Curvature coefficient of the sigmoid bound: (sigmoid(xi) - 1/2) / (2 xi).

    Even, strictly positive, equal to 1/8 at xi = 0.
    """
    xi = np.asarray(xi, dtype=float)
    ax = np.abs(xi)
    small = ax < _SERIES_CUTOFF
    safe = np.where(small, 1.0, ax)
    # tanh form avoids the cancellation in sigmoid(xi) - 1/2
    out = np.where(
        small,
        0.125 - ax**2 / 96.0 + ax**4 / 960.0 - 17.0 * ax**6 / 161280.0,
        np.tanh(0.5 * safe) / (4.0 * safe),
    )
    return out[()] if out.ndim == 0 else out


def lambda_xi_prime(xi):
    """d lambda / d xi."""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, xi)
    s = expit(safe)
    direct = s * (1.0 - s) / (2.0 * safe) - np.tanh(0.5 * safe) / (4.0 * safe * safe)
    series = -xi / 48.0 + xi**3 / 240.0 - 17.0 * xi**5 / 26880.0
    out = np.where(small, series, direct)
    return out[()] if out.ndim == 0 else out


def sigmoid_lower_bound(x, xi):
    """Right-hand side of the sigmoid bound; tight at x = +/- xi."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return np.exp(log_expit(xi) + 0.5 * (x - xi) - lambda_xi(xi) * (x * x - xi * xi))


@dataclass(frozen=True)
class VariationalState:
    """Variational parameters, one per (instance, node)."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float, copy=True)
        if xi.ndim == 1:
            xi = xi[None]
        if xi.ndim != 2:
            raise StructuralError(f"xi must be (M, N), got {xi.shape}")
        if not np.all(np.isfinite(xi)):
            raise DataError("xi has non-finite entries")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def initial(cls, n_instances: int, n_nodes: int, value: float = XI_INIT):
        return cls(np.full((n_instances, n_nodes), value))

    @property
    def lambdas(self) -> np.ndarray:
        return lambda_xi(self.xi)

    def __eq__(self, other):
        if not isinstance(other, VariationalState):
            return NotImplemented
        return np.array_equal(self.xi, other.xi)

    def __hash__(self):
        return hash(self.xi.tobytes())


@dataclass(frozen=True)
class BoundParts:
    """Per-instance pieces of the variational bound."""

    s_inv: np.ndarray
    m: np.ndarray
    lambda_diag: np.ndarray
    value: float


@dataclass(frozen=True)
class _BoundTerms:
    """Batched intermediate quantities shared by the bound and its gradient."""

    gauss: object
    lam: np.ndarray
    s_inv: np.ndarray
    s_mat: np.ndarray
    m: np.ndarray
    values: np.ndarray


def _check_xi(xi, data: Dataset):
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (data.n_instances, data.n_nodes):
        raise StructuralError(
            f"xi has shape {xi.shape}, expected {(data.n_instances, data.n_nodes)}"
        )
    return xi


def _bound_terms(params: ModelParams, data: Dataset, xi, laplacians=None) -> _BoundTerms:
    y = data.require_labels()
    g = batch_canonical(params, data, laplacians)
    lam = lambda_xi(xi)
    n = data.n_nodes
    idx = np.arange(n)
    s_inv = g.precision.copy()
    s_inv[..., idx, idx] += 2.0 * lam
    try:
        Ls = cholesky(s_inv)
    except DefinitenessError as exc:
        raise ConditioningError("S^{-1} = Sigma^{-1} + 2 Lambda is not positive definite") from exc
    s_mat = cholesky_inverse(Ls)
    a = y - 0.5 + g.b
    m = np.einsum("...ij,...j->...i", s_mat, a)
    xi_terms = (log_expit(xi) - 0.5 * xi + lam * xi * xi).sum(axis=-1)
    values = (
        xi_terms
        - 0.5 * np.sum(g.b * g.mu, axis=-1)
        + 0.5 * np.sum(a * m, axis=-1)
        + 0.5 * log_det_from_cholesky(g.factor)
        - 0.5 * log_det_from_cholesky(Ls)
    )
    return _BoundTerms(g, lam, s_inv, s_mat, m, values)


def _as_dataset(inst):
    if isinstance(inst, Dataset):
        return inst
    return Dataset(inst.predictors[None], inst.similarities[None],
                   None if inst.labels is None else inst.labels[None])


def bound_parts(params: ModelParams, inst: StructuredInstance, xi_row, labels=None) -> BoundParts:
    """Variational bound pieces for a single labeled instance."""
    if labels is not None:
        inst = StructuredInstance(inst.predictors, inst.similarities, labels)
    if inst.labels is None:
        raise DataError("bound_parts needs labels")
    data = _as_dataset(inst)
    xi = np.asarray(xi_row, dtype=float).reshape(1, -1)
    t = _bound_terms(params, data, _check_xi(xi, data))
    return BoundParts(t.s_inv[0], t.m[0], t.lam[0], float(t.values[0]))


def instance_bounds(params: ModelParams, data: Dataset, vstate: VariationalState) -> np.ndarray:
    """Per-instance bound values, shape (M,)."""
    xi = _check_xi(vstate.xi, data)
    return _bound_terms(params, data, xi).values


def lower_bound(params: ModelParams, data: Dataset, vstate: VariationalState) -> float:
    """Variational lower bound of the marginal log-likelihood, summed over instances."""
    return float(np.sum(instance_bounds(params, data, vstate)))


def _bound_gradient(t: _BoundTerms, data: Dataset, xi):
    g = t.gauss
    mu, m = g.mu, t.m
    diff = g.cov - t.s_mat  # Sigma - S
    # alpha_k: D = 2I, db = 2 R_k
    shared = np.sum(mu * mu, axis=-1) - np.sum(m * m, axis=-1) + np.trace(diff, axis1=-2, axis2=-1)
    grad_alpha = 2.0 * np.einsum("jn,jnk->k", m - mu, data.predictors) + shared.sum()
    # beta_l: D = 2 Lap_l, db = 0
    lap = g.laplacians
    grad_beta = (
        np.einsum("ji,jlik,jk->l", mu, lap, mu)
        - np.einsum("ji,jlik,jk->l", m, lap, m)
        + np.einsum("jik,jlki->l", diff, lap)
    )
    s_diag = np.diagonal(t.s_mat, axis1=-2, axis2=-1)
    grad_xi = lambda_xi_prime(xi) * (xi * xi - m * m - s_diag)
    return grad_alpha, grad_beta, grad_xi


def grad_b(params: ModelParams, data: Dataset, vstate: VariationalState):
    """Gradient of :func:`lower_bound` w.r.t. (alpha, beta, xi)."""
    xi = _check_xi(vstate.xi, data)
    return _bound_gradient(_bound_terms(params, data, xi), data, xi)


def value_and_grad_b(params: ModelParams, data: Dataset, xi, laplacians=None):
    """Bound and its gradient in one pass; ``xi`` is a raw (M, N) array."""
    xi = _check_xi(xi, data)
    t = _bound_terms(params, data, xi, laplacians)
    return float(t.values.sum()), _bound_gradient(t, data, xi)


def optimal_xi(params: ModelParams, data: Dataset, xi=None, max_iter: int = 500, tol: float = 1e-10):
    """Maximize the bound over xi for fixed (alpha, beta) by fixed-point iteration.

    Uses xi^2 = S_ii + m_i^2, the stationarity condition of the xi-gradient; each
    sweep cannot decrease the bound.  Instances stop individually, so the result
    for one instance does not depend on which others share the call.  Used to
    score held-out data, whose xi were never fitted.
    """
    if xi is None:
        xi = np.full((data.n_instances, data.n_nodes), XI_INIT)
    else:
        xi = np.array(_check_xi(xi, data), dtype=float)
    lap = graph_laplacians(data.similarities)
    active = np.arange(data.n_instances)
    for _ in range(max_iter):
        if active.size == 0:
            break
        sub = data.subset(active)
        t = _bound_terms(params, sub, xi[active], lap[active])
        new = np.sqrt(np.diagonal(t.s_mat, axis1=-2, axis2=-1) + t.m * t.m)
        moved = np.max(np.abs(new - xi[active]), axis=-1)
        xi[active] = new
        active = active[moved >= tol]
    return VariationalState(xi)


# ---------------------------------------------------------------------------
# MAP (non-Bayesian) variant
# ---------------------------------------------------------------------------

def bernoulli_log_likelihood(y, mu):
    return y * log_expit(mu) + (1.0 - y) * log_expit(-mu)


def nb_log_likelihood(params: ModelParams, data: Dataset, laplacians=None) -> float:
    """Bernoulli log-likelihood of the labels at sigmoid(mu)."""
    y = data.require_labels()
    g = batch_canonical(params, data, laplacians)
    return float(np.sum(bernoulli_log_likelihood(y, g.mu)))


def value_and_grad_nb(params: ModelParams, data: Dataset, laplacians=None):
    y = data.require_labels()
    g = batch_canonical(params, data, laplacians)
    value = float(np.sum(bernoulli_log_likelihood(y, g.mu)))
    # v = Sigma (y - sigmoid(mu)); dL = v^T (db - D mu)
    v = np.einsum("jik,jk->ji", g.cov, y - expit(g.mu))
    grad_alpha = 2.0 * np.einsum("jn,jnk->k", v, data.predictors) - 2.0 * np.sum(v * g.mu)
    grad_beta = -2.0 * np.einsum("ji,jlik,jk->l", v, g.laplacians, g.mu)
    return value, (grad_alpha, grad_beta)


def grad_nb(params: ModelParams, data: Dataset):
    """Gradient of :func:`nb_log_likelihood` w.r.t. (alpha, beta)."""
    return value_and_grad_nb(params, data)[1]


def exact_log_likelihood_1d(params: ModelParams, inst: StructuredInstance, n_points: int = 4001, width: float = 12.0):
    """Exact marginal log-likelihood of a single-node instance by 1-D quadrature.

    Only meaningful for N = 1; larger N needs a tensor grid (see the tests).
    """
    if inst.n_nodes != 1 or inst.labels is None:
        raise StructuralError("exact_log_likelihood_1d needs a labeled single-node instance")
    from .core import canonical
    from .inference import simpson_rule

    g = canonical(params, inst)
    sd = float(np.sqrt(g.marginal_var[0]))
    t, w = simpson_rule(-width, width, n_points)
    z = g.mu[0] + sd * t
    y = inst.labels[0]
    log_terms = bernoulli_log_likelihood(y, z) - 0.5 * t * t - 0.5 * LOG_2PI + np.log(w)
    top = log_terms.max()
    return float(top + np.log(np.exp(log_terms - top).sum()))
