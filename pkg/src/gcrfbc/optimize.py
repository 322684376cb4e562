"""Bound-constrained gradient ascent for both objectives, plus a gradient checker.

Two ways of keeping alpha, beta inside [floor, ceiling]:

* ``log``: ascend in u = log(theta), clamped to [log(floor), log(ceiling)].
* ``projected``: ascend in theta and clip after every trial step.

The search direction is either the plain gradient or an L-BFGS direction
built from recent gradient differences.  Either way every trial step goes
through an Armijo backtracking line search, so accepted iterates never
decrease the objective.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import PARAM_FLOOR, Dataset, ModelParams, graph_laplacians
from .errors import ConditioningError, DataError, DefinitenessError
from .learning import VariationalState, value_and_grad_b, value_and_grad_nb

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MIN_STEP = 1e-14
_PATIENCE = 3
_MEMORY = 10


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 500
    tol: float = 1e-6
    step: float = 0.1
    param_floor: float = PARAM_FLOOR
    param_ceiling: float = 1e10
    mode: str = "log"
    direction: str = "lbfgs"
    max_move: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol >= 0:
            raise ValueError("tol must be nonnegative")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.param_floor < self.param_ceiling:
            raise ValueError("need 0 < param_floor < param_ceiling")
        if self.mode not in ("log", "projected"):
            raise ValueError(f"mode must be 'log' or 'projected', got {self.mode!r}")
        if self.direction not in ("lbfgs", "gradient"):
            raise ValueError(f"direction must be 'lbfgs' or 'gradient', got {self.direction!r}")


@dataclass
class FitReport:
    final_params: ModelParams
    final_xi: Optional[VariationalState]
    objective_trace: List[float]
    iterations: int
    converged: bool

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _lbfgs_direction(g, pairs):
    """Two-loop recursion: approximate inverse-Hessian ascent direction."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    s, y, _ = pairs[-1]
    q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        q += s * (a - rho * (y @ q))
    return q


def _ascend(fun, x0, cfg: OptimizerConfig, project):
    """Monotone backtracking ascent.

    ``fun(x) -> (value, grad)``; ``project(x)`` maps a trial point back to the
    feasible set.  Returns (x, trace, iterations, converged).
    """
    f, g = fun(x0)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise DataError("objective is not finite at the initial point")
    x = x0
    trace = [f]
    pairs = []
    quiet = 0
    converged = False
    # gradient steps are scaled so that ``cfg.step`` bounds the largest coordinate move
    step0 = cfg.step / max(np.max(np.abs(g)), 1e-300)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if cfg.direction == "lbfgs" and pairs:
            d = _lbfgs_direction(g, pairs)
            if not g @ d > 0:
                pairs.clear()
                d, step = g, cfg.step / max(np.max(np.abs(g)), 1e-300)
            else:
                step = 1.0
        else:
            d, step = g, step0
        # trust bound on the largest coordinate move
        step = min(step, cfg.max_move / max(np.max(np.abs(d)), 1e-300))
        accepted = False
        while step > _MIN_STEP:
            cand = project(x + step * d)
            try:
                fc, gc = fun(cand)
            except (DefinitenessError, ConditioningError, DataError):
                fc = -np.inf
            if np.isfinite(fc) and fc >= f + _ARMIJO * max(g @ (cand - x), 0.0):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if pairs:
                # stale curvature information; retry along the gradient
                pairs.clear()
                step0 = cfg.step / max(np.max(np.abs(g)), 1e-300)
                continue
            # no ascent possible at machine precision
            converged = True
            logger.debug("line search stalled at iteration %d", it)
            break
        if cfg.direction == "gradient":
            step0 = 2.0 * step
        elif not pairs:
            step0 = step
        s_vec = cand - x
        y_vec = g - gc  # gradient change of the minimized function -f
        sy = s_vec @ y_vec
        if sy > 1e-12 * np.sqrt((s_vec @ s_vec) * (y_vec @ y_vec)):
            pairs.append((s_vec, y_vec, 1.0 / sy))
            if len(pairs) > _MEMORY:
                pairs.pop(0)
        rel = abs(fc - f) / max(abs(f), 1.0)
        x, f, g = cand, fc, gc
        trace.append(f)
        quiet = quiet + 1 if rel < cfg.tol else 0
        if quiet >= _PATIENCE:
            converged = True
            break
    return x, trace, it, converged


def _theta_transform(cfg: OptimizerConfig, n_theta: int):
    """(encode, decode, chain, project) for the theta block of the search vector."""
    floor, ceiling = cfg.param_floor, cfg.param_ceiling
    if cfg.mode == "log":
        lo, hi = np.log(floor), np.log(ceiling)

        def encode(theta):
            return np.log(theta)

        def decode(u):
            return np.exp(u)

        def chain(theta, grad):
            return theta * grad

        def project(u):
            return np.clip(u, lo, hi)
    else:
        def encode(theta):
            return np.asarray(theta, dtype=float)

        def decode(u):
            return u

        def chain(theta, grad):
            return grad

        def project(u):
            return np.clip(u, floor, ceiling)

    return encode, decode, chain, project


def _initial(data: Dataset, init_params):
    if init_params is None:
        return ModelParams(np.ones(data.n_predictors), np.ones(data.n_graphs))
    return init_params


def fit_b(
    data: Dataset,
    init_params: Optional[ModelParams] = None,
    init_xi: Optional[VariationalState] = None,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> FitReport:
    """Maximize the variational bound jointly over (alpha, beta, xi)."""
    data.require_labels()
    params = _initial(data, init_params)
    K = data.n_predictors
    n_theta = K + data.n_graphs
    xi0 = VariationalState.initial(data.n_instances, data.n_nodes) if init_xi is None else init_xi
    encode, decode, chain, project_theta = _theta_transform(cfg, n_theta)
    lap = graph_laplacians(data.similarities)
    shape = (data.n_instances, data.n_nodes)

    def fun(x):
        theta = decode(x[:n_theta])
        p = ModelParams.from_theta(theta, K)
        value, (ga, gb, gx) = value_and_grad_b(p, data, x[n_theta:].reshape(shape), lap)
        return value, np.concatenate([chain(theta, np.r_[ga, gb]), gx.ravel()])

    def project(x):
        return np.concatenate([project_theta(x[:n_theta]), x[n_theta:]])

    x0 = np.concatenate([encode(params.theta), np.asarray(xi0.xi, dtype=float).ravel()])
    x, trace, iters, converged = _ascend(fun, x0, cfg, project)
    final = ModelParams.from_theta(decode(x[:n_theta]), K)
    return FitReport(final, VariationalState(x[n_theta:].reshape(shape)), trace, iters, converged)


def fit_nb(
    data: Dataset,
    init_params: Optional[ModelParams] = None,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> FitReport:
    """Maximize the MAP plug-in log-likelihood over (alpha, beta)."""
    data.require_labels()
    params = _initial(data, init_params)
    K = data.n_predictors
    encode, decode, chain, project = _theta_transform(cfg, K + data.n_graphs)
    lap = graph_laplacians(data.similarities)

    def fun(u):
        theta = decode(u)
        value, (ga, gb) = value_and_grad_nb(ModelParams.from_theta(theta, K), data, lap)
        return value, chain(theta, np.r_[ga, gb])

    u, trace, iters, converged = _ascend(fun, encode(params.theta), cfg, project)
    return FitReport(ModelParams.from_theta(decode(u), K), None, trace, iters, converged)


def fit(variant: str, data: Dataset, init_params=None, cfg: OptimizerConfig = OptimizerConfig()) -> FitReport:
    if variant == "b":
        return fit_b(data, init_params, None, cfg)
    if variant == "nb":
        return fit_nb(data, init_params, cfg)
    raise ValueError(f"unknown variant {variant!r}; expected 'b' or 'nb'")


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------

@dataclass
class GradientCheckReport:
    analytic: np.ndarray
    numeric: np.ndarray
    rel_error: np.ndarray
    tolerance: float
    flagged: np.ndarray = field(init=False)

    def __post_init__(self):
        self.flagged = np.flatnonzero(self.rel_error > self.tolerance)

    @property
    def max_rel_error(self) -> float:
        return float(np.max(self.rel_error)) if self.rel_error.size else 0.0

    @property
    def ok(self) -> bool:
        return self.flagged.size == 0


def finite_difference(objective: Callable, point, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x0 = np.array(point, dtype=float)
    grad = np.empty(x0.size)
    flat = x0.ravel()
    for i in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (objective(xp.reshape(x0.shape)) - objective(xm.reshape(x0.shape))) / (2 * step)
    return grad


def check_gradients(
    objective: Callable,
    gradient: Callable,
    point,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    abs_floor: float = 1e-6,
) -> GradientCheckReport:
    """Compare ``gradient(point)`` against central differences of ``objective``.

    Relative error per coordinate is ``|a - n| / max(|a|, |n|, abs_floor)``;
    the floor keeps coordinates whose true derivative is ~0 from being judged
    on roundoff alone.
    """
    f0 = objective(np.array(point, dtype=float))
    if not np.isfinite(f0):
        raise DataError("objective is not finite at the check point")
    analytic = np.asarray(gradient(np.array(point, dtype=float)), dtype=float).ravel()
    numeric = finite_difference(objective, point, step)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), abs_floor)
    rel = np.abs(analytic - numeric) / scale
    return GradientCheckReport(analytic, numeric, rel, tolerance)
