"""Canonical Gaussian of the latent GCRF layer.

The latent vector ``z`` of one structured instance is Gaussian with precision
``2Q`` and mean ``mu = (2Q)^{-1} b`` where

    Q_ii = sum_k alpha_k + sum_h sum_l beta_l S^l_ih
    Q_ij = -sum_l beta_l S^l_ij            (i != j)
    b_i  = 2 sum_k alpha_k R_k(x_i)

Everything here works on stacks of instances as well (leading batch axis), which
is what the learning code uses; the single-instance functions are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DataError, DefinitenessError, StructuralError

PARAM_FLOOR = 1e-8
JITTER = 1e-10
DENSE_COVARIANCE_MAX_N = 512

LOG_2PI = np.log(2.0 * np.pi)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    """Positive weights of the unstructured predictors (alpha) and graphs (beta)."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = _frozen(np.atleast_1d(self.alpha))
        beta = _frozen(np.atleast_1d(self.beta))
        for name, v in (("alpha", alpha), ("beta", beta)):
            if v.ndim != 1 or v.size < 1:
                raise StructuralError(f"{name} must be a non-empty vector")
            if not np.all(np.isfinite(v)):
                raise DataError(f"{name} has non-finite entries")
            if np.any(v <= 0):
                raise DataError(f"{name} must be strictly positive, got {v.tolist()}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_predictors(self) -> int:
        return self.alpha.size

    @property
    def n_graphs(self) -> int:
        return self.beta.size

    @property
    def theta(self) -> np.ndarray:
        """Concatenation ``(alpha_1..alpha_K, beta_1..beta_L)``."""
        return np.concatenate([self.alpha, self.beta])

    @classmethod
    def from_theta(cls, theta, n_predictors: int) -> "ModelParams":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:n_predictors], theta[n_predictors:])

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return np.array_equal(self.alpha, other.alpha) and np.array_equal(
            self.beta, other.beta
        )

    def __hash__(self):
        return hash((self.alpha.tobytes(), self.beta.tobytes()))


def _check_similarities(S):
    if S.ndim < 3 or S.shape[-1] != S.shape[-2]:
        raise StructuralError(f"similarities must have shape (..., L, N, N), got {S.shape}")
    if not np.all(np.isfinite(S)):
        raise DataError("similarities have non-finite entries")
    if np.any(S < 0):
        raise DataError("similarities must be nonnegative")
    if not np.allclose(S, np.swapaxes(S, -1, -2), rtol=0.0, atol=1e-12):
        raise DataError("similarity matrices must be symmetric")
    if np.any(np.diagonal(S, axis1=-2, axis2=-1) != 0):
        raise DataError("similarity matrices must have a zero diagonal")


def _check_labels(y):
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")


@dataclass(frozen=True)
class StructuredInstance:
    """One graph-structured example.

    Parameters
    ----------
    predictors : (N, K) array
        Entry ``(i, k)`` is the output of unstructured predictor ``k`` on node ``i``.
    similarities : (L, N, N) array
        One symmetric, zero-diagonal, nonnegative similarity matrix per graph.
    labels : (N,) array of {0, 1}, optional
    """

    predictors: np.ndarray
    similarities: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        R = _frozen(self.predictors)
        if R.ndim == 1:
            R = _frozen(R[:, None])
        S = _frozen(self.similarities)
        if S.ndim == 2:
            S = _frozen(S[None])
        if R.ndim != 2:
            raise StructuralError(f"predictors must be (N, K), got {R.shape}")
        if not np.all(np.isfinite(R)):
            raise DataError("predictors have non-finite entries")
        _check_similarities(S)
        if S.shape[-1] != R.shape[0]:
            raise StructuralError(
                f"similarities are {S.shape[-1]}x{S.shape[-1]} but there are {R.shape[0]} nodes"
            )
        object.__setattr__(self, "predictors", R)
        object.__setattr__(self, "similarities", S)
        if self.labels is not None:
            y = _frozen(self.labels)
            if y.shape != (R.shape[0],):
                raise StructuralError(f"labels must have shape ({R.shape[0]},), got {y.shape}")
            _check_labels(y)
            object.__setattr__(self, "labels", y)

    @property
    def n_nodes(self) -> int:
        return self.predictors.shape[0]

    @property
    def n_predictors(self) -> int:
        return self.predictors.shape[1]

    @property
    def n_graphs(self) -> int:
        return self.similarities.shape[0]


@dataclass(frozen=True)
class Dataset:
    """M structured instances sharing N, K and L, stored as stacked arrays.

    ``predictors`` is (M, N, K), ``similarities`` is (M, L, N, N) and ``labels``
    is (M, N) or None.  ``metadata`` carries free-form provenance such as the
    generating config or split membership.
    """

    predictors: np.ndarray
    similarities: np.ndarray
    labels: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        R = _frozen(self.predictors)
        S = _frozen(self.similarities)
        if R.ndim != 3:
            raise StructuralError(f"predictors must be (M, N, K), got {R.shape}")
        if S.ndim != 4:
            raise StructuralError(f"similarities must be (M, L, N, N), got {S.shape}")
        if S.shape[0] != R.shape[0] or S.shape[-1] != R.shape[1]:
            raise StructuralError(
                f"predictors {R.shape} and similarities {S.shape} disagree"
            )
        if not np.all(np.isfinite(R)):
            raise DataError("predictors have non-finite entries")
        _check_similarities(S)
        object.__setattr__(self, "predictors", R)
        object.__setattr__(self, "similarities", S)
        if self.labels is not None:
            y = _frozen(self.labels)
            if y.shape != R.shape[:2]:
                raise StructuralError(f"labels must have shape {R.shape[:2]}, got {y.shape}")
            _check_labels(y)
            object.__setattr__(self, "labels", y)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @classmethod
    def from_instances(cls, instances: Sequence[StructuredInstance], metadata=None):
        instances = list(instances)
        if not instances:
            raise StructuralError("a dataset needs at least one instance")
        shapes = {(i.n_nodes, i.n_predictors, i.n_graphs) for i in instances}
        if len(shapes) != 1:
            raise StructuralError(f"instances disagree on (N, K, L): {sorted(shapes)}")
        has_labels = [i.labels is not None for i in instances]
        if any(has_labels) and not all(has_labels):
            raise StructuralError("either all instances are labeled or none are")
        labels = np.stack([i.labels for i in instances]) if all(has_labels) else None
        return cls(
            np.stack([i.predictors for i in instances]),
            np.stack([i.similarities for i in instances]),
            labels,
            metadata or {},
        )

    def __len__(self):
        return self.predictors.shape[0]

    @property
    def n_instances(self) -> int:
        return self.predictors.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.predictors.shape[1]

    @property
    def n_predictors(self) -> int:
        return self.predictors.shape[2]

    @property
    def n_graphs(self) -> int:
        return self.similarities.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def instance(self, j: int) -> StructuredInstance:
        labels = None if self.labels is None else self.labels[j]
        return StructuredInstance(self.predictors[j], self.similarities[j], labels)

    def __iter__(self) -> Iterator[StructuredInstance]:
        return (self.instance(j) for j in range(len(self)))

    def subset(self, indices, **metadata) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else self.labels[idx]
        meta = dict(self.metadata)
        meta.update(metadata)
        return Dataset(self.predictors[idx], self.similarities[idx], labels, meta)

    def require_labels(self):
        if self.labels is None:
            raise DataError("this operation needs a labeled dataset")
        return self.labels


def check_compatible(params: ModelParams, n_predictors: int, n_graphs: int):
    if params.n_predictors != n_predictors or params.n_graphs != n_graphs:
        raise StructuralError(
            f"params have K={params.n_predictors}, L={params.n_graphs} but data has "
            f"K={n_predictors}, L={n_graphs}"
        )


# ---------------------------------------------------------------------------
# Batched assembly.  All helpers accept arbitrary leading batch dimensions.
# ---------------------------------------------------------------------------

def graph_laplacians(similarities):
    """``D^l - S^l`` for every graph: the derivative of Q with respect to beta_l."""
    S = np.asarray(similarities, dtype=float)
    lap = -S.copy()
    idx = np.arange(S.shape[-1])
    lap[..., idx, idx] += S.sum(axis=-1)
    return lap


def assemble_precision(alpha, beta, laplacians):
    """Q = (sum alpha) I + sum_l beta_l Lap_l, batched over leading axes."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    Q = np.einsum("l,...lij->...ij", beta, laplacians)
    idx = np.arange(Q.shape[-1])
    Q[..., idx, idx] += alpha.sum()
    return Q


def assemble_b(alpha, predictors):
    return 2.0 * np.asarray(predictors, dtype=float) @ np.asarray(alpha, dtype=float)


def cholesky(A):
    """Lower Cholesky factor of a (stack of) SPD matrices.

    Retries once with ``JITTER`` added to the diagonal before giving up.
    """
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    A = np.array(A, dtype=float, copy=True)
    idx = np.arange(A.shape[-1])
    A[..., idx, idx] += JITTER
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(
            "precision matrix is not positive definite (parameter at or below the floor?)"
        ) from exc


def cholesky_inverse(L):
    """``(L L^T)^{-1}`` from a lower factor, via triangular solves against I."""
    eye = np.broadcast_to(np.eye(L.shape[-1]), L.shape)
    Linv = np.linalg.solve(L, eye)
    return np.swapaxes(Linv, -1, -2) @ Linv


def cholesky_solve(L, b):
    """Solve ``(L L^T) x = b`` for a vector (or stack of vectors) ``b``."""
    w = np.linalg.solve(L, b[..., None])
    return np.linalg.solve(np.swapaxes(L, -1, -2), w)[..., 0]


def log_det_from_cholesky(L):
    return 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)


@dataclass(frozen=True)
class GaussianCanonical:
    """Latent Gaussian of one instance.

    ``q`` is Q (precision is ``2Q``), ``factor`` the lower Cholesky factor of
    ``2Q``, ``mu`` the mean and ``marginal_var`` the diagonal of the covariance.
    ``cov`` is the dense covariance when N is at most ``DENSE_COVARIANCE_MAX_N``.
    """

    q: np.ndarray
    b: np.ndarray
    mu: np.ndarray
    factor: np.ndarray
    marginal_var: np.ndarray
    cov: Optional[np.ndarray] = None

    @property
    def n_nodes(self) -> int:
        return self.b.size

    @property
    def precision(self) -> np.ndarray:
        return 2.0 * self.q

    def covariance(self) -> np.ndarray:
        if self.cov is not None:
            return self.cov
        return cholesky_inverse(self.factor)

    def log_det_cov(self) -> float:
        return -float(log_det_from_cholesky(self.factor))


def build_precision(params: ModelParams, inst: StructuredInstance) -> np.ndarray:
    """Q for one instance (the precision matrix of the latent layer is 2Q)."""
    check_compatible(params, inst.n_predictors, inst.n_graphs)
    return assemble_precision(params.alpha, params.beta, graph_laplacians(inst.similarities))


def build_b(params: ModelParams, inst: StructuredInstance) -> np.ndarray:
    check_compatible(params, inst.n_predictors, inst.n_graphs)
    if not np.all(np.isfinite(inst.predictors)):
        raise DataError("predictors have non-finite entries")
    return assemble_b(params.alpha, inst.predictors)


def _marginal_variances(L, dense: bool):
    if dense:
        cov = cholesky_inverse(L)
        return cov, np.diagonal(cov, axis1=-2, axis2=-1).copy()
    # column-by-column: Sigma_ii = ||L^{-1} e_i||^2
    n = L.shape[-1]
    var = np.empty(L.shape[:-1])
    for i in range(n):
        e = np.zeros(L.shape[:-1])
        e[..., i] = 1.0
        w = np.linalg.solve(L, e[..., None])[..., 0]
        var[..., i] = np.sum(w * w, axis=-1)
    return None, var


def canonical(
    params: ModelParams,
    inst: StructuredInstance,
    dense_max_n: int = DENSE_COVARIANCE_MAX_N,
) -> GaussianCanonical:
    """Assemble Q, b, the Cholesky factor of 2Q, the mean and marginal variances."""
    q = build_precision(params, inst)
    b = build_b(params, inst)
    L = cholesky(2.0 * q)
    mu = cholesky_solve(L, b)
    cov, var = _marginal_variances(L, inst.n_nodes <= dense_max_n)
    return GaussianCanonical(
        _frozen(q), _frozen(b), _frozen(mu), _frozen(L), _frozen(var),
        None if cov is None else _frozen(cov),
    )


def log_density(g: GaussianCanonical, z) -> float:
    """log N(z | mu, Sigma) using the stored factor of the precision 2Q."""
    z = np.asarray(z, dtype=float)
    if z.shape != g.mu.shape:
        raise StructuralError(f"z has shape {z.shape}, expected {g.mu.shape}")
    d = z - g.mu
    w = g.factor.T @ d  # d^T (2Q) d = ||L^T d||^2
    return float(
        -0.5 * (g.n_nodes * LOG_2PI + g.log_det_cov()) - 0.5 * w @ w
    )


@dataclass(frozen=True)
class BatchGaussian:
    """Stacked latent Gaussians for a whole dataset (learning-path representation)."""

    laplacians: np.ndarray  # (M, L, N, N)
    precision: np.ndarray  # (M, N, N), this is 2Q
    b: np.ndarray  # (M, N)
    factor: np.ndarray  # (M, N, N)
    cov: np.ndarray  # (M, N, N)
    mu: np.ndarray  # (M, N)

    @property
    def marginal_var(self) -> np.ndarray:
        return np.diagonal(self.cov, axis1=-2, axis2=-1)


def batch_canonical(params: ModelParams, data: Dataset, laplacians=None) -> BatchGaussian:
    check_compatible(params, data.n_predictors, data.n_graphs)
    lap = graph_laplacians(data.similarities) if laplacians is None else laplacians
    P = 2.0 * assemble_precision(params.alpha, params.beta, lap)
    b = assemble_b(params.alpha, data.predictors)
    L = cholesky(P)
    cov = cholesky_inverse(L)
    mu = cholesky_solve(L, b)
    return BatchGaussian(lap, P, b, L, cov, mu)
