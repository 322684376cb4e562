"""Rank AUC and dataset-level evaluation of a fitted model."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import Dataset, ModelParams
from .errors import UndefinedMetricError
from .inference import QuadConfig, predict
from .learning import bernoulli_log_likelihood, instance_bounds, optimal_xi

LIKELIHOOD_KIND = {"b": "lower_bound", "nb": "exact"}


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores share their average rank, so each tied positive/negative pair
    contributes 1/2.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores but {labels.size} labels")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EvalReport:
    """Test-set summary in the layout of the comparison table.

    ``likelihood_kind`` is ``"lower_bound"`` for the Bayesian variant (the
    variational bound, with xi fitted to the evaluated data) and ``"exact"`` for
    the MAP variant.
    """

    variant: str
    auc: float
    log_likelihood: float
    likelihood_kind: str
    variance_norm: float
    per_node_probs: np.ndarray

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "auc": self.auc,
            "log_likelihood": self.log_likelihood,
            "likelihood_kind": self.likelihood_kind,
            "variance_norm": self.variance_norm,
            "n_instances": int(self.per_node_probs.shape[0]),
            "n_nodes": int(self.per_node_probs.shape[1]),
        }


def _chunk_scores(variant, params, data, quad):
    pred = predict(variant, params, data, quad)
    if variant == "b":
        ll = instance_bounds(params, data, optimal_xi(params, data))
    else:
        ll = bernoulli_log_likelihood(data.labels, pred.mu).sum(axis=-1)
    return pred.probs, np.atleast_1d(pred.variance_norm), ll


def evaluate(
    variant: str,
    params: ModelParams,
    data: Dataset,
    quad: QuadConfig = QuadConfig(),
    n_jobs: int = 1,
) -> EvalReport:
    """AUC over pooled node-level predictions, likelihood and mean variance norm.

    ``n_jobs > 1`` evaluates contiguous blocks of instances on a thread pool;
    per-instance results do not depend on the blocking, so the report is the
    same as the serial one.
    """
    if variant not in LIKELIHOOD_KIND:
        raise ValueError(f"unknown variant {variant!r}; expected 'b' or 'nb'")
    y = data.require_labels()
    if n_jobs <= 1 or data.n_instances < 2:
        parts = [_chunk_scores(variant, params, data, quad)]
    else:
        blocks = np.array_split(np.arange(data.n_instances), min(n_jobs, data.n_instances))
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(
                lambda idx: _chunk_scores(variant, params, data.subset(idx), quad), blocks
            ))
    probs = np.concatenate([p[0] for p in parts])
    norms = np.concatenate([p[1] for p in parts])
    ll = np.concatenate([p[2] for p in parts])
    return EvalReport(
        variant=variant,
        auc=auc(probs, y),
        log_likelihood=float(np.sum(ll)),
        likelihood_kind=LIKELIHOOD_KIND[variant],
        variance_norm=float(np.mean(norms)),
        per_node_probs=probs,
    )


def best_predictor_auc(data: Dataset) -> float:
    """Best AUC achieved by any single unstructured predictor column."""
    y = data.require_labels()
    return max(auc(data.predictors[:, :, k], y) for k in range(data.n_predictors))
