"""JSON file formats for datasets and fitted models.

Dataset document::

    {"format": "gcrfbc-dataset", "version": 1,
     "n_nodes": N, "K": K, "L": L, "metadata": {...},
     "instances": [{"predictors": [[...] * K] * N,
                    "similarities": [[[i, j, w], ...] * L],   # upper triangle, i < j
                    "labels": [0, 1, ...] or null}, ...]}

Model document::

    {"format": "gcrfbc-model", "version": 1, "variant": "b" | "nb",
     "alpha": [...], "beta": [...], "xi": [[...], ...] (optional)}

Floats are written with Python's shortest round-trip repr, so loading a saved
model gives back bit-identical arrays.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .core import Dataset, ModelParams
from .errors import GCRFError, ParseError
from .learning import VariationalState

DATASET_FORMAT = "gcrfbc-dataset"
MODEL_FORMAT = "gcrfbc-model"
VERSION = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _field(doc, name, where):
    if not isinstance(doc, dict) or name not in doc:
        raise ParseError(f"{where}: missing field '{name}'")
    return doc[name]


def _check_header(doc, fmt, path):
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    got = _field(doc, "format", path)
    if got != fmt:
        raise ParseError(f"{path}: field 'format' is {got!r}, expected {fmt!r}")
    version = _field(doc, "version", path)
    if version != VERSION:
        raise ParseError(f"{path}: unsupported version {version!r}")


def _float_vector(value, name, where, positive=False):
    if not isinstance(value, list) or not value:
        raise ParseError(f"{where}: field '{name}' must be a non-empty list of numbers")
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ParseError(f"{where}: field '{name}[{i}]' is not a finite number: {v!r}")
        if positive and v <= 0:
            raise ParseError(f"{where}: field '{name}[{i}]' must be > 0, got {v!r}")
    return np.array(value, dtype=float)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def save_model(path, params: ModelParams, xi: Optional[VariationalState] = None, variant: str = "nb"):
    doc = {
        "format": MODEL_FORMAT,
        "version": VERSION,
        "variant": variant,
        "alpha": params.alpha.tolist(),
        "beta": params.beta.tolist(),
    }
    if xi is not None:
        doc["xi"] = xi.xi.tolist()
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path) -> Tuple[ModelParams, Optional[VariationalState], str]:
    """Returns (params, xi or None, variant)."""
    doc = _read_json(path)
    _check_header(doc, MODEL_FORMAT, path)
    variant = doc.get("variant", "nb")
    if variant not in ("b", "nb"):
        raise ParseError(f"{path}: field 'variant' must be 'b' or 'nb', got {variant!r}")
    alpha = _float_vector(_field(doc, "alpha", path), "alpha", path, positive=True)
    beta = _float_vector(_field(doc, "beta", path), "beta", path, positive=True)
    xi = None
    if doc.get("xi") is not None:
        rows = doc["xi"]
        if not isinstance(rows, list) or not rows:
            raise ParseError(f"{path}: field 'xi' must be a list of rows")
        xi = VariationalState(np.stack([_float_vector(r, f"xi[{j}]", path) for j, r in enumerate(rows)]))
    return ModelParams(alpha, beta), xi, variant


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def dataset_to_dict(data: Dataset) -> dict:
    iu, ju = np.triu_indices(data.n_nodes, k=1)
    instances = []
    for j in range(data.n_instances):
        graphs = []
        for S in data.similarities[j]:
            w = S[iu, ju]
            keep = w != 0
            graphs.append([[int(a), int(b), float(c)] for a, b, c in zip(iu[keep], ju[keep], w[keep])])
        instances.append({
            "predictors": data.predictors[j].tolist(),
            "similarities": graphs,
            "labels": None if data.labels is None else [int(v) for v in data.labels[j]],
        })
    return {
        "format": DATASET_FORMAT,
        "version": VERSION,
        "n_nodes": data.n_nodes,
        "K": data.n_predictors,
        "L": data.n_graphs,
        "metadata": _jsonable(data.metadata),
        "instances": instances,
    }


def dataset_from_dict(doc, where="<dataset>") -> Dataset:
    _check_header(doc, DATASET_FORMAT, where)
    N, K, L = (_field(doc, k, where) for k in ("n_nodes", "K", "L"))
    for name, v in (("n_nodes", N), ("K", K), ("L", L)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ParseError(f"{where}: field '{name}' must be a positive integer")
    raw = _field(doc, "instances", where)
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{where}: field 'instances' must be a non-empty list")
    M = len(raw)
    R = np.empty((M, N, K))
    S = np.zeros((M, L, N, N))
    labels = []
    for j, inst in enumerate(raw):
        at = f"{where}: instances[{j}]"
        rows = _field(inst, "predictors", at)
        if not isinstance(rows, list) or len(rows) != N:
            raise ParseError(f"{at}: field 'predictors' must have {N} rows")
        for i, row in enumerate(rows):
            vec = _float_vector(row, f"predictors[{i}]", at)
            if vec.size != K:
                raise ParseError(f"{at}: field 'predictors[{i}]' must have {K} entries")
            R[j, i] = vec
        graphs = _field(inst, "similarities", at)
        if not isinstance(graphs, list) or len(graphs) != L:
            raise ParseError(f"{at}: field 'similarities' must hold {L} edge lists")
        for l, edges in enumerate(graphs):
            if not isinstance(edges, list):
                raise ParseError(f"{at}: field 'similarities[{l}]' must be a list of [i, j, w]")
            for e, edge in enumerate(edges):
                ok = (
                    isinstance(edge, list) and len(edge) == 3
                    and all(isinstance(x, int) and not isinstance(x, bool) for x in edge[:2])
                    and isinstance(edge[2], (int, float)) and not isinstance(edge[2], bool)
                )
                if not ok:
                    raise ParseError(f"{at}: field 'similarities[{l}][{e}]' must be [i, j, weight]")
                a, b, w = edge
                if not (0 <= a < b < N):
                    raise ParseError(f"{at}: field 'similarities[{l}][{e}]' needs 0 <= i < j < {N}")
                if not math.isfinite(w) or w < 0:
                    raise ParseError(f"{at}: field 'similarities[{l}][{e}]' weight must be >= 0")
                S[j, l, a, b] = S[j, l, b, a] = w
        y = inst.get("labels") if isinstance(inst, dict) else None
        if y is not None:
            if not isinstance(y, list) or len(y) != N or any(v not in (0, 1) or isinstance(v, bool) for v in y):
                raise ParseError(f"{at}: field 'labels' must be {N} values in {{0, 1}}")
        labels.append(y)
    has = [y is not None for y in labels]
    if any(has) and not all(has):
        raise ParseError(f"{where}: either all instances carry 'labels' or none do")
    Y = np.array(labels, dtype=float) if all(has) else None
    meta = doc.get("metadata") or {}
    try:
        return Dataset(R, S, Y, meta)
    except GCRFError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def save_dataset(path, data: Dataset):
    Path(path).write_text(json.dumps(dataset_to_dict(data)) + "\n")


def load_dataset(path) -> Dataset:
    return dataset_from_dict(_read_json(path), str(path))
