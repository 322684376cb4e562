import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcrfbc.core import ModelParams
from gcrfbc.errors import ParseError
from gcrfbc.io import dataset_from_dict, dataset_to_dict, load_dataset, load_model, save_dataset, save_model
from gcrfbc.learning import VariationalState
from gcrfbc.synthetic import GenConfig, generate


@settings(max_examples=50, deadline=None)
@given(theta=st.lists(st.floats(1e-8, 1e10), min_size=4, max_size=4))
def test_prop_model_roundtrip_bit_equal(tmp_path_factory, theta):
    path = tmp_path_factory.mktemp("m") / "model.json"
    p = ModelParams.from_theta(theta, 2)
    save_model(path, p)
    q, xi, variant = load_model(path)
    assert q == p and xi is None and variant == "nb"


def test_model_roundtrip_with_xi(tmp_path, rng):
    p = ModelParams(rng.uniform(0, 5, 2), rng.uniform(0, 5, 3))
    xi = VariationalState(rng.normal(size=(4, 3)))
    save_model(tmp_path / "m.json", p, xi, "b")
    q, xi2, variant = load_model(tmp_path / "m.json")
    assert q == p and xi2 == xi and variant == "b"


def _write(tmp_path, doc):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    return path


def test_negative_alpha_names_field(tmp_path):
    path = _write(tmp_path, {"format": "gcrfbc-model", "version": 1, "alpha": [1.0, -1.0], "beta": [1.0]})
    with pytest.raises(ParseError, match=r"alpha\[1\]"):
        load_model(path)


def test_missing_beta(tmp_path):
    path = _write(tmp_path, {"format": "gcrfbc-model", "version": 1, "alpha": [1.0]})
    with pytest.raises(ParseError, match="beta"):
        load_model(path)


def test_bad_header_and_syntax(tmp_path):
    with pytest.raises(ParseError, match="format"):
        load_model(_write(tmp_path, {"format": "other", "version": 1}))
    with pytest.raises(ParseError, match="version"):
        load_model(_write(tmp_path, {"format": "gcrfbc-model", "version": 7}))
    bad = tmp_path / "broken.json"
    bad.write_text('{"format": "gcrfbc-model",\n "alpha": [1.0,,]}')
    with pytest.raises(ParseError, match=r"broken.json:2:"):
        load_model(bad)


def test_dataset_roundtrip(tmp_path):
    data = generate(GenConfig(n_nodes=5, n_instances=12, seed=4))
    save_dataset(tmp_path / "d.json", data)
    back = load_dataset(tmp_path / "d.json")
    assert np.array_equal(back.predictors, data.predictors)
    assert np.array_equal(back.similarities, data.similarities)
    assert np.array_equal(back.labels, data.labels)
    assert back.metadata["generator"]["seed"] == 4


def test_dataset_unlabeled_roundtrip():
    data = generate(GenConfig(n_nodes=3, n_instances=4, seed=1))
    from gcrfbc.core import Dataset
    bare = Dataset(data.predictors, data.similarities)
    assert dataset_from_dict(dataset_to_dict(bare)).labels is None


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["instances"][0].__setitem__("labels", [0, 1, 2]), "labels"),
    (lambda d: d["instances"][1]["similarities"][0].append([2, 1, 0.5]), r"similarities\[0\]"),
    (lambda d: d["instances"][0]["similarities"][1].append([0, 1, -0.5]), "weight"),
    (lambda d: d["instances"][0]["predictors"].pop(), "predictors"),
    (lambda d: d["instances"][0]["predictors"][0].__setitem__(1, "x"), r"predictors\[0\]\[1\]"),
    (lambda d: d.pop("K"), "'K'"),
    (lambda d: d["instances"][1].__setitem__("labels", None), "labels"),
])
def test_dataset_errors_name_field(mutate, field):
    doc = dataset_to_dict(generate(GenConfig(n_nodes=3, n_instances=3, seed=1)))
    mutate(doc)
    with pytest.raises(ParseError, match=field):
        dataset_from_dict(doc)
