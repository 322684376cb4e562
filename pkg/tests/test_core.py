import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad as scipy_quad

from gcrfbc.core import (
    Dataset, ModelParams, StructuredInstance, batch_canonical, build_b, build_precision,
    canonical, cholesky, log_density,
)
from gcrfbc.errors import DataError, DefinitenessError, StructuralError

from conftest import dense_q, random_instance, random_params, random_similarities


def _inst(R, S, y=None):
    return StructuredInstance(np.asarray(R, float), np.asarray(S, float), y)


# ---------------------------------------------------------------- params / instances

def test_params_reject_nonpositive():
    with pytest.raises(DataError):
        ModelParams([1.0, 0.0], [1.0])
    with pytest.raises(DataError):
        ModelParams([1.0], [-2.0])
    with pytest.raises(StructuralError):
        ModelParams([], [1.0])


def test_params_theta_roundtrip_and_readonly():
    p = ModelParams([0.3, 2.0], [5.0])
    assert np.array_equal(p.theta, [0.3, 2.0, 5.0])
    assert ModelParams.from_theta(p.theta, 2) == p
    with pytest.raises(ValueError):
        p.alpha[0] = 1.0


def test_instance_validation():
    S = np.zeros((1, 2, 2))
    with pytest.raises(DataError):
        _inst([[np.nan], [0.0]], S)
    asym = np.array([[[0.0, 1.0], [0.5, 0.0]]])
    with pytest.raises(DataError):
        _inst([[0.0], [0.0]], asym)
    diag = np.array([[[1.0, 0.0], [0.0, 0.0]]])
    with pytest.raises(DataError):
        _inst([[0.0], [0.0]], diag)
    with pytest.raises(DataError):
        _inst([[0.0], [0.0]], -np.array([[[0.0, 1.0], [1.0, 0.0]]]))
    with pytest.raises(DataError):
        _inst([[0.0], [0.0]], S, np.array([0.0, 2.0]))


def test_dataset_subset_and_iteration(rng):
    data = Dataset.from_instances([random_instance(rng, 3) for _ in range(5)])
    sub = data.subset([4, 1], tag="x")
    assert sub.n_instances == 2 and sub.metadata["tag"] == "x"
    assert np.array_equal(sub.predictors[0], data.predictors[4])
    assert [i.n_nodes for i in data] == [3] * 5


def test_dimension_mismatch_is_structural(rng):
    inst = random_instance(rng, 3, K=2, L=2)
    with pytest.raises(StructuralError):
        build_precision(ModelParams([1.0], [1.0, 1.0]), inst)
    with pytest.raises(StructuralError):
        build_b(ModelParams([1.0, 1.0], [1.0]), inst)


# ---------------------------------------------------------------- precision

def test_precision_single_node():
    Q = build_precision(ModelParams([1.0], [1.0]), _inst([[0.3]], np.zeros((1, 1, 1))))
    assert np.array_equal(Q, [[1.0]])


def test_precision_two_nodes():
    S = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    Q = build_precision(ModelParams([1.0], [1.0]), _inst([[0.0], [0.0]], S))
    assert np.array_equal(Q, [[2.0, -1.0], [-1.0, 2.0]])


def test_precision_matches_loop_oracle(rng):
    for _ in range(10):
        inst = random_instance(rng, 4, K=3, L=2)
        p = random_params(rng, K=3, L=2)
        Q = build_precision(p, inst)
        assert np.allclose(Q, dense_q(p.alpha, p.beta, inst.similarities), atol=1e-13)
        assert np.array_equal(Q, Q.T)


def test_precision_positive_definite_by_eigensolver(rng):
    for _ in range(20):
        inst = random_instance(rng, 3)
        p = random_params(rng)
        assert np.linalg.eigvalsh(2 * build_precision(p, inst)).min() > 0


def test_precision_linear_in_beta(rng):
    inst = random_instance(rng, 4, K=2, L=3)
    alpha = np.array([0.4, 1.1])
    beta = np.array([0.5, 2.0, 3.0])
    full = build_precision(ModelParams(alpha, beta), inst)
    parts = []
    for l in range(3):
        single = StructuredInstance(inst.predictors, inst.similarities[l:l + 1])
        parts.append(build_precision(ModelParams(alpha, beta[l:l + 1]), single))
    alpha_only = alpha.sum() * np.eye(4)
    assert np.allclose(full, sum(parts) - 2 * alpha_only, atol=1e-13)


def test_cholesky_failure_raises_definiteness():
    with pytest.raises(DefinitenessError):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


# ---------------------------------------------------------------- b and canonical

def test_b_examples():
    S1 = np.zeros((1, 1, 1))
    assert np.array_equal(build_b(ModelParams([1.0], [1.0]), _inst([[0.5]], S1)), [1.0])
    S2 = np.zeros((1, 1, 1))
    assert np.array_equal(build_b(ModelParams([2.0, 3.0], [1.0]), _inst([[1.0, 1.0]], S2)), [10.0])


def test_b_matches_loop_oracle(rng):
    inst = random_instance(rng, 5)
    b = build_b(ModelParams([0.3, 0.7], [1.0, 1.0]), inst)
    expected = [2 * (0.3 * inst.predictors[i, 0] + 0.7 * inst.predictors[i, 1]) for i in range(5)]
    assert np.allclose(b, expected, rtol=0, atol=1e-15)


def test_canonical_single_node():
    g = canonical(ModelParams([1.0], [1.0]), _inst([[0.7]], np.zeros((1, 1, 1))))
    assert np.allclose(g.mu, [0.7])
    assert np.allclose(g.covariance(), [[0.5]])
    assert np.allclose(g.marginal_var, [0.5])


def test_canonical_symmetric_pair():
    S = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    # 2 alpha r = 2  ->  r = 1
    g = canonical(ModelParams([1.0], [1.0]), _inst([[1.0], [1.0]], S))
    assert np.allclose(g.mu, [1.0, 1.0])


def test_canonical_matches_explicit_inverse(rng):
    for _ in range(10):
        inst = random_instance(rng, 3)
        p = random_params(rng)
        g = canonical(p, inst)
        P = 2 * dense_q(p.alpha, p.beta, inst.similarities)
        b = np.array([2 * inst.predictors[i] @ p.alpha for i in range(3)])
        cov = np.linalg.inv(P)
        assert np.allclose(g.mu, cov @ b, rtol=0, atol=1e-8)
        assert np.allclose(g.marginal_var, np.diag(cov), rtol=0, atol=1e-12)
        assert np.linalg.norm(g.precision @ g.mu - g.b) <= 1e-10 * np.linalg.norm(g.b)


def test_sparse_marginal_path_agrees_with_dense(rng):
    inst = random_instance(rng, 6)
    p = random_params(rng)
    dense = canonical(p, inst)
    solved = canonical(p, inst, dense_max_n=0)
    assert solved.cov is None
    assert np.allclose(dense.marginal_var, solved.marginal_var, rtol=1e-12)
    assert np.allclose(dense.covariance(), solved.covariance(), rtol=1e-12)


def test_batch_matches_single(rng):
    data = Dataset.from_instances([random_instance(rng, 4) for _ in range(6)])
    p = random_params(rng)
    bg = batch_canonical(p, data)
    for j, inst in enumerate(data):
        g = canonical(p, inst)
        assert np.allclose(bg.mu[j], g.mu, atol=1e-13)
        assert np.allclose(bg.marginal_var[j], g.marginal_var, atol=1e-13)


# ---------------------------------------------------------------- log density

def test_log_density_standard_normal_at_mode():
    # alpha = 1/2 gives precision 2Q = 1
    g = canonical(ModelParams([0.5], [1.0]), _inst([[0.0]], np.zeros((1, 1, 1))))
    assert log_density(g, [0.0]) == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_log_density_quadratic_form_oracle(rng):
    inst = random_instance(rng, 2)
    p = random_params(rng)
    g = canonical(p, inst)
    P = 2 * dense_q(p.alpha, p.beta, inst.similarities)
    z = rng.normal(size=2)
    d = z - g.mu
    expected = -0.5 * d @ P @ d - np.log(2 * np.pi) + 0.5 * np.log(np.linalg.det(P))
    assert log_density(g, z) == pytest.approx(expected, abs=1e-12)


def test_log_density_maximal_at_mean(rng):
    g = canonical(random_params(rng), random_instance(rng, 3))
    peak = log_density(g, g.mu)
    for _ in range(20):
        assert log_density(g, g.mu + 1e-3 * rng.normal(size=3)) < peak


def test_log_density_integrates_to_one():
    g = canonical(ModelParams([0.8], [1.0]), _inst([[0.4]], np.zeros((1, 1, 1))))
    total, _ = scipy_quad(lambda z: np.exp(log_density(g, [z])), -20, 20, epsabs=1e-12)
    assert total == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------- properties

_pos = st.floats(1e-3, 1e3)


@settings(max_examples=60, deadline=None)
@given(alpha=st.lists(_pos, min_size=2, max_size=2), beta=st.lists(_pos, min_size=2, max_size=2),
       seed=st.integers(0, 2**31 - 1), n=st.integers(1, 6))
def test_prop_factorization_succeeds(alpha, beta, seed, n):
    rng = np.random.default_rng(seed)
    inst = StructuredInstance(rng.uniform(-1, 1, (n, 2)), random_similarities(rng, 2, n))
    Q = build_precision(ModelParams(alpha, beta), inst)
    cholesky(2 * Q)
    assert np.linalg.eigvalsh(2 * Q).min() > 0


@settings(max_examples=60, deadline=None)
@given(c=st.floats(1e-3, 1e3), seed=st.integers(0, 2**31 - 1))
def test_prop_mean_scale_invariant(c, seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 4)
    p = random_params(rng)
    mu = canonical(p, inst).mu
    mu_c = canonical(ModelParams(c * p.alpha, c * p.beta), inst).mu
    assert np.allclose(mu, mu_c, rtol=1e-8, atol=1e-10)
