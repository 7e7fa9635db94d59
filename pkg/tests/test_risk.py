import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffspec.errors import InvalidArgumentError, RegimeError
from rffspec.features import classical_feature_map, surrogate_gram, uniform_box_proposal, \
    feature_map_from_proposal
from rffspec.kernelspace import KernelModel, kernel_matrix
from rffspec.risk import (
    exact_risk,
    risk_inflation_check,
    numerical_rank,
    ridge_smoother,
    risk_upper_bound,
    smoother_risk,
    surrogate_risk,
)


def _instance(n=25, sigma=0.3, lam=0.05, seed=0):
    rng = np.random.default_rng(seed)
    X = np.sort(rng.uniform(-2, 2, n))[:, None]
    return X, kernel_matrix(X, sigma), rng.standard_normal(n), KernelModel.for_data(X, sigma, lam)


def test_exact_risk_degenerate_cases():
    X, K, f, m = _instance()
    r = exact_risk(K, m.lam, np.zeros(25), 0.7)
    assert r.bias == 0.0
    ev = np.linalg.eigvalsh(K).clip(0)
    assert r.variance == pytest.approx(0.49 * np.sum((ev / (ev + m.lam)) ** 2) / 25, rel=1e-12)
    r = exact_risk(K, m.lam, f, 0.0)
    assert r.variance == 0.0 and r.total == r.bias
    with pytest.raises(InvalidArgumentError):
        exact_risk(K, 0.0, f, 1.0)


def test_smoother_risk_examples():
    f = np.array([1.0, -2.0, 0.5])
    r = smoother_risk(np.eye(3), f, 0.5)
    assert r.bias == 0.0 and r.variance == pytest.approx(0.25)
    r = smoother_risk(np.zeros((3, 3)), f, 0.5)
    assert r.bias == pytest.approx(np.sum(f ** 2) / 3) and r.variance == 0.0


@given(st.integers(0, 10_000), st.floats(1e-3, 10.0))
def test_smoother_matches_exact(seed, lam):
    X, K, f, _ = _instance(seed=seed)
    A = K @ np.linalg.inv(K + lam * np.eye(25))
    a, b = smoother_risk(A, f, 0.3), exact_risk(K, lam, f, 0.3)
    assert a.total == pytest.approx(b.total, rel=1e-9, abs=1e-12)


def test_exact_risk_against_monte_carlo():
    X, K, f, m = _instance(n=10)
    A = K @ np.linalg.inv(K + m.lam * np.eye(10))
    rng = np.random.default_rng(3)
    nu = rng.normal(0, 0.4, size=(200_000, 10))
    est = (f + nu) @ A.T
    mc = np.mean(np.sum((est - f) ** 2, axis=1)) / 10
    assert mc == pytest.approx(exact_risk(K, m.lam, f, 0.4).total, rel=0.01)


@pytest.mark.parametrize("seed", range(20))
def test_upper_bound_dominates(seed):
    rng = np.random.default_rng(seed)
    X, K, f, _ = _instance(n=20, sigma=rng.uniform(0.05, 1.0), seed=seed)
    lam = 10 ** rng.uniform(-3, 1)
    sig = rng.uniform(0, 2)
    assert exact_risk(K, lam, f, sig).total <= risk_upper_bound(K, lam, f, sig) * (1 + 1e-12)


def test_identity_kernel_bound():
    f = np.array([1.0, 2.0, -1.0, 0.0])
    # lam f^T (2I)^{-1} f / n + sigma^2 n/2 / n
    assert risk_upper_bound(np.eye(4), 1.0, f, 1.0) == pytest.approx(0.5 * 6 / 4 + 0.5)


def test_variance_decreases_in_lambda():
    X, K, f, _ = _instance()
    lams = np.logspace(-4, 2, 15)
    var = [exact_risk(K, l, f, 1.0).variance for l in lams]
    assert np.all(np.diff(var) < 0)


def test_surrogate_risk_equals_exact_for_g_equals_k():
    X, K, f, m = _instance()
    assert surrogate_risk(K, m.lam, f, 0.3).total == pytest.approx(
        exact_risk(K, m.lam, f, 0.3).total, rel=1e-10)


def test_ridge_smoother_complex_hermitian():
    X, K, f, m = _instance()
    G = surrogate_gram(classical_feature_map(X, m, 5, 1))
    A = ridge_smoother(G, m.lam)
    np.testing.assert_allclose(A, G @ np.linalg.inv(G + m.lam * np.eye(25)), atol=1e-10)
    assert numerical_rank(G) == 5
    assert numerical_rank(np.zeros((3, 3))) == 0


@pytest.mark.parametrize("kind", ["exact", "mrf", "crf"])
def test_risk_inflation_holds(kind):
    X, K, f, m = _instance(n=40, sigma=0.3, lam=0.05)
    if kind == "exact":
        G = K
    elif kind == "mrf":
        G = surrogate_gram(feature_map_from_proposal(X, m, uniform_box_proposal(m, 4.0), 3000, 1))
    else:
        G = surrogate_gram(classical_feature_map(X, m, 3000, 1))
    rep = risk_inflation_check(K, G, m.lam, f, 0.5)
    assert rep.delta < 1 and rep.holds and rep.lhs <= rep.rhs
    if kind == "exact":
        assert rep.delta == pytest.approx(0, abs=1e-10)
        assert rep.rhs == pytest.approx(rep.risk_bound, rel=1e-8)


def test_risk_inflation_regime_error():
    X, K, f, m = _instance(n=40)
    G = surrogate_gram(classical_feature_map(X, m, 2, 1))
    with pytest.raises(RegimeError):
        risk_inflation_check(K, G, m.lam, f, 0.5, delta=1.0)
