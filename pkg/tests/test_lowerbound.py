import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from rffspec.errors import InvalidArgumentError, NumericalError, RegimeError
from rffspec.features import classical_feature_map, surrogate_gram
from rffspec.kernelspace import KernelModel, fourier_density, kernel_matrix, z_vector
from rffspec.lowerbound import (
    GridSpec,
    adversarial_alpha,
    blurred_cos,
    eta_star_select,
    grid_coordinates,
    grid_dataset,
    in_lower_bound_regime,
    verify_violation,
)

from conftest import STD_SIGMA


def test_grid_examples():
    np.testing.assert_allclose(grid_coordinates(GridSpec(3, 1, 1.5)), [-1.0, 0.0, 1.0])
    X = grid_dataset(GridSpec(3, 2, 1.5)).X
    assert X.shape == (9, 2)
    assert {tuple(r) for r in X} == {(a, b) for a in (-1.0, 0.0, 1.0) for b in (-1.0, 0.0, 1.0)}
    X = grid_dataset(GridSpec(5), embed_dim=3).X
    assert X.shape == (5, 3) and np.all(X[:, 1:] == 0)
    with pytest.raises(InvalidArgumentError):
        GridSpec(4)
    with pytest.raises(InvalidArgumentError):
        grid_dataset(GridSpec(5, 2), embed_dim=1)


@given(st.integers(1, 40).map(lambda k: 2 * k + 1), st.floats(0.1, 100.0))
def test_grid_properties(m, R):
    c = grid_coordinates(GridSpec(m, 1, R))
    assert np.all(np.abs(c) < R)
    np.testing.assert_allclose(c, -c[::-1], atol=1e-12 * R)
    np.testing.assert_allclose(np.diff(c), 2 * R / m, rtol=1e-10)


def test_blurred_cos_examples():
    # large v: the box covers the Gaussian
    assert blurred_cos(0.0, 0.0, 1.0, 1e3) == pytest.approx(2.0)
    assert blurred_cos([0.0, 0.0], [0.25, 0.0], 0.1, 50.0) == pytest.approx(2.0)
    # a = 1/4, Delta = 1: cos(pi/2) = 0
    assert blurred_cos(0.25, 1.0, 0.1, 2.0) == pytest.approx(0.0, abs=1e-15)
    a, b, v = 0.3, 0.2, 0.5
    mass, _ = integrate.quad(lambda t: math.exp(-t * t / (2 * b * b)) / (b * math.sqrt(2 * math.pi)),
                             a - v / 2, a + v / 2)
    assert blurred_cos(a, 0.7, b, v) == pytest.approx(2 * math.cos(2 * math.pi * 0.7 * a) * mass,
                                                      rel=1e-12)
    with pytest.raises(InvalidArgumentError):
        blurred_cos(0.0, 0.0, 0.0, 1.0)


def _lb_setup(m=401, R=10.0):
    spec = GridSpec(m, 1, R)
    X = grid_dataset(spec).X
    model = KernelModel.for_data(X, STD_SIGMA, 1.0)
    return spec, X, model


@given(st.floats(-20.0, 20.0))
def test_adversarial_alpha_norm(eta):
    spec, X, model = _lb_setup(m=101)
    a = adversarial_alpha(spec, eta, model)
    assert np.sum(a.alpha ** 2) <= 4 * spec.n
    assert a.b == pytest.approx(spec.R / (8 * math.sqrt(math.log(model.n_lambda))))
    assert a.v == spec.R


def test_adversarial_alpha_symmetry_and_guard():
    spec, X, model = _lb_setup(m=51)
    a = adversarial_alpha(spec, 0.0, model).alpha
    np.testing.assert_allclose(a, a[::-1], rtol=1e-12)
    assert np.all(a >= 0)
    with pytest.raises(RegimeError):
        adversarial_alpha(spec, 0.0, KernelModel(STD_SIGMA, 1e3, 51))


def test_eta_star_select():
    assert eta_star_select([0.1, -3.0, 2.0])[0] == -3.0
    assert eta_star_select([[1.0, 1.0], [0.0, 1.2]]).tolist() == [1.0, 1.0]
    assert eta_star_select([[2.0], [-2.0]])[0] == 2.0
    with pytest.raises(InvalidArgumentError):
        eta_star_select([])


def test_verify_violation_examples():
    K, lam = np.eye(3), 1.0
    a = np.ones(3)
    rep = verify_violation(K, K, lam, a)
    assert not rep.violated and rep.ratio == pytest.approx(1.0)
    rep = verify_violation(np.zeros((3, 3)), 4 * np.eye(3), lam, a)
    assert rep.violated and rep.ratio == pytest.approx(0.2)
    G = np.eye(3, dtype=complex)
    G[0, 1] = 1j
    with pytest.raises(NumericalError):
        verify_violation(K, G, lam, a)


def test_quadratic_form_identity():
    """alpha^T K alpha equals the integral of |sum_j alpha_j z_j(eta)|^2 p(eta)."""
    X = np.linspace(-1, 1, 5)[:, None]
    alpha = np.array([1.0, -0.5, 2.0, 0.3, -1.0])
    sigma = 0.4
    K = kernel_matrix(X, sigma)

    def integrand(eta):
        return abs(z_vector(X, eta) @ alpha) ** 2 * fourier_density(eta, sigma)

    val, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-12, limit=200)
    assert val == pytest.approx(alpha @ K @ alpha, rel=1e-8)


def test_adversarial_beats_random():
    spec, X, model = _lb_setup()
    K = kernel_matrix(X, model.sigma)
    rng = np.random.default_rng(0)
    for seed in range(3):
        fm = classical_feature_map(X, model, 10, seed)
        G = surrogate_gram(fm)
        a = adversarial_alpha(spec, eta_star_select(fm.frequencies), model, X).alpha
        adv = verify_violation(K, G, 1.0, a)
        rand = [verify_violation(K, G, 1.0, rng.standard_normal(spec.n)).ratio for _ in range(20)]
        assert adv.violated
        assert adv.ratio < min(rand)
        assert not verify_violation(K, K, 1.0, a).violated


def test_regime_check():
    spec, X, model = _lb_setup()
    assert not in_lower_bound_regime(spec, model, 10)
    assert not in_lower_bound_regime(GridSpec(5), KernelModel(STD_SIGMA, 10.0, 5))
