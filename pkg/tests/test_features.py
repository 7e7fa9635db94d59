import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffspec.errors import DegenerateProposalError, InvalidArgumentError, SupportWarning
from rffspec.features import (
    CLASSICAL,
    build_feature_map,
    classical_feature_map,
    concatenate,
    feature_map_from_proposal,
    load_feature_map,
    recommended_sample_size,
    sample_classical,
    sample_size_bound,
    sample_uniform_box,
    save_feature_map,
    surrogate_gram,
    uniform_box_proposal,
)
from rffspec.kernelspace import KernelModel, fourier_density, kernel_eval, kernel_matrix, z_vector

from conftest import STD_SIGMA


def _model(n=5, d=1, sigma=STD_SIGMA, lam=0.1):
    return KernelModel(sigma, lam, n, d)


def test_sample_classical_contract():
    m = _model()
    with pytest.raises(InvalidArgumentError):
        sample_classical(m, 0, seed=1)
    np.testing.assert_array_equal(sample_classical(m, 10, 3), sample_classical(m, 10, 3))
    eta = sample_classical(m, 100_000, 7)[:, 0]
    assert abs(eta.mean()) < 0.02
    assert abs(eta.var() - 1.0) < 0.02


def test_sample_uniform_box_contract():
    m = _model(sigma=1.0)
    s = 50_000
    eta = sample_uniform_box(m, 4.0, s, 2)
    a = 4.0 / (2 * math.pi)
    assert np.all(np.abs(eta) <= a)
    # uniform on [-a, a]: standard error of the mean is 2a/sqrt(12 s)
    assert abs(eta.mean()) < 3 * 2 * a / math.sqrt(12 * s)
    np.testing.assert_array_equal(eta, sample_uniform_box(m, 4.0, s, 2))


def test_build_feature_map_classical_weights_and_bits():
    X = np.linspace(-1, 1, 5)[:, None]
    m = _model()
    F = sample_classical(m, 7, 0)
    fm_c = build_feature_map(X, m, F, None, CLASSICAL)
    fm_q = build_feature_map(X, m, F, lambda e: fourier_density(e, m.sigma))
    np.testing.assert_array_equal(fm_c.weights, np.ones(7))
    np.testing.assert_allclose(fm_q.weights, 1.0, rtol=1e-15)
    # Z_jl = w_l / sqrt(s) * exp(-2 pi i x_j eta_l), bit-consistent with construction
    expected = np.exp(-2j * np.pi * (X @ F.T)) * (fm_c.weights / math.sqrt(7))
    np.testing.assert_array_equal(fm_c.Z, expected)
    for l in range(7):
        np.testing.assert_allclose(fm_q.Z[:, l], z_vector(X, F[l]) * fm_q.weights[l] / math.sqrt(7),
                                   rtol=1e-14)


def test_build_feature_map_no_phase_at_origin():
    m = _model(n=1)
    prop = uniform_box_proposal(m, 4.0)
    fm = feature_map_from_proposal([[0.0]], m, prop, 6, 1)
    np.testing.assert_allclose(fm.Z[0], fm.weights / math.sqrt(6), rtol=1e-15)


def test_single_frequency_gram():
    X = np.linspace(-2, 2, 4)[:, None]
    m = _model(n=4)
    fm = build_feature_map(X, m, [[0.37]], None, CLASSICAL)
    G = surrogate_gram(fm)
    z = z_vector(X, [0.37])
    np.testing.assert_allclose(G, np.outer(z, z.conj()), rtol=1e-14)
    np.testing.assert_allclose(np.abs(G), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.diag(G).real, 1.0, rtol=1e-15)


def test_degenerate_proposal_rejected():
    m = _model()
    with pytest.raises(DegenerateProposalError):
        build_feature_map(np.zeros((5, 1)), m, [[0.0], [9.0]], lambda e: np.where(np.abs(e[:, 0]) < 1, 1.0, 0.0))
    with pytest.raises(DegenerateProposalError):
        build_feature_map(np.zeros((5, 1)), m, [[0.0]], lambda e: -np.ones(len(e)))


def test_uniform_box_attaches_support_warning():
    m = _model()
    with pytest.warns(SupportWarning):
        fm = feature_map_from_proposal(np.zeros((5, 1)), m, uniform_box_proposal(m), 3, 0)
    assert fm.warnings


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 1000))
def test_gram_identity_and_hermitian(n, s, seed):
    X = np.linspace(-1, 1, n)[:, None]
    m = _model(n=n)
    prop = uniform_box_proposal(m, 3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fm = feature_map_from_proposal(X, m, prop, s, seed)
    G = surrogate_gram(fm)
    p = fourier_density(fm.frequencies, m.sigma)
    q = prop.density(fm.frequencies)
    ref = sum((p[l] / q[l]) * np.outer(z_vector(X, fm.frequencies[l]), z_vector(X, fm.frequencies[l]).conj())
              for l in range(s)) / s
    np.testing.assert_allclose(G, ref, atol=1e-12)
    np.testing.assert_array_equal(G, G.conj().T)
    assert np.linalg.eigvalsh(G)[0] >= -1e-10 * n


def test_concatenation_averages_grams():
    X = np.linspace(-1, 1, 6)[:, None]
    m = _model(n=6)
    a = classical_feature_map(X, m, 5, 1)
    b = classical_feature_map(X, m, 5, 2)
    c = concatenate(a, b)
    assert c.s == 10
    np.testing.assert_allclose(surrogate_gram(c), 0.5 * (surrogate_gram(a) + surrogate_gram(b)),
                               atol=1e-14)


def test_monte_carlo_unbiasedness_single_pair():
    # 1e5 single-feature draws of phi(x)^* phi(z) against k(x, z), within 3 standard errors
    m = _model()
    x, z = 0.3, -0.2
    for prop_name in ("classical", "box"):
        if prop_name == "classical":
            eta = sample_classical(m, 100_000, 11)[:, 0]
            w2 = np.ones_like(eta)
        else:
            eta = sample_uniform_box(m, 6.0, 100_000, 11)[:, 0]
            w2 = fourier_density(eta[:, None], m.sigma) * (2 * 6.0 * m.spectral_std)
        vals = (w2 * np.exp(-2j * np.pi * eta * (x - z))).real
        err = abs(vals.mean() - kernel_eval([x], [z], m.sigma))
        assert err < 3 * vals.std() / math.sqrt(len(vals))


def test_recommended_sample_size():
    assert recommended_sample_size(0.5, 1.0, 1.0, 1.0) == 30
    assert sample_size_bound(0.5, 0.1, 20.0, 5.0) == pytest.approx(2 * sample_size_bound(0.5, 0.1, 10.0, 5.0))
    n_lam, s_lam = 400.0, 50.0
    assert recommended_sample_size(0.5, 0.1, n_lam, s_lam) == math.ceil(
        8 / 3 * 4 * n_lam * math.log(16 * s_lam / 0.1))
    for bad in (0.0, 0.6):
        with pytest.raises(InvalidArgumentError):
            recommended_sample_size(bad, 0.1, 2.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        recommended_sample_size(0.5, 0.1, 1.0, 2.0)


def test_feature_map_roundtrip(tmp_path):
    X = np.linspace(-1, 1, 4).reshape(2, 2)
    m = _model(n=2, d=2)
    fm = feature_map_from_proposal(X, m, uniform_box_proposal(m), 5, 9)
    path = tmp_path / "fm.txt"
    save_feature_map(fm, path)
    back = load_feature_map(path, X)
    np.testing.assert_array_equal(back.frequencies, fm.frequencies)
    np.testing.assert_array_equal(back.weights, fm.weights)
    np.testing.assert_array_equal(back.Z, fm.Z)
    assert back.proposal_id == fm.proposal_id and back.seed == 9


def test_expected_gram_converges_to_kernel():
    X = np.linspace(-1, 1, 10)[:, None]
    m = _model(n=10)
    K = kernel_matrix(X, m.sigma)
    F = sample_classical(m, 4000, 5)
    Zall = np.exp(-2j * np.pi * (X @ F.T))
    mean_G = (Zall @ Zall.conj().T) / 4000
    assert np.linalg.norm(mean_G - K) / np.linalg.norm(K) < 0.05
