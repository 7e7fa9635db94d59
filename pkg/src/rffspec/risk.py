"""Fixed-design risk of linear smoothers and the surrogate-risk inflation bound.

All risks are exact expectations over Gaussian noise of standard
deviation ``sigma_nu``, evaluated in closed form.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidArgumentError, RegimeError
from .solvers import spectral_delta


@dataclass(frozen=True)
class RiskReport:
    bias: float
    variance: float
    total: float
    sigma_nu: float


def _vec(f, n):
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != n:
        raise InvalidArgumentError(f"f has length {f.shape[0]}, expected {n}")
    return f


def _check(lam, sigma_nu):
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    if not sigma_nu >= 0:
        raise InvalidArgumentError(f"sigma_nu must be non-negative, got {sigma_nu}")


def exact_risk(K, lam, f, sigma_nu):
    """Risk of exact KRR from the eigendecomposition of ``K``.

    ``bias = lam^2 f^T (K + lam I)^{-2} f / n``,
    ``variance = sigma_nu^2 tr(K^2 (K + lam I)^{-2}) / n``.
    """
    _check(lam, sigma_nu)
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    f = _vec(f, n)
    ev, U = linalg.eigh(K)
    ev = np.clip(ev, 0.0, None)
    c = U.T @ f
    bias = float(np.sum((lam / (ev + lam)) ** 2 * c * c)) / n
    var = sigma_nu ** 2 * float(np.sum((ev / (ev + lam)) ** 2)) / n
    return RiskReport(bias, var, bias + var, float(sigma_nu))


def smoother_risk(A, f, sigma_nu):
    """Risk of ``f_hat = A (f + nu)``.

    ``bias = |(A - I) f|^2 / n`` and ``variance = sigma_nu^2 tr(A A^*) / n``;
    complex smoothers are allowed (the Frobenius norm covers both cases).
    """
    if not sigma_nu >= 0:
        raise InvalidArgumentError(f"sigma_nu must be non-negative, got {sigma_nu}")
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise InvalidArgumentError("smoother must be square")
    f = _vec(f, n)
    resid = A @ f - f
    bias = float(np.real(np.vdot(resid, resid))) / n
    var = sigma_nu ** 2 * float(np.sum(np.abs(A) ** 2)) / n
    return RiskReport(bias, var, bias + var, float(sigma_nu))


def ridge_smoother(G, lam):
    """``G (G + lam I)^{-1}`` for a Hermitian PSD ``G``, via its eigendecomposition."""
    ev, U = linalg.eigh(np.asarray(G))
    ev = np.clip(ev, 0.0, None)
    return (U * (ev / (ev + lam))) @ U.conj().T


def surrogate_risk(G, lam, f, sigma_nu):
    """Risk of KRR run with the surrogate Gram ``G`` (in-sample)."""
    _check(lam, sigma_nu)
    return smoother_risk(ridge_smoother(G, lam), f, sigma_nu)


def risk_upper_bound(K, lam, f, sigma_nu):
    """``(lam f^T (K + lam I)^{-1} f + sigma_nu^2 s_lam(K)) / n``."""
    _check(lam, sigma_nu)
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    f = _vec(f, n)
    ev, U = linalg.eigh(K)
    ev = np.clip(ev, 0.0, None)
    c = U.T @ f
    fit = lam * float(np.sum(c * c / (ev + lam)))
    s_lam = float(np.sum(ev / (ev + lam)))
    return (fit + sigma_nu ** 2 * s_lam) / n


def numerical_rank(G, rtol=1e-8):
    ev = np.abs(linalg.eigvalsh(np.asarray(G)))
    top = ev.max(initial=0.0)
    return int(np.count_nonzero(ev > rtol * top)) if top > 0 else 0


@dataclass(frozen=True)
class RiskInflationReport:
    lhs: float
    rhs: float
    delta: float
    rank: int
    risk_bound: float
    holds: bool


def risk_inflation_check(K, G, lam, f, sigma_nu, delta=None):
    """Check ``R(f~) <= R_hat_K / (1 - delta) + delta/(1 + delta) rank(G)/n sigma_nu^2``.

    ``delta`` defaults to the value from :func:`spectral_delta`.

    Raises
    ------
    RegimeError
        If ``delta >= 1`` (the bound is vacuous).
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    assert np.linalg.norm(K, 2) >= 1.0 - 1e-12, "kernel matrix must have spectral norm >= 1"
    if delta is None:
        delta = spectral_delta(K, G, lam).delta
    if delta >= 1:
        raise RegimeError(f"delta = {delta:.4g} >= 1; the bound is vacuous")
    rank = numerical_rank(G)
    lhs = surrogate_risk(G, lam, f, sigma_nu).total
    bound = risk_upper_bound(K, lam, f, sigma_nu)
    rhs = bound / (1.0 - delta) + delta / (1.0 + delta) * rank / n * sigma_nu ** 2
    return RiskInflationReport(lhs, rhs, float(delta), rank, bound, bool(lhs <= rhs))
