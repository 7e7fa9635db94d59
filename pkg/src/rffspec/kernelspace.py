"""Gaussian kernel, its spectral density and the frequency-to-data map.

Frequencies follow the ``exp(-2*pi*i*eta^T x)`` convention, so the spectral
density of ``exp(-|x - z|^2 / (2 sigma^2))`` is a centred Gaussian with
per-coordinate standard deviation ``1 / (2*pi*sigma)``.
"""

import abc
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidArgumentError

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelModel:
    """Bandwidth, ridge and problem size for one KRR instance."""

    sigma: float
    lam: float
    n: int
    d: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidArgumentError(f"lambda must be positive, got {self.lam}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n}")
        if int(self.d) != self.d or self.d < 1:
            raise InvalidArgumentError(f"d must be a positive integer, got {self.d}")

    @property
    def n_lambda(self):
        return self.n / self.lam

    @property
    def spectral_std(self):
        """Per-coordinate standard deviation of the spectral density."""
        return 1.0 / (2.0 * math.pi * self.sigma)

    @property
    def scale(self):
        """Factor mapping frequencies to unit-variance frequencies (``2*pi*sigma``)."""
        return 2.0 * math.pi * self.sigma

    @classmethod
    def for_data(cls, X, sigma, lam):
        X = as_points(X)
        return cls(sigma=float(sigma), lam=float(lam), n=X.shape[0], d=X.shape[1])


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: Optional[np.ndarray] = None
    f_star: Optional[np.ndarray] = None

    def __post_init__(self):
        X = as_points(self.X)
        object.__setattr__(self, "X", X)
        for name in ("y", "f_star"):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.asarray(value, dtype=float).reshape(-1)
            if value.shape[0] != X.shape[0]:
                raise InvalidArgumentError(
                    f"{name} has length {value.shape[0]} but X has {X.shape[0]} rows"
                )
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def as_points(X):
    """Coerce ``X`` to a finite ``(n, d)`` float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidArgumentError(f"expected an (n, d) array of points, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("points must be finite")
    return X


def as_frequencies(eta, d=None):
    """Coerce frequencies to an ``(m, d)`` array.

    A bare vector is one frequency when ``d != 1`` and a list of scalar
    frequencies when ``d == 1``.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        eta = eta.reshape(1, 1)
    elif eta.ndim == 1:
        eta = eta[:, None] if d == 1 else eta[None, :]
    if d is not None and eta.shape[1] != d:
        raise InvalidArgumentError(f"frequencies have dimension {eta.shape[1]}, expected {d}")
    return eta


class ShiftInvariantKernel(abc.ABC):
    """A normalized shift-invariant kernel described by evaluation and density."""

    @abc.abstractmethod
    def __call__(self, x, z):
        """Kernel value between two points."""

    @abc.abstractmethod
    def density(self, eta):
        """Spectral density at each row of ``eta``."""

    @abc.abstractmethod
    def sample(self, s, d, rng):
        """Draw ``s`` frequencies in ``R^d`` from the spectral density."""


class GaussianKernel(ShiftInvariantKernel):
    def __init__(self, sigma):
        if not (np.isfinite(sigma) and sigma > 0):
            raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
        self.sigma = float(sigma)

    def __call__(self, x, z):
        return kernel_eval(x, z, self.sigma)

    def density(self, eta):
        return fourier_density(eta, self.sigma)

    def sample(self, s, d, rng):
        return rng.normal(0.0, 1.0 / (2.0 * math.pi * self.sigma), size=(s, d))

    def matrix(self, X, Y=None):
        return kernel_matrix(X, self.sigma, Y)


def kernel_eval(x, z, sigma):
    """Gaussian kernel ``exp(-|x - z|^2 / (2 sigma^2))`` between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z)) and np.isfinite(sigma)):
        raise InvalidArgumentError("kernel_eval requires finite inputs")
    if sigma <= 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    if x.shape != z.shape:
        raise InvalidArgumentError(f"shape mismatch {x.shape} vs {z.shape}")
    diff = x - z
    return float(math.exp(-float(diff @ diff) / (2.0 * sigma * sigma)))


def kernel_matrix(X, sigma, Y=None):
    """Gram matrix ``K_ij = k(x_i, y_j)``; ``Y`` defaults to ``X``.

    The square case is symmetrized and its diagonal set to exactly one.
    """
    X = as_points(X)
    if sigma <= 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    if Y is None:
        sq = cdist(X, X, "sqeuclidean")
        K = np.exp(-sq / (2.0 * sigma * sigma))
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
        return K
    Y = as_points(Y)
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma * sigma))


def check_kernel_matrix(K, tol_eig=None):
    """Raise ``AssertionError`` unless ``K`` is symmetric, unit-diagonal and PSD."""
    K = np.asarray(K)
    n = K.shape[0]
    if tol_eig is None:
        tol_eig = 1e-10 * n
    assert K.shape == (n, n), "kernel matrix must be square"
    assert np.array_equal(K, K.T), "kernel matrix must be symmetric"
    assert np.all(np.diag(K) == 1.0), "kernel matrix must have unit diagonal"
    lo = np.linalg.eigvalsh(K)[0]
    assert lo >= -tol_eig, f"kernel matrix has eigenvalue {lo} < -{tol_eig}"


def fourier_density(eta, sigma):
    """Spectral density of the Gaussian kernel.

    A 1-d array is treated as a single frequency; a 2-d array as one
    frequency per row, giving one density value per row.
    """
    if sigma <= 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    eta = np.asarray(eta, dtype=float)
    single = eta.ndim <= 1
    eta2 = np.atleast_2d(eta)
    d = eta2.shape[1]
    std = 1.0 / (2.0 * math.pi * sigma)
    sq = np.sum(eta2 * eta2, axis=1) / (std * std)
    out = np.exp(-0.5 * sq) / (SQRT_2PI * std) ** d
    return float(out[0]) if single else out


def z_vector(X, eta):
    """Complex vector ``z(eta)_j = exp(-2*pi*i*x_j^T eta)``."""
    X = as_points(X)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.shape[0] != X.shape[1]:
        raise InvalidArgumentError(f"eta has dimension {eta.shape[0]}, X has {X.shape[1]}")
    return np.exp(-2j * np.pi * (X @ eta))


def z_matrix(X, frequencies):
    """Columns are ``z(eta_l)`` for each row ``eta_l`` of ``frequencies``."""
    X = as_points(X)
    F = as_frequencies(frequencies, X.shape[1])
    return np.exp(-2j * np.pi * (X @ F.T))


def bochner_quadrature(diff, sigma, nodes=20001):
    """Recover ``k`` at a 1-d offset by integrating the spectral density.

    Trapezoid rule on ``[-T, T]`` with ``T = 12 / (2*pi*sigma)``.
    """
    T = 12.0 / (2.0 * math.pi * sigma)
    eta = np.linspace(-T, T, nodes)
    integrand = fourier_density(eta[:, None], sigma) * np.exp(-2j * np.pi * eta * diff)
    return complex(np.trapezoid(integrand, eta))
