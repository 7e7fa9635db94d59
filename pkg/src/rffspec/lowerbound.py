"""Grid datasets and the adversarial coefficient vector behind the sampling lower bound.

Classical features rarely land at high frequencies, so for a vector
``alpha`` concentrated at a high frequency ``eta*`` the surrogate
quadratic form ``alpha^T (Z Z^* + lam I) alpha`` can overshoot the exact
one. :func:`verify_violation` tests for that failure of spectral
approximation.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import InvalidArgumentError, NumericalError, RegimeError
from .kernelspace import Dataset, KernelModel, as_frequencies, as_points


@dataclass(frozen=True)
class GridSpec:
    m: int
    d: int = 1
    R: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3 or self.m % 2 == 0:
            raise InvalidArgumentError(f"m must be an odd integer >= 3, got {self.m}")
        if int(self.d) != self.d or self.d < 1:
            raise InvalidArgumentError(f"d must be a positive integer, got {self.d}")
        if not self.R > 0:
            raise InvalidArgumentError(f"R must be positive, got {self.R}")

    @property
    def n(self):
        return self.m ** self.d


def grid_coordinates(spec: GridSpec):
    """``(j - (m + 1)/2) 2R/m`` for ``j = 1..m``."""
    j = np.arange(1, spec.m + 1)
    return (j - (spec.m + 1) / 2.0) * (2.0 * spec.R / spec.m)


def grid_dataset(spec: GridSpec, embed_dim=None):
    """The ``m^d`` product grid; ``embed_dim`` pads with zero coordinates."""
    c = grid_coordinates(spec)
    X = np.array(list(itertools.product(c, repeat=spec.d)), dtype=float)
    if embed_dim is not None:
        if embed_dim < spec.d:
            raise InvalidArgumentError("embed_dim must be at least d")
        X = np.hstack([X, np.zeros((X.shape[0], embed_dim - spec.d))])
    return Dataset(X)


def blurred_cos(a, Delta, b, v):
    """``2 cos(2 pi Delta^T a)`` times the Gaussian(``b``) mass of the box ``a + [-v/2, v/2]^d``.

    Accepts a single point or an ``(n, d)`` array of points.
    """
    if not (b > 0 and v > 0):
        raise InvalidArgumentError("b and v must be positive")
    a_arr = np.asarray(a, dtype=float)
    single = a_arr.ndim <= 1
    A = a_arr.reshape(1, -1) if single else as_points(a_arr)
    Delta = np.asarray(Delta, dtype=float).reshape(-1)
    if Delta.shape[0] != A.shape[1]:
        raise InvalidArgumentError("Delta and a have different dimensions")
    s = b * math.sqrt(2.0)
    mass = 0.5 * (erf((A + v / 2.0) / s) - erf((A - v / 2.0) / s))
    out = 2.0 * np.cos(2.0 * np.pi * (A @ Delta)) * np.prod(mass, axis=1)
    return float(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class AdversarialAlpha:
    alpha: np.ndarray
    eta_star: np.ndarray
    b: float
    v: float


def adversarial_alpha(spec: GridSpec, eta_star, model: KernelModel, X=None):
    """``alpha_j = f_{eta*, b, R}(x_j)`` with ``b = R / (8 sqrt(log n_lambda))``."""
    if model.n_lambda <= 1:
        raise RegimeError(f"n_lambda = {model.n_lambda:.4g} must exceed 1")
    X = grid_dataset(spec).X if X is None else as_points(X)
    eta_star = as_frequencies(eta_star, spec.d)[0]
    b = spec.R / (8.0 * math.sqrt(math.log(model.n_lambda)))
    v = spec.R
    alpha = blurred_cos(X[:, :spec.d], eta_star, b, v)
    return AdversarialAlpha(np.atleast_1d(alpha), eta_star, b, v)


def eta_star_select(frequencies):
    """Sampled frequency of largest Euclidean norm (first one on ties)."""
    F = np.asarray(frequencies, dtype=float)
    if F.size == 0:
        raise InvalidArgumentError("no frequencies to select from")
    F = F.reshape(F.shape[0], -1) if F.ndim > 1 else F[:, None]
    return F[int(np.argmax(np.sum(F * F, axis=1)))].copy()


@dataclass(frozen=True)
class ViolationReport:
    exact_form: float
    surrogate_form: float
    ratio: float
    violated: bool


def verify_violation(K, G, lam, alpha):
    """Whether ``alpha^*(K + lam I)alpha < 2/3 alpha^*(G + lam I)alpha``."""
    alpha = np.asarray(alpha).reshape(-1)
    a2 = float(np.real(np.vdot(alpha, alpha)))
    qk = np.vdot(alpha, np.asarray(K) @ alpha)
    qg = np.vdot(alpha, np.asarray(G) @ alpha)
    for q in (qk, qg):
        if abs(q.imag) > 1e-10 * (abs(q) + lam * a2) + 1e-300:
            raise NumericalError(f"quadratic form has imaginary residue {q.imag:.3e}")
    exact = float(qk.real) + lam * a2
    surr = float(qg.real) + lam * a2
    ratio = exact / surr if surr > 0 else math.nan
    return ViolationReport(exact, surr, ratio, bool(exact < (2.0 / 3.0) * surr))


def in_lower_bound_regime(spec: GridSpec, model: KernelModel, s=None):
    """Whether the grid, ridge and sample count meet the lower bound's preconditions.

    The radius is measured in unit-variance units. ``s`` is checked
    against ``n_lambda / (13 * 2^(2d + 4))`` when given.
    """
    n, d, m, lam = spec.n, spec.d, spec.m, model.lam
    nl = n / lam
    if n < 17 or nl <= 1:
        return False
    L = math.log(nl)
    R_std = spec.R / model.scale
    loglog = math.log(math.log(n))
    checks = [
        m >= max(64.0 * L, 3),
        loglog > 0 and d <= 2.0 * math.log(n) / (5.0 * loglog),
        10.0 / n <= lam <= min(0.5 ** (2 * d) * n / 1024.0, n ** (1.0 - 1.0 / 128.0)),
        2000.0 * L <= R_std <= m / (800.0 * math.sqrt(L)),
    ]
    if s is not None:
        checks.append(s <= nl / (13.0 * 2 ** (2 * d + 4)))
    return all(checks)
