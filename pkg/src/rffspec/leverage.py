"""Ridge leverage function of the Gaussian kernel and bounds on it.

``tau(eta) = p(eta) z(eta)^* (K + lam I)^{-1} z(eta)`` measures how much the
frequency ``eta`` matters for approximating ``K + lam I``. This module
evaluates it exactly, integrates it, bounds it from above by the capped
envelope used by the improved sampler, and certifies it from both sides
through the primal (softened spike) and dual (coefficient vector)
characterizations.

All envelope and certificate constants are stated for unit-variance
frequencies (``sigma = 1/(2*pi)``); for other bandwidths the data are
rescaled by ``1/(2*pi*sigma)`` and densities pick up the Jacobian.
``log`` is the natural logarithm throughout.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.special import erf, erfc, gamma as gamma_fn, log_ndtr

from .errors import (
    InvalidArgumentError,
    NumericalError,
    RegimeWarning,
    UnsupportedDimensionError,
)
from .kernelspace import (
    KernelModel,
    as_frequencies,
    as_points,
    fourier_density,
    kernel_matrix,
    z_matrix,
)

# Integral of g1(t) = phi(t) * max(1, |t|) over the real line.
G1_MASS = float(erf(1.0 / math.sqrt(2.0)) + math.sqrt(2.0 / (math.e * math.pi)))
CAP_CONSTANT = 12.4
CAP_LOG_CONSTANT = 2000.0
THRESHOLD_CONSTANT = 10.0


def _cho(M):
    try:
        return linalg.cho_factor(M, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(
            f"Cholesky factorization failed: {exc}", condition=float(np.linalg.cond(M))
        ) from exc


def _real_part(values, what):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        re, im = values.real, values.imag
        if np.any(np.abs(im) > 1e-10 * np.maximum(np.abs(re), 1e-300) + 1e-300):
            worst = float(np.max(np.abs(im)))
            raise NumericalError(f"{what} has imaginary residue {worst:.3e}")
        return re
    return values


class RidgeLeverage:
    """Exact leverage function for a fixed dataset.

    ``K + lam I`` is factored once; every evaluation is a pair of
    triangular solves, never an explicit inverse.
    """

    def __init__(self, X, model: KernelModel):
        self.X = as_points(X)
        if self.X.shape != (model.n, model.d):
            raise InvalidArgumentError(
                f"X has shape {self.X.shape}, model expects ({model.n}, {model.d})"
            )
        self.model = model
        self.K = kernel_matrix(self.X, model.sigma)
        self.factor = _cho(self.K + model.lam * np.eye(model.n))

    def solve(self, rhs):
        return linalg.cho_solve(self.factor, rhs, check_finite=False)

    def __call__(self, eta, chunk=2048):
        """Leverage at each row of ``eta``; a bare 1-d frequency gives a float."""
        eta_arr = np.asarray(eta, dtype=float)
        single = eta_arr.ndim == 0 or (eta_arr.ndim == 1 and self.model.d > 1)
        F = as_frequencies(eta_arr, self.model.d)
        out = np.empty(F.shape[0])
        for start in range(0, F.shape[0], chunk):
            block = F[start:start + chunk]
            Zb = z_matrix(self.X, block)
            quad = np.einsum("ij,ij->j", Zb.conj(), self.solve(Zb))
            out[start:start + chunk] = fourier_density(block, self.model.sigma) * _real_part(
                quad, "leverage quadratic form"
            )
        return float(out[0]) if single else out

    def optimal_alpha(self, eta):
        """Maximizer of the dual ratio: ``sqrt(p) (K + lam I)^{-1} z(eta)``."""
        F = as_frequencies(eta, self.model.d)[:1]
        z = z_matrix(self.X, F)[:, 0]
        return math.sqrt(fourier_density(F, self.model.sigma)[0]) * self.solve(z)

    def primal_terms_at_optimum(self, eta):
        """Both terms of the primal objective at its minimizer ``y*``.

        ``y*(xi) = sqrt(p(eta)) z(xi)^* (K + lam I)^{-1} z(eta)``, for which
        ``Phi y* = sqrt(p) K (K + lam I)^{-1} z`` and
        ``|y*|^2 = p z^* (K + lam I)^{-1} K (K + lam I)^{-1} z``.
        Returns ``(residual_term, norm_term)``.
        """
        F = as_frequencies(eta, self.model.d)[:1]
        p = fourier_density(F, self.model.sigma)[0]
        z = z_matrix(self.X, F)[:, 0]
        c = self.solve(z)
        resid = p * np.sum(np.abs(self.K @ c - z) ** 2) / self.model.lam
        norm = p * _real_part(np.vdot(c, self.K @ c), "primal norm")
        return float(resid), float(norm)


def leverage_exact(X, model: KernelModel, eta):
    """``p(eta) z(eta)^* (K + lam I)^{-1} z(eta)`` for one or many frequencies."""
    return RidgeLeverage(X, model)(eta)


def statistical_dimension(K, lam):
    """``tr((K + lam I)^{-1} K)`` from the eigenvalues of ``K``."""
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    ev = np.clip(np.linalg.eigvalsh(np.asarray(K)), 0.0, None)
    return float(np.sum(ev / (ev + lam)))


def sandwich_bounds(model: KernelModel, eta):
    """Lower and upper bounds ``p n/(n + lam)`` and ``p n/lam``."""
    p = fourier_density(as_frequencies(eta, model.d), model.sigma)
    return p * model.n / (model.n + model.lam), p * model.n / model.lam


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    nodes: int


def leverage_integral(X, model: KernelModel, nodes=2001, half_width=None):
    """Trapezoid-rule integral of the leverage function over ``[-T, T]^d``.

    ``T`` defaults to 12 standard deviations of the spectral density. The
    error estimate compares against the same rule on every other node.
    """
    if model.d not in (1, 2):
        raise UnsupportedDimensionError(f"leverage_integral supports d in {{1, 2}}, got {model.d}")
    if nodes < 5 or nodes % 2 == 0:
        raise InvalidArgumentError("nodes must be odd and at least 5")
    T = 12.0 * model.spectral_std if half_width is None else float(half_width)
    grid = np.linspace(-T, T, nodes)
    lev = RidgeLeverage(X, model)
    if model.d == 1:
        vals = lev(grid[:, None])
        fine = np.trapezoid(vals, grid)
        coarse = np.trapezoid(vals[::2], grid[::2])
    else:
        g1, g2 = np.meshgrid(grid, grid, indexing="ij")
        vals = lev(np.column_stack([g1.ravel(), g2.ravel()])).reshape(nodes, nodes)
        fine = np.trapezoid(np.trapezoid(vals, grid, axis=1), grid)
        coarse = np.trapezoid(np.trapezoid(vals[::2, ::2], grid[::2], axis=1), grid[::2])
    err = abs(fine - coarse) + 1e-13 * abs(fine)
    return QuadratureResult(float(fine), float(err), nodes)


# ---------------------------------------------------------------------------
# Capped envelope


@dataclass(frozen=True)
class Envelope:
    """Capped upper bound on the leverage function and its total mass.

    ``R`` is the ell-infinity radius of the data in data units; ``scale``
    is ``2*pi*sigma``. ``threshold``, ``A``, ``B`` and the cap refer to
    unit-variance frequencies.
    """

    d: int
    n_lambda: float
    R: float
    scale: float
    threshold: float
    cap: float
    A: float
    B: float
    mass: float
    box_mass: float
    tail_mass: float
    cap_scale: float = 1.0
    degraded: bool = False
    in_regime: bool = True

    @property
    def log_tail_g_mass(self):
        """log of the integral of ``g`` over the tail region (without ``n_lambda``)."""
        return _log_tail_g_mass(self.d, self.A, self.n_lambda)


def _log_B(n_lambda):
    return 0.5 * math.log(2.0 / math.pi) - 50.0 * math.log(n_lambda)


def _log_tail_g_mass(d, A, n_lambda):
    # sum_{j=0}^{d-1} (A-B)^j A^{d-1-j} B, evaluated with B factored out
    B = math.exp(_log_B(n_lambda))
    s = sum((A - B) ** j * A ** (d - 1 - j) for j in range(d))
    return math.log(s) + _log_B(n_lambda)


def envelope_mass(model: KernelModel, R, cap_scale=1.0):
    """Build the capped envelope for data in ``[-R, R]^d`` and its mass.

    ``cap_scale`` multiplies the cap for exploration only; the analysed
    envelope has ``cap_scale = 1``. Issues a :class:`RegimeWarning` when
    ``d > 5 log(n_lambda) + 1``; when ``n_lambda <= 1`` the envelope
    degrades to ``n_lambda * p(eta)``.
    """
    if not R > 0:
        raise InvalidArgumentError(f"R must be positive, got {R}")
    d = model.d
    nl = model.n_lambda
    scale = model.scale
    A = G1_MASS
    if nl <= 1.0:
        warnings.warn("n_lambda <= 1: envelope degrades to n_lambda * p", RegimeWarning,
                      stacklevel=2)
        return Envelope(d, nl, float(R), scale, 0.0, 0.0, A, 0.0, nl, 0.0, nl,
                        cap_scale, degraded=True, in_regime=False)
    L = math.log(nl)
    in_regime = d <= 5.0 * L + 1.0
    if not in_regime:
        warnings.warn(f"d={d} exceeds 5 log(n_lambda) + 1 = {5 * L + 1:.3g}", RegimeWarning,
                      stacklevel=2)
    t = THRESHOLD_CONSTANT * math.sqrt(L)
    R_std = R / scale
    cap = cap_scale * (CAP_CONSTANT * max(R_std, CAP_LOG_CONSTANT * L ** 1.5)) ** d + 1.0
    B = math.exp(_log_B(nl))
    box = cap * (2.0 * t) ** d
    tail = math.exp(math.log(nl) + _log_tail_g_mass(d, A, nl))
    return Envelope(d, nl, float(R), scale, t, cap, A, B, box + tail, box, tail,
                    cap_scale, degraded=False, in_regime=in_regime)


def standard_density(omega):
    """Standard normal density in ``R^d`` at each row of ``omega``."""
    omega = np.atleast_2d(omega)
    d = omega.shape[1]
    return np.exp(-0.5 * np.sum(omega * omega, axis=1)) / (2.0 * math.pi) ** (d / 2.0)


def improved_envelope(eta, env: Envelope):
    """Envelope value at each row of ``eta`` (frequencies in data units).

    Inside the box ``|omega|_inf <= threshold`` (``omega = scale * eta``)
    the value is the cap; outside it is ``n_lambda * p * prod max(1, |omega_j|)``.
    """
    eta_arr = np.asarray(eta, dtype=float)
    single = eta_arr.ndim == 0 or (eta_arr.ndim == 1 and env.d > 1)
    omega = as_frequencies(eta_arr, env.d) * env.scale
    if env.degraded:
        vals = env.n_lambda * standard_density(omega)
    else:
        inside = np.max(np.abs(omega), axis=1) <= env.threshold
        tail = env.n_lambda * standard_density(omega) * np.prod(np.maximum(1.0, np.abs(omega)), axis=1)
        vals = np.where(inside, env.cap, tail)
    vals = vals * env.scale ** env.d
    return float(vals[0]) if single else vals


def statistical_dimension_upper_bound(n_lambda, R, d=1):
    """Upper bound on ``s_lambda(K)`` for data in ``[-R, R]^d`` (unit-variance units)."""
    L = math.log(n_lambda)
    cap = (CAP_CONSTANT * max(R, CAP_LOG_CONSTANT * L ** 1.5)) ** d + 1.0
    return (20.0 * math.sqrt(L)) ** d * cap / gamma_fn(d / 2.0 + 1.0) + 1.0


# ---------------------------------------------------------------------------
# Certificates


def lower_certificate(X, model: KernelModel, eta, alpha, leverage: Optional[RidgeLeverage] = None):
    """Dual ratio ``p |z^* alpha|^2 / alpha^*(K + lam I) alpha``.

    Never exceeds the exact leverage; equals it at the optimal ``alpha``.
    """
    alpha = np.asarray(alpha).reshape(-1)
    if not np.any(alpha != 0):
        raise InvalidArgumentError("alpha must be non-zero")
    X = as_points(X)
    if leverage is None:
        K = kernel_matrix(X, model.sigma)
    else:
        K = leverage.K
    F = as_frequencies(eta, model.d)[:1]
    z = z_matrix(X, F)[:, 0]
    p = fourier_density(F, model.sigma)[0]
    num = p * abs(np.vdot(z, alpha)) ** 2
    den = _real_part(np.vdot(alpha, K @ alpha) + model.lam * np.vdot(alpha, alpha),
                     "certificate denominator")
    return float(num / den)


def blurred_box_transform(x, u, v):
    """``h(x)``: a Gaussian of std ``u/(2*pi*sqrt(2))`` convolved with the box ``[-v/2, v/2]^d``.

    Computed per coordinate from error functions. Returns ``(h, 1 - h)``
    with the complement evaluated without cancellation.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    c = u / (2.0 * math.pi)
    outside = 0.5 * erfc((x + v / 2.0) / c) + 0.5 * erfc((v / 2.0 - x) / c)
    outside = np.minimum(outside, 1.0)
    log_h = np.sum(np.log1p(-outside), axis=1)
    return np.exp(log_h), -np.expm1(log_h)


_GL_CACHE = {}


def _gauss_legendre(k):
    if k not in _GL_CACHE:
        _GL_CACHE[k] = np.polynomial.legendre.leggauss(k)
    return _GL_CACHE[k]


def _panel_integral(func, lo, hi, k):
    """Composite Gauss-Legendre over unit panels between sinc zeros."""
    edges = np.arange(math.floor(lo), math.ceil(hi) + 1, dtype=float)
    edges[0], edges[-1] = lo, hi
    edges = edges[np.diff(edges, prepend=-np.inf) > 0]
    a, b = edges[:-1], edges[1:]
    nodes, weights = _gauss_legendre(k)
    half = 0.5 * (b - a)
    pts = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(half[:, None] * weights[None, :] * func(pts)))


def _spike_norm_factor(omega, u, v, r0, tol=1e-8):
    """One coordinate of ``|y_{eta,u}|^2`` in ``L2(mu)``, plus an analytic tail bound.

    Integrand in ``r = t - omega``: ``exp(r*omega - r^2 (u^2 - 1)/2) v^2 sinc^2(v r)``.
    The window ``|r| <= r0`` is integrated numerically (in ``q = v r``); the
    remainder is bounded using ``sinc^2(v r) <= 1/(pi v r0)^2``.
    """
    a = u * u - 1.0
    if a <= 0:
        return math.inf

    def integrand(q):
        r = q / v
        return np.exp(r * omega - 0.5 * a * r * r) * np.sinc(q) ** 2

    Q = v * r0
    k = 16
    prev = _panel_integral(integrand, -Q, Q, k)
    while True:
        k *= 2
        cur = _panel_integral(integrand, -Q, Q, k)
        if abs(cur - prev) * v <= tol or k >= 256:
            break
        prev = cur
    body = v * cur

    def gauss_tail(w):
        # int_{r0}^inf exp(w r - a r^2 / 2) dr
        z = (a * r0 - w) / math.sqrt(2.0 * a)
        log_erfc = math.log(2.0) + float(log_ndtr(-z * math.sqrt(2.0)))
        return math.exp(w * w / (2.0 * a) + log_erfc) * math.sqrt(math.pi / (2.0 * a))

    tail = (gauss_tail(omega) + gauss_tail(-omega)) / (math.pi * r0) ** 2
    return body + tail


@dataclass(frozen=True)
class UpperCertificate:
    residual_term: float
    norm_term: float
    v: float
    R: float

    @property
    def value(self):
        return self.residual_term + self.norm_term


def upper_certificate_terms(X, model: KernelModel, eta, u, R=None):
    """Primal objective at the softened spike ``y_{eta,u}``, term by term.

    The residual term uses the closed-form transform ``sqrt(p) z h``; the
    norm term is a product of one-dimensional integrals. Both are returned
    in data-frequency units. ``R`` defaults to the half-width of the
    bounding box of ``X`` (the data are re-centred, which leaves the
    leverage function unchanged).
    """
    if model.d not in (1, 2):
        raise UnsupportedDimensionError(f"upper_certificate supports d in {{1, 2}}, got {model.d}")
    if not u > 0:
        raise InvalidArgumentError(f"u must be positive, got {u}")
    scale = model.scale
    Xs = as_points(X) / scale
    Xs = Xs - 0.5 * (Xs.max(axis=0) + Xs.min(axis=0))
    R_std = float(np.max(np.abs(Xs))) if R is None else R / scale
    R_std = max(R_std, 1e-300)
    omega = as_frequencies(eta, model.d)[0] * scale
    L = max(math.log(model.n_lambda), 0.0)
    v = 2.0 * (R_std + u * math.sqrt(2.0 * L))
    p_std = float(standard_density(omega[None, :])[0])
    _, one_minus_h = blurred_box_transform(Xs, u, v)
    residual = p_std * float(np.sum(one_minus_h ** 2)) / model.lam
    r0 = max(20.0 * math.sqrt(L), 10.0) / u
    norm = 1.0
    for w in omega:
        norm *= _spike_norm_factor(float(w), u, v, r0)
    jac = scale ** model.d
    return UpperCertificate(residual * jac, norm * jac, v, R_std * scale)


def upper_certificate(X, model: KernelModel, eta, u, R=None):
    """Upper bound on the leverage at ``eta`` from the softened spike test function."""
    return upper_certificate_terms(X, model, eta, u, R).value


# ---------------------------------------------------------------------------
# Profiles


@dataclass(frozen=True, eq=False)
class LeverageProfile:
    grid: np.ndarray
    tau_exact: np.ndarray
    classical_scaled: np.ndarray
    envelope: Optional[np.ndarray] = None
    lower_cert: Optional[np.ndarray] = None
    upper_cert: Optional[np.ndarray] = None


def leverage_profile(X, model: KernelModel, grid, env: Optional[Envelope] = None,
                     upper_u=None, lower_alphas=None):
    """Exact leverage, ``n_lambda * p`` and optional envelope/certificates on a grid.

    ``upper_u`` adds upper certificates with that ``u``; ``lower_alphas``
    (callable ``eta -> alpha``) adds lower certificates.
    """
    grid = as_frequencies(grid, model.d)
    lev = RidgeLeverage(X, model)
    tau = lev(grid)
    classical = model.n_lambda * fourier_density(grid, model.sigma)
    envelope = improved_envelope(grid, env) if env is not None else None
    upper = None
    if upper_u is not None:
        upper = np.array([upper_certificate(lev.X, model, g, upper_u) for g in grid])
    lower = None
    if lower_alphas is not None:
        lower = np.array([lower_certificate(lev.X, model, g, lower_alphas(g), lev) for g in grid])
    return LeverageProfile(grid, tau, classical, envelope, lower, upper)


def export_profile(profile: LeverageProfile, path, comment=None):
    """Write a profile as CSV: eta columns, tau_exact, n_lambda*p, envelope, certificates."""
    d = profile.grid.shape[1]
    cols = [f"eta_{k + 1}" for k in range(d)] + ["tau_exact", "classical_scaled"]
    data = [profile.grid[:, k] for k in range(d)] + [profile.tau_exact, profile.classical_scaled]
    for name in ("envelope", "lower_cert", "upper_cert"):
        arr = getattr(profile, name)
        if arr is not None:
            cols.append(name)
            data.append(arr)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(",".join(cols) + "\n")
        for row in zip(*data):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
