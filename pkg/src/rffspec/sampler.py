"""Exact sampler for the improved frequency distribution.

The distribution has density proportional to the capped envelope: a
uniform density on the box ``|omega|_inf <= t`` mixed with a tail
proportional to ``g(omega) = prod_j g1(omega_j)``, where
``g1(x) = phi(x) max(1, |x|)``. The tail is split into disjoint regions
``R_j = {|omega_1|, ..., |omega_{j-1}| <= t < |omega_j|}``; inside ``R_j``
the density factorizes, so each coordinate is drawn independently.

Sampling is done for unit-variance frequencies and divided by
``2*pi*sigma`` at the end.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from . import rng as rngmod
from .errors import InvalidArgumentError, RegimeWarning
from .features import IMPROVED, Proposal
from .kernelspace import KernelModel, as_frequencies
from .leverage import G1_MASS, Envelope, envelope_mass, improved_envelope

HEAD_MASS = float(erf(1.0 / math.sqrt(2.0)))


@dataclass(frozen=True)
class ImprovedSamplerState:
    """Mixture weights for the improved distribution.

    ``uniform_weight`` is the box share of the envelope mass;
    ``region_probs[j]`` the probability of tail region ``R_{j+1}`` given a
    tail draw; ``head_prob`` the probability that ``g1`` draws fall in
    ``[-1, 1]``.
    """

    env: Envelope
    uniform_weight: float
    region_probs: np.ndarray
    head_prob: float
    tail_by_rejection: bool = False

    @property
    def threshold(self):
        return self.env.threshold

    @property
    def degraded(self):
        return self.env.degraded


@dataclass(frozen=True)
class SamplerStats:
    """Rejection rounds spent on each coordinate of each draw (1 for box draws)."""

    rounds: np.ndarray
    from_box: np.ndarray

    @property
    def mean_rounds_per_coordinate(self):
        return float(np.mean(self.rounds))


def region_probabilities(d, A=G1_MASS, B=0.0):
    """Normalized ``A^{d-j} (A-B)^{j-1} B`` for ``j = 1..d``; ``B`` cancels."""
    r = (A - B) / A
    w = r ** np.arange(d)
    return w / np.sum(w)


def sampler_state(model: KernelModel, R, cap_scale=1.0, uniform_weight=None):
    """Build the sampler for data in ``[-R, R]^d``.

    ``uniform_weight`` overrides the box share (for testing only; the
    result is then not the envelope distribution).
    """
    env = envelope_mass(model, R, cap_scale)
    if uniform_weight is None:
        uw = 0.0 if env.degraded else env.box_mass / env.mass
    else:
        if not 0.0 <= uniform_weight <= 1.0:
            raise InvalidArgumentError(f"uniform_weight must lie in [0, 1], got {uniform_weight}")
        uw = float(uniform_weight)
    by_rejection = (not env.degraded) and env.threshold < 1.0
    if by_rejection:
        warnings.warn("threshold below 1: tail draws fall back to rejection", RegimeWarning,
                      stacklevel=2)
    return ImprovedSamplerState(
        env=env,
        uniform_weight=uw,
        region_probs=region_probabilities(model.d, env.A, env.B),
        head_prob=HEAD_MASS / G1_MASS,
        tail_by_rejection=by_rejection,
    )


def region_index(omega, threshold):
    """0 for points in the box, else the 1-based index of the first coordinate beyond it."""
    big = np.abs(np.atleast_2d(omega)) > threshold
    first = np.argmax(big, axis=1) + 1
    return np.where(np.any(big, axis=1), first, 0)


def g1_tail_inverse(u, n_lambda):
    """Point ``xi`` whose two-sided ``g1`` tail mass equals ``u * A``.

    Uses ``A (1 - G(xi)) = sqrt(2/pi) exp(-xi^2 / 2)`` for ``xi >= 1``.
    ``u`` must lie in ``[0, B/A]`` with ``B = sqrt(2/pi) n_lambda^-50``.
    """
    u = np.asarray(u, dtype=float)
    if not n_lambda > 1:
        raise InvalidArgumentError(f"n_lambda must exceed 1, got {n_lambda}")
    log_b_over_a = 0.5 * math.log(2.0 / math.pi) - 50.0 * math.log(n_lambda) - math.log(G1_MASS)
    if np.any(u < 0):
        raise InvalidArgumentError("u must lie in [0, B/A]")
    with np.errstate(divide="ignore"):
        log_u = np.log(u)
    if np.any(log_u - log_b_over_a > 1e-12):
        raise InvalidArgumentError("u must lie in [0, B/A]")
    t2 = 100.0 * math.log(n_lambda)
    # -2 ln(sqrt(pi/2) u A) = t^2 - 2 (ln u - ln(B/A))
    xi = np.sqrt(np.maximum(t2 - 2.0 * (log_u - log_b_over_a), t2))
    return float(xi) if xi.ndim == 0 else xi


def g1_tail_mass(xi):
    """Two-sided mass of ``g1`` beyond ``xi >= 1``."""
    return math.sqrt(2.0 / math.pi) * np.exp(-0.5 * np.asarray(xi, dtype=float) ** 2)


def _draw_g1(rng, m):
    """``m`` draws from ``g1 / A`` and the rejection rounds each took."""
    out = np.empty(m)
    rounds = np.ones(m, dtype=np.int64)
    head = rng.random(m) < HEAD_MASS / G1_MASS
    idx = np.flatnonzero(head)
    while idx.size:
        x = rng.standard_normal(idx.size)
        ok = np.abs(x) <= 1.0
        out[idx[ok]] = x[ok]
        idx = idx[~ok]
        rounds[idx] += 1
    tail = np.flatnonzero(~head)
    # |x| > 1 with density proportional to x phi(x): P(|x| > xi) = exp(-(xi^2 - 1)/2)
    v = 1.0 - rng.random(tail.size)
    sign = np.where(rng.random(tail.size) < 0.5, -1.0, 1.0)
    out[tail] = sign * np.sqrt(1.0 - 2.0 * np.log(v))
    return out, rounds


def _draw_g1_head(rng, m, threshold):
    out, rounds = _draw_g1(rng, m)
    idx = np.flatnonzero(np.abs(out) >= threshold)
    while idx.size:
        x, r = _draw_g1(rng, idx.size)
        out[idx] = x
        rounds[idx] += r
        keep = np.abs(x) >= threshold
        idx = idx[keep]
    return out, rounds


def _draw_g1_tail(rng, m, threshold, by_rejection):
    if by_rejection:
        out, rounds = _draw_g1(rng, m)
        idx = np.flatnonzero(np.abs(out) <= threshold)
        while idx.size:
            x, r = _draw_g1(rng, idx.size)
            out[idx] = x
            rounds[idx] += r
            idx = idx[np.abs(x) <= threshold]
        return out, rounds
    v = 1.0 - rng.random(m)
    sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return sign * np.sqrt(threshold ** 2 - 2.0 * np.log(v)), np.ones(m, dtype=np.int64)


def sample_g1(seed, size=None, stream=rngmod.SAMPLER):
    """Draws with density ``g1 / A``; a scalar when ``size`` is None."""
    rng = rngmod.make_rng(seed, stream)
    out, _ = _draw_g1(rng, 1 if size is None else int(size))
    return float(out[0]) if size is None else out


def sample_g1_head(threshold, seed, size=None, stream=rngmod.SAMPLER, return_rounds=False):
    """Draws with density proportional to ``g1`` on ``|x| < threshold``."""
    if not threshold > 0:
        raise InvalidArgumentError(f"threshold must be positive, got {threshold}")
    rng = rngmod.make_rng(seed, stream)
    out, rounds = _draw_g1_head(rng, 1 if size is None else int(size), threshold)
    if size is None:
        out = float(out[0])
    return (out, rounds) if return_rounds else out


def sample_improved(state: ImprovedSamplerState, model: KernelModel, s, seed,
                    stream=rngmod.SAMPLER, return_stats=False):
    """``s`` i.i.d. frequencies (data units) from the improved distribution."""
    if int(s) != s or s < 1:
        raise InvalidArgumentError(f"s must be a positive integer, got {s}")
    s, d = int(s), model.d
    if d != state.env.d:
        raise InvalidArgumentError("model and sampler state disagree on the dimension")
    rng = rngmod.make_rng(seed, stream)
    if state.env.degraded:
        omega = rng.standard_normal((s, d))
        stats = SamplerStats(np.ones((s, d), dtype=np.int64), np.zeros(s, dtype=bool))
        eta = omega / model.scale
        return (eta, stats) if return_stats else eta

    t = state.threshold
    omega = np.empty((s, d))
    rounds = np.ones((s, d), dtype=np.int64)
    from_box = rng.random(s) < state.uniform_weight
    nb = int(np.count_nonzero(from_box))
    omega[from_box] = rng.uniform(-t, t, size=(nb, d))

    tail_rows = np.flatnonzero(~from_box)
    regions = rng.choice(d, size=tail_rows.size, p=state.region_probs)
    for j in range(d):
        rows = tail_rows[regions == j]
        if rows.size == 0:
            continue
        for k in range(d):
            if k < j:
                x, r = _draw_g1_head(rng, rows.size, t)
            elif k == j:
                x, r = _draw_g1_tail(rng, rows.size, t, state.tail_by_rejection)
            else:
                x, r = _draw_g1(rng, rows.size)
            omega[rows, k] = x
            rounds[rows, k] = r
    eta = omega / model.scale
    if return_stats:
        return eta, SamplerStats(rounds, from_box)
    return eta


def improved_density(eta, state: ImprovedSamplerState):
    """Normalized density of the improved distribution in data-frequency units."""
    return improved_envelope(as_frequencies(eta, state.env.d), state.env) / state.env.mass


def improved_proposal(model: KernelModel, R, cap_scale=1.0):
    """:class:`Proposal` wrapping the improved sampler (full support)."""
    state = sampler_state(model, R, cap_scale)
    return Proposal(
        IMPROVED,
        density=lambda eta: improved_density(eta, state),
        sampler=lambda s, rng: sample_improved(state, model, s, rng),
        full_support=True,
        params={"R": R, "cap_scale": cap_scale, "state": state},
    )
