"""Classical and modified random Fourier feature maps.

A feature map stores the sampled frequencies, the importance weights
``sqrt(p / q)`` and the complex ``n x s`` matrix ``Z`` with

    Z[j, l] = weights[l] / sqrt(s) * exp(-2*pi*i * x_j^T eta_l)

so that ``Z Z^*`` is an unbiased estimate of the kernel matrix.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rng as rngmod
from .errors import DegenerateProposalError, InvalidArgumentError, SupportWarning
from .kernelspace import KernelModel, as_frequencies, as_points, fourier_density

CLASSICAL = "classical"
UNIFORM_BOX = "uniform-box"
IMPROVED = "improved"
CUSTOM = "custom"


@dataclass(frozen=True)
class Proposal:
    """A frequency proposal: density callable plus sampler.

    ``density`` maps an ``(m, d)`` array to ``m`` densities; ``sampler`` is
    called as ``sampler(s, rng)`` and returns an ``(s, d)`` array.
    """

    proposal_id: str
    density: Callable
    sampler: Callable
    full_support: bool = True
    params: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class FeatureMap:
    frequencies: np.ndarray
    weights: np.ndarray
    Z: np.ndarray
    proposal_id: str = CUSTOM
    seed: Optional[int] = None
    warnings: tuple = ()

    @property
    def s(self):
        return self.frequencies.shape[0]

    @property
    def d(self):
        return self.frequencies.shape[1]

    def features(self, X):
        """Rows ``phi(x)^*`` for new points, i.e. the ``Z`` rows they would get."""
        return _feature_rows(as_points(X), self.frequencies, self.weights)


def _feature_rows(X, frequencies, weights):
    s = frequencies.shape[0]
    return np.exp(-2j * np.pi * (X @ frequencies.T)) * (weights / math.sqrt(s))


def _check_count(s):
    if int(s) != s or s < 1:
        raise InvalidArgumentError(f"sample count must be a positive integer, got {s}")
    return int(s)


def sample_classical(model: KernelModel, s, seed, stream=rngmod.FEATURES):
    """Draw ``s`` frequencies from the kernel's spectral density."""
    s = _check_count(s)
    rng = rngmod.make_rng(seed, stream)
    return rng.normal(0.0, model.spectral_std, size=(s, model.d))


def box_half_width(model: KernelModel, gamma):
    """Half-width of the uniform-box proposal, ``gamma / (2*pi*sigma)``.

    ``gamma`` counts standard deviations of the spectral density, i.e. the
    box is ``[-gamma/sigma, gamma/sigma]`` in angular frequency.
    """
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    return gamma * model.spectral_std


def sample_uniform_box(model: KernelModel, gamma, s, seed, stream=rngmod.FEATURES):
    s = _check_count(s)
    a = box_half_width(model, gamma)
    rng = rngmod.make_rng(seed, stream)
    return rng.uniform(-a, a, size=(s, model.d))


def classical_proposal(model: KernelModel):
    return Proposal(
        CLASSICAL,
        density=lambda eta: fourier_density(as_frequencies(eta, model.d), model.sigma),
        sampler=lambda s, rng: rng.normal(0.0, model.spectral_std, size=(s, model.d)),
    )


def uniform_box_proposal(model: KernelModel, gamma=4.0):
    a = box_half_width(model, gamma)
    vol = (2.0 * a) ** model.d

    def density(eta):
        eta = as_frequencies(eta, model.d)
        inside = np.all(np.abs(eta) <= a, axis=1)
        return np.where(inside, 1.0 / vol, 0.0)

    return Proposal(
        UNIFORM_BOX,
        density=density,
        sampler=lambda s, rng: rng.uniform(-a, a, size=(s, model.d)),
        full_support=False,
        params={"gamma": gamma, "half_width": a},
    )


def build_feature_map(X, model: KernelModel, frequencies, proposal_density=None,
                      proposal_id=CUSTOM, seed=None, full_support=True):
    """Assemble ``Z`` for frequencies drawn from a proposal ``q``.

    Parameters
    ----------
    X : array_like, shape (n, d)
    model : KernelModel
    frequencies : array_like, shape (s, d)
    proposal_density : callable or None
        Maps an ``(s, d)`` array to ``q`` at each row. ``None`` (or
        ``proposal_id == "classical"``) means ``q = p`` and all weights are 1.
    proposal_id, seed : recorded on the returned map.
    full_support : bool
        Whether ``q`` is positive wherever ``p`` is; if not, a
        :class:`SupportWarning` is issued and recorded on the map.

    Raises
    ------
    DegenerateProposalError
        If ``q`` is not strictly positive at some sampled frequency.
    """
    X = as_points(X)
    F = as_frequencies(frequencies, X.shape[1])
    s = F.shape[0]
    if s < 1:
        raise InvalidArgumentError("at least one frequency is required")
    if proposal_density is None or proposal_id == CLASSICAL:
        weights = np.ones(s)
    else:
        q = np.asarray(proposal_density(F), dtype=float).reshape(-1)
        if q.shape[0] != s:
            raise InvalidArgumentError("proposal density returned the wrong number of values")
        bad = ~(q > 0) | ~np.isfinite(q)
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            raise DegenerateProposalError(
                f"proposal density is {q[idx]} at sampled frequency {F[idx].tolist()}"
            )
        p = fourier_density(F, model.sigma)
        weights = np.sqrt(p / q)
    notes = ()
    if not full_support:
        msg = f"proposal '{proposal_id}' does not cover the support of the spectral density"
        warnings.warn(msg, SupportWarning, stacklevel=2)
        notes = (msg,)
    Z = _feature_rows(X, F, weights)
    return FeatureMap(F, weights, Z, proposal_id, seed, notes)


def feature_map_from_proposal(X, model: KernelModel, proposal: Proposal, s, seed,
                              stream=rngmod.FEATURES):
    """Sample ``s`` frequencies from ``proposal`` and build the map."""
    s = _check_count(s)
    F = np.asarray(proposal.sampler(s, rngmod.make_rng(seed, stream)), dtype=float)
    density = None if proposal.proposal_id == CLASSICAL else proposal.density
    return build_feature_map(X, model, F, density, proposal.proposal_id, seed,
                             full_support=proposal.full_support)


def classical_feature_map(X, model: KernelModel, s, seed, stream=rngmod.FEATURES):
    F = sample_classical(model, s, seed, stream)
    return build_feature_map(X, model, F, None, CLASSICAL, seed)


def surrogate_gram(fm: FeatureMap):
    """Hermitian ``Z Z^*``."""
    G = fm.Z @ fm.Z.conj().T
    return 0.5 * (G + G.conj().T)


def concatenate(a: FeatureMap, b: FeatureMap):
    """Pool two maps into one with ``s_a + s_b`` columns.

    The weights are kept, so ``Z`` is rescaled by ``sqrt(s_old / s_new)``;
    for equal sizes the pooled Gram is the average of the two Grams.
    """
    F = np.vstack([a.frequencies, b.frequencies])
    w = np.concatenate([a.weights, b.weights])
    s = F.shape[0]
    Z = np.hstack([a.Z * math.sqrt(a.s / s), b.Z * math.sqrt(b.s / s)])
    pid = a.proposal_id if a.proposal_id == b.proposal_id else CUSTOM
    return FeatureMap(F, w, Z, pid, None, a.warnings + b.warnings)


def recommended_sample_size(delta, rho, s_tilde, s_lambda):
    """Number of features sufficient for a ``delta``-spectral approximation.

    ``ceil(8/3 * delta^-2 * s_tilde * ln(16 * s_lambda / rho))`` where
    ``s_tilde`` is the total mass of a leverage upper bound used for
    sampling (``n / lambda`` for classical features).
    """
    if not (0 < delta <= 0.5):
        raise InvalidArgumentError(f"delta must lie in (0, 1/2], got {delta}")
    if not (0 < rho <= 1):
        raise InvalidArgumentError(f"rho must lie in (0, 1], got {rho}")
    if not (s_lambda > 0 and s_tilde >= s_lambda):
        raise InvalidArgumentError("require s_tilde >= s_lambda > 0")
    return int(math.ceil(sample_size_bound(delta, rho, s_tilde, s_lambda)))


def sample_size_bound(delta, rho, s_tilde, s_lambda):
    """The real-valued bound before rounding up."""
    return (8.0 / 3.0) * delta ** -2 * s_tilde * math.log(16.0 * s_lambda / rho)


# Columnar text format:
#   # rffspec feature map v1
#   # s=<int>
#   # d=<int>
#   # proposal_id=<str>
#   # seed=<int or none>
#   eta_1,...,eta_d,weight
#   <rows, %.17g>
_HEADER = "# rffspec feature map v1"


def save_feature_map(fm: FeatureMap, path):
    cols = [f"eta_{k + 1}" for k in range(fm.d)] + ["weight"]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(_HEADER + "\n")
        fh.write(f"# s={fm.s}\n# d={fm.d}\n# proposal_id={fm.proposal_id}\n")
        fh.write(f"# seed={'none' if fm.seed is None else fm.seed}\n")
        fh.write(",".join(cols) + "\n")
        for row, w in zip(fm.frequencies, fm.weights):
            fh.write(",".join(format(float(v), ".17g") for v in (*row, w)) + "\n")


def load_feature_map(path, X):
    """Read a saved map and rebuild ``Z`` for the points ``X``."""
    meta = {}
    rows = []
    with open(path, encoding="ascii") as fh:
        first = fh.readline().rstrip("\n")
        if first != _HEADER:
            raise InvalidArgumentError(f"{path} is not a feature map file")
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line.startswith("eta_"):
                continue
            elif line:
                rows.append([float(v) for v in line.split(",")])
    s, d = int(meta["s"]), int(meta["d"])
    data = np.array(rows, dtype=float).reshape(s, d + 1)
    F, w = data[:, :d], data[:, d]
    seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
    X = as_points(X)
    return FeatureMap(F, w, _feature_rows(X, F, w), meta.get("proposal_id", CUSTOM), seed)
