"""Experiment configuration files.

Flat ``key = value`` text with one section per experiment; keys in
``[DEFAULT]`` apply to every section::

    [DEFAULT]
    workers = 4

    [wiggly1d]
    sigma = 0.0280443
    lambda = 0.00618936
    sigma_nu = 0.3
    s = 200
    proposal = uniform-box:4
    seeds = 0-19

Keys: sigma, lambda, sigma_nu, s, s_values (comma list), proposal,
cap_scale, seeds (comma list and ``a-b`` ranges), n, half_width,
eta_points, eta_max, grid_m, grid_R, embed_dim, workers.
"""

import configparser

from .errors import InvalidArgumentError
from .experiments import ProposalSpec, default_config

KEYS = {
    "sigma": ("sigma", float),
    "lambda": ("lam", float),
    "sigma_nu": ("sigma_nu", float),
    "s": ("s", int),
    "n": ("n", int),
    "half_width": ("half_width", float),
    "eta_points": ("eta_points", int),
    "eta_max": ("eta_max", float),
    "grid_m": ("grid_m", int),
    "grid_r": ("grid_R", float),
    "embed_dim": ("embed_dim", int),
    "workers": ("workers", int),
}


class ConfigError(InvalidArgumentError):
    pass


def parse_int_list(text):
    """``"0-3, 7"`` -> ``(0, 1, 2, 3, 7)``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def load_config(path, experiment):
    """Defaults for ``experiment`` updated from the matching section of ``path``."""
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    section = parser[experiment] if parser.has_section(experiment) else parser.defaults()
    return config_from_mapping(experiment, dict(section))


def config_from_mapping(experiment, values):
    overrides = {}
    proposal = None
    cap_scale = None
    try:
        for key, raw in values.items():
            key = key.lower()
            if key in KEYS:
                name, conv = KEYS[key]
                overrides[name] = conv(raw)
            elif key == "seeds":
                overrides["seeds"] = parse_int_list(raw)
            elif key == "s_values":
                overrides["s_values"] = parse_int_list(raw)
            elif key == "proposal":
                proposal = ProposalSpec.parse(raw)
            elif key == "cap_scale":
                cap_scale = float(raw)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    base = default_config(experiment, **overrides)
    if proposal is not None or cap_scale is not None:
        proposal = proposal or base.proposal
        if cap_scale is not None:
            proposal = ProposalSpec(proposal.kind, proposal.gamma, proposal.R, cap_scale)
        base = default_config(experiment, **overrides, proposal=proposal)
    return base
