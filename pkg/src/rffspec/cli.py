"""Command-line entry point: ``rffspec <experiment> [options]``."""

import argparse
import datetime
import os
import platform
import sys

import matplotlib
import numpy as np
import scipy

from . import __version__, plotting
from .config import ConfigError, load_config
from .errors import InvalidArgumentError, NonConvergenceError, NumericalError
from .experiments import (
    EXPERIMENTS,
    GRID_NOTE,
    ProposalSpec,
    default_config,
    run,
    with_overrides,
    write_table,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

PLOTS = {
    "wiggly1d": [("predictions", "plot_fit.svg", plotting.plot_fit_1d)],
    "wiggly2d": [("predictions", "plot_heatmaps.svg", plotting.plot_heatmaps_2d)],
    "distributions": [("results", "plot_distributions.svg", plotting.plot_distributions)],
    "spectral-sweep": [("results", "plot_sweep.svg", plotting.plot_sweep)],
    "lowerbound": [("results", "plot_violations.svg", plotting.plot_lowerbound)],
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="rffspec",
        description="Random Fourier feature experiments for Gaussian-kernel ridge regression.",
        epilog="Config files use [section] per experiment with key = value lines; see "
               "rffspec.config for the list of keys.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key=value config file with one section per experiment")
    p.add_argument("--seed", type=int, action="append", dest="seeds",
                   help="seed to run (repeatable); overrides the config seed list")
    p.add_argument("--out", default="runs", help="parent output directory (default: runs)")
    p.add_argument("--proposal",
                   help="classical | uniform-box[:gamma] | improved[:R] (MRF / sampled proposal)")
    p.add_argument("--s", type=int, help="number of features")
    p.add_argument("--s-values", help="comma-separated feature counts for sweeps")
    p.add_argument("--workers", type=int, help="seeds processed concurrently")
    p.add_argument("--embed-dim", type=int,
                   help="lowerbound: pad the grid with zero coordinates up to this dimension")
    return p


def _output_dir(parent, experiment):
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
    base = os.path.join(parent, f"{experiment}_{stamp}")
    path, k = base, 1
    while os.path.exists(path):
        path = f"{base}-{k}"
        k += 1
    os.makedirs(path)
    return path


def _manifest(config, argv):
    lines = [
        f"command: rffspec {' '.join(argv)}",
        f"experiment: {config.experiment}",
        f"rffspec: {__version__}",
        f"python: {platform.python_version()}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        f"matplotlib: {matplotlib.__version__}",
        f"seeds: {','.join(str(s) for s in sorted(config.seeds))}",
        f"note: {GRID_NOTE}",
        "config:",
    ]
    for key, value in vars(config).items():
        if key == "proposal":
            value = value.label() + f" (cap_scale={value.cap_scale:g})"
        lines.append(f"  {key} = {value}")
    return "\n".join(lines) + "\n"


def resolve_config(args):
    config = load_config(args.config, args.experiment) if args.config \
        else default_config(args.experiment)
    s_values = None
    if args.s_values:
        try:
            s_values = tuple(int(v) for v in args.s_values.split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"bad --s-values: {exc}") from exc
    proposal = ProposalSpec.parse(args.proposal) if args.proposal else None
    if proposal is not None and proposal.kind == "improved":
        proposal = ProposalSpec(proposal.kind, proposal.gamma, proposal.R,
                                config.proposal.cap_scale)
    return with_overrides(
        config,
        seeds=tuple(args.seeds) if args.seeds else None,
        s=args.s,
        s_values=s_values,
        proposal=proposal,
        workers=args.workers,
        embed_dim=args.embed_dim,
    )


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"rffspec: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        tables = run(config)
    except (NumericalError, NonConvergenceError) as exc:
        print(f"rffspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidArgumentError as exc:
        print(f"rffspec: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_dir(args.out, config.experiment)
    paths = {}
    for table in tables:
        path = os.path.join(out, f"{table.name}.csv")
        write_table(table, path)
        paths[table.name] = path
    for source, name, func in PLOTS[config.experiment]:
        func(paths[source], os.path.join(out, name))
    with open(os.path.join(out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write(_manifest(config, argv))
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
