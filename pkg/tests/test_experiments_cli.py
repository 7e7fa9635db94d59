import math
import os

import numpy as np
import pytest

from rffspec import cli
from rffspec.config import ConfigError, config_from_mapping, load_config, parse_int_list
from rffspec.errors import InvalidArgumentError
from rffspec.experiments import (
    ProposalSpec,
    default_config,
    read_table,
    run,
    violation_frequency,
    wiggly_target_1d,
    wiggly_target_2d,
    with_overrides,
    write_table,
)


def test_target_values():
    assert wiggly_target_1d(0.0) == pytest.approx(math.sin(60.0), abs=1e-12)
    assert wiggly_target_1d(0.0) == pytest.approx(-0.304810621, abs=1e-9)
    assert wiggly_target_2d(0.0, 0.0) == pytest.approx(math.sin(10.0) ** 2, abs=1e-12)
    assert wiggly_target_2d(0.0, 0.0) == pytest.approx(0.295958969, abs=1e-9)
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(wiggly_target_2d(x, 0 * x), (np.sin(x) + np.sin(10 * np.exp(x)))
                               * math.sin(10.0))


def test_proposal_parsing():
    assert ProposalSpec.parse("classical").kind == "classical"
    assert ProposalSpec.parse("uniform-box:2.5").gamma == 2.5
    assert ProposalSpec.parse("improved:5").R == 5.0
    assert ProposalSpec.parse("uniform-box").label() == "uniform-box:4"
    for bad in ("gaussian", "uniform-box:x"):
        with pytest.raises(InvalidArgumentError):
            ProposalSpec.parse(bad)


def test_config_parsing(tmp_path):
    assert parse_int_list("0-3, 7") == (0, 1, 2, 3, 7)
    path = tmp_path / "c.ini"
    path.write_text("[DEFAULT]\nworkers = 2\n\n[wiggly1d]\nlambda = 0.01\ns = 64\n"
                    "seeds = 1-3\nproposal = improved:0.8\ncap_scale = 2\n")
    cfg = load_config(path, "wiggly1d")
    assert (cfg.lam, cfg.s, cfg.seeds, cfg.workers) == (0.01, 64, (1, 2, 3), 2)
    assert cfg.proposal == ProposalSpec("improved", R=0.8, cap_scale=2.0)
    assert cfg.sigma == default_config("wiggly1d").sigma
    with pytest.raises(ConfigError):
        config_from_mapping("wiggly1d", {"bogus": "1"})
    with pytest.raises(ConfigError):
        config_from_mapping("wiggly1d", {"s": "many"})
    with pytest.raises(InvalidArgumentError):
        config_from_mapping("wiggly1d", {"lambda": "-1"})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini", "wiggly1d")


def _run_cli(tmp_path, *args):
    out = tmp_path / "runs"
    code = cli.main([*args, "--out", str(out)])
    dirs = sorted(os.listdir(out)) if out.exists() else []
    return code, [out / d for d in dirs]


def test_cli_wiggly1d_outputs(tmp_path, capsys):
    code, dirs = _run_cli(tmp_path, "wiggly1d", "--seed", "0", "--seed", "1", "--s", "40")
    assert code == 0 and len(dirs) == 1
    files = set(os.listdir(dirs[0]))
    assert {"results.csv", "predictions.csv", "plot_fit.svg", "manifest.txt"} <= files
    manifest = (dirs[0] / "manifest.txt").read_text()
    for key in ("numpy:", "scipy:", "seeds: 0,1", "s = 40"):
        assert key in manifest
    t = read_table(dirs[0] / "results.csv")
    assert len(t.rows) == 6 and any(m.startswith("units:") for m in t.meta)
    assert str(dirs[0]) in capsys.readouterr().out


def test_cli_reruns_are_byte_identical(tmp_path):
    args = ("lowerbound", "--seed", "3", "--s-values", "5,10", "--workers", "2")
    _, first = _run_cli(tmp_path / "a", *args)
    _, second = _run_cli(tmp_path / "b", *args)
    for name in ("results.csv", "plot_violations.svg"):
        assert (first[0] / name).read_bytes() == (second[0] / name).read_bytes()


def test_worker_count_does_not_change_results():
    cfg = default_config("spectral-sweep", s_values=(20, 40), seeds=(0, 1, 2))
    a = run(with_overrides(cfg, workers=1))[0]
    b = run(with_overrides(cfg, workers=3))[0]
    assert a.rows == b.rows


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[wiggly1d]\nfrobnicate = 3\n")
    code, dirs = _run_cli(tmp_path, "wiggly1d", "--config", str(bad))
    assert code == cli.EXIT_CONFIG and dirs == []
    assert "config error" in capsys.readouterr().err
    code, _ = _run_cli(tmp_path, "wiggly1d", "--proposal", "nope")
    assert code == cli.EXIT_CONFIG
    code, _ = _run_cli(tmp_path, "wiggly1d", "--s-values", "a,b")
    assert code == cli.EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        cli.main(["no-such-experiment"])
    assert info.value.code == 2


def test_plot_regenerates_from_csv(tmp_path):
    cfg = default_config("spectral-sweep", s_values=(20, 40), seeds=(0, 1))
    table = run(cfg)[0]
    write_table(table, tmp_path / "r.csv")
    cli.plotting.plot_sweep(tmp_path / "r.csv", tmp_path / "p.svg")
    svg = (tmp_path / "p.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_table_roundtrip(tmp_path):
    cfg = default_config("lowerbound", s_values=(5,), seeds=(0, 1), grid_m=101)
    table = run(cfg)[0]
    write_table(table, tmp_path / "lb.csv")
    back = read_table(tmp_path / "lb.csv")
    assert back.columns == table.columns and back.meta == table.meta
    assert violation_frequency(back) == violation_frequency(table)
    assert back.rows[0]["ratio"] == pytest.approx(table.rows[0]["ratio"], rel=1e-9)


def test_distributions_flags():
    cfg = default_config("distributions", eta_points=121)
    table = run(cfg)[0]
    assert len(table.rows) == 121
    flags = [m for m in table.meta if m.startswith("flags:")][0]
    assert "envelope_dominates=True" in flags
    assert "classical_over_at_zero=True" in flags
    assert "classical_under_in_midband=True" in flags
    eta = np.array([r["eta"] for r in table.rows])
    for key in ("tau_distribution", "classical_distribution"):
        dens = np.array([r[key] for r in table.rows])
        # one-sided grid of a symmetric density: twice the half-line integral is about 1
        assert 2 * np.trapezoid(dens, eta) == pytest.approx(1.0, abs=0.02)


def test_sweep_properties():
    cfg = default_config("spectral-sweep", s_values=(25, 100, 400), seeds=(0, 1, 2))
    rows = run(cfg)[0].rows
    for prop in ("CRF", "MRF"):
        med = [np.median([r["frob_error"] for r in rows if r["proposal"] == prop and r["s"] == s])
               for s in (25, 100, 400)]
        assert med[0] > med[-1]
    assert all(r["kappa"] >= 1 for r in rows)
    assert all(r["delta"] >= 0 for r in rows)


def test_lowerbound_control_never_violated():
    cfg = default_config("lowerbound", s_values=(5, 10), seeds=tuple(range(6)))
    table = run(cfg)[0]
    freq = violation_frequency(table)
    assert all(ctrl == 0.0 for _, ctrl in freq.values())
    assert all(v >= 0.5 for v, _ in freq.values())


def test_embed_dim_keeps_kernel():
    from rffspec.kernelspace import kernel_matrix
    from rffspec.lowerbound import GridSpec, grid_dataset

    spec = GridSpec(21, 1, 2.0)
    K1 = kernel_matrix(grid_dataset(spec).X, 0.3)
    K3 = kernel_matrix(grid_dataset(spec, embed_dim=3).X, 0.3)
    np.testing.assert_array_equal(K1, K3)
    base = default_config("lowerbound", s_values=(5,), seeds=(0, 1, 2), embed_dim=3)
    rows = run(base)[0].rows
    assert not any(r["control_violated"] for r in rows)
    assert any(r["violated"] for r in rows)
