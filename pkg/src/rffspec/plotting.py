"""SVG plots drawn from experiment CSV files alone, so results can be re-plotted."""

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rffspec"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import read_table  # noqa: E402

SVG_META = {"Date": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)


def _col(rows, key):
    return np.array([r[key] for r in rows], dtype=float)


def plot_fit_1d(csv_path, svg_path):
    t = read_table(csv_path)
    x = _col(t.rows, "x")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(x, _col(t.rows, "y"), ".", ms=2, color="0.6", label="noisy samples")
    ax.plot(x, _col(t.rows, "f_star"), "k-", lw=1, label="target")
    for key, label in (("krr", "KRR"), ("crf", "CRF"), ("mrf", "MRF")):
        ax.plot(x, _col(t.rows, key), lw=1, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.legend(fontsize=8)
    _save(fig, svg_path)


def plot_heatmaps_2d(csv_path, svg_path):
    t = read_table(csv_path)
    m = int(round(np.sqrt(len(t.rows))))
    keys = ("f_star", "krr", "crf", "mrf")
    fig, axes = plt.subplots(1, 4, figsize=(12, 3.2))
    for ax, key in zip(axes, keys):
        img = _col(t.rows, key).reshape(m, m)
        ax.imshow(img.T, origin="lower", cmap="viridis")
        ax.set_title(key.upper() if key != "f_star" else "target")
        ax.set_xticks([])
        ax.set_yticks([])
    _save(fig, svg_path)


def plot_distributions(csv_path, svg_path):
    t = read_table(csv_path)
    eta = _col(t.rows, "eta")
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    ax = axes[0]
    ax.semilogy(eta, _col(t.rows, "tau_exact"), label="ridge leverage")
    ax.semilogy(eta, _col(t.rows, "classical_scaled"), label="(n/lambda) p")
    ax.semilogy(eta, _col(t.rows, "envelope"), label="capped envelope")
    ax.set_ylabel("leverage bound")
    ax = axes[1]
    ax.semilogy(eta, _col(t.rows, "tau_distribution"), label="leverage / s_lambda")
    ax.semilogy(eta, _col(t.rows, "classical_distribution"), label="classical p")
    ax.semilogy(eta, _col(t.rows, "envelope_distribution"), label="modified distribution")
    ax.set_ylabel("sampling density")
    for ax in axes:
        ax.set_xlabel("eta")
        ax.legend(fontsize=8)
    _save(fig, svg_path)


def _medians(rows, metric):
    groups = defaultdict(list)
    for r in rows:
        groups[(r["proposal"], r["s"])].append(r[metric])
    out = defaultdict(list)
    for (prop, s), vals in sorted(groups.items()):
        out[prop].append((s, float(np.median(vals))))
    return out


def plot_sweep(csv_path, svg_path):
    t = read_table(csv_path)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    for ax, metric in zip(axes, ("risk", "frob_error", "kappa")):
        for prop, pts in _medians(t.rows, metric).items():
            s, v = zip(*pts)
            ax.loglog(s, v, "o-", label=prop)
        ax.set_xlabel("s")
        ax.set_ylabel(f"median {metric}")
        ax.legend(fontsize=8)
    _save(fig, svg_path)


def plot_lowerbound(csv_path, svg_path):
    t = read_table(csv_path)
    freq = defaultdict(lambda: [0, 0, 0])
    for r in t.rows:
        acc = freq[r["s"]]
        acc[0] += r["violated"] == "true"
        acc[1] += r["control_violated"] == "true"
        acc[2] += 1
    s = sorted(freq)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(s, [freq[k][0] / freq[k][2] for k in s], "o-", label="classical features")
    ax.semilogx(s, [freq[k][1] / freq[k][2] for k in s], "s--", label="control (G = K)")
    ax.set_xlabel("s")
    ax.set_ylabel("violation frequency")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    _save(fig, svg_path)
