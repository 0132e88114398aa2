"""Figure and table rendering for run directories.

SVG output is deterministic: fixed hash salt, no embedded date, fixed canvas
sizes. Re-rendering an unchanged run directory reproduces the files
byte-for-byte. Plain-text tables accompany every figure.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import read_json, read_sweep_csv
from .experiment import HIST_BIN_WIDTH, HIST_RANGE, fit_noise_curve

EXACT_GROUND = -1.136189454088

_SVG_OPTS = {"metadata": {"Date": None}}


def _configure() -> None:
    plt.rcParams["svg.hashsalt"] = "noisyvqe"
    plt.rcParams["figure.dpi"] = 100


def write_table(path, headers, rows) -> None:
    """Aligned fixed-width text table next to the figure it describes."""
    cols = [str(h) for h in headers]
    str_rows = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in cols]
    for row in str_rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(cols, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in str_rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    Path(path).write_text("\n".join(lines) + "\n")


def _group_by_intensity(rows):
    grouped: dict = {}
    for r in rows:
        grouped.setdefault(r.intensity, []).append(r.final_energy)
    return dict(sorted(grouped.items()))


def render_heatmap(run_dir, out_dir) -> list:
    """Counts of final energies in fixed 0.01-Ha bins per noise intensity."""
    _configure()
    rows = read_sweep_csv(Path(run_dir) / "sweep.csv")
    grouped = _group_by_intensity(rows)
    lo, hi = HIST_RANGE
    edges = np.arange(lo, hi + HIST_BIN_WIDTH / 2, HIST_BIN_WIDTH)
    counts = np.zeros((len(edges) - 1, len(grouped)))
    for j, (intensity, energies) in enumerate(grouped.items()):
        c, _ = np.histogram(np.clip(energies, lo, hi - 1e-12), bins=edges)
        counts[:, j] = c
    masked = np.ma.masked_equal(counts, 0)
    fig, ax = plt.subplots(figsize=(7, 5))
    mesh = ax.pcolormesh(
        np.arange(len(grouped) + 1), edges, masked, cmap="viridis", shading="flat"
    )
    ax.set_xticks(np.arange(len(grouped)) + 0.5)
    ax.set_xticklabels([f"{k:g}" for k in grouped], rotation=45)
    ax.axhline(EXACT_GROUND, color="black", linestyle=":", linewidth=1)
    ax.set_xlabel("noise intensity")
    ax.set_ylabel("final energy (Ha)")
    fig.colorbar(mesh, ax=ax, label="runs per bin")
    fig.tight_layout()
    svg = Path(out_dir) / "heatmap.svg"
    fig.savefig(svg, **_SVG_OPTS)
    plt.close(fig)
    table_rows = []
    for intensity, energies in grouped.items():
        hist, _ = np.histogram(np.clip(energies, lo, hi - 1e-12), bins=edges)
        for i, c in enumerate(hist):
            if c:
                table_rows.append([f"{intensity:g}", f"{edges[i]:.2f}", int(c)])
    txt = Path(out_dir) / "heatmap.txt"
    write_table(txt, ["intensity", "bin_left", "count"], table_rows)
    return [svg, txt]


def render_noise_curve(run_dir, out_dir) -> list:
    """Mean energy vs intensity with std error bars and fitted overlays."""
    _configure()
    rows = read_sweep_csv(Path(run_dir) / "sweep.csv")
    grouped = _group_by_intensity(rows)
    xs = np.array(list(grouped))
    means = np.array([np.mean(v) for v in grouped.values()])
    stds = np.array([np.std(v, ddof=1) if len(v) > 1 else 0.0 for v in grouped.values()])
    points = list(zip(xs, means, stds))
    fits = {}
    if len(points) >= 3:
        fits["LINEAR"] = fit_noise_curve(points, "LINEAR")
    if len(points) >= 4:
        try:
            fits["ERF"] = fit_noise_curve(points, "ERF")
        except RuntimeError:
            pass
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.errorbar(xs, means, yerr=stds, fmt="o", capsize=3, color="tab:blue", label="mean of repetitions")
    dense = np.linspace(xs.min(), xs.max(), 200)
    styles = {"LINEAR": ("tab:orange", "-"), "ERF": ("tab:green", "--")}
    for name, fit in fits.items():
        color, ls = styles[name]
        label = f"{name.lower()} fit (R^2={fit.r_squared:.4f})"
        ax.plot(dense, fit.predict(dense), ls, color=color, label=label)
    ax.axhline(EXACT_GROUND, color="black", linestyle=":", linewidth=1, label="exact ground energy")
    ax.set_xlabel("noise intensity")
    ax.set_ylabel("mean final energy (Ha)")
    ax.legend()
    fig.tight_layout()
    svg = Path(out_dir) / "noise_curve.svg"
    fig.savefig(svg, **_SVG_OPTS)
    plt.close(fig)
    table = [
        [f"{x:g}", f"{m:.6f}", f"{s:.6f}"] for x, m, s in zip(xs, means, stds)
    ]
    for name, fit in fits.items():
        table.append([f"[{name} fit]", " ".join(f"{c:.6g}" for c in fit.coefficients), f"R2={fit.r_squared:.5f}"])
    txt = Path(out_dir) / "noise_curve.txt"
    write_table(txt, ["intensity", "mean_energy", "std"], table)
    return [svg, txt]


def render_trace(run_dir, out_dir) -> list:
    """Energy per iteration; adds the recalculated panel when available."""
    _configure()
    run_dir = Path(run_dir)
    import csv as _csv

    recalc_path = run_dir / "recalc.csv"
    trace_path = run_dir / "trace.csv"
    if recalc_path.exists():
        its, noisy, recalc = [], [], []
        with open(recalc_path, newline="") as fh:
            for rec in _csv.DictReader(fh):
                its.append(int(rec["iteration"]))
                noisy.append(float(rec["noisy_energy"]))
                recalc.append(float(rec["recalc_energy"]))
        fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
        axes[0].plot(its, noisy, ".-", color="tab:red")
        axes[0].set_title("optimization energies")
        axes[1].plot(its, recalc, ".-", color="tab:blue")
        axes[1].set_title("noiseless recalculation")
        for ax in axes:
            ax.axhline(EXACT_GROUND, color="black", linestyle=":", linewidth=1)
            ax.set_xlabel("iteration")
        axes[0].set_ylabel("energy (Ha)")
        table_rows = list(zip(its, [f"{v:.6f}" for v in noisy], [f"{v:.6f}" for v in recalc]))
        headers = ["iteration", "noisy_energy", "recalc_energy"]
    else:
        its, energies = [], []
        with open(trace_path, newline="") as fh:
            for rec in _csv.DictReader(fh):
                its.append(int(rec["iteration"]))
                energies.append(float(rec["energy"]))
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(its, energies, ".-", color="tab:red")
        ax.axhline(EXACT_GROUND, color="black", linestyle=":", linewidth=1)
        ax.set_xlabel("iteration")
        ax.set_ylabel("energy (Ha)")
        table_rows = list(zip(its, [f"{v:.6f}" for v in energies]))
        headers = ["iteration", "energy"]
    fig.tight_layout()
    svg = Path(out_dir) / "trace.svg"
    fig.savefig(svg, **_SVG_OPTS)
    plt.close(fig)
    txt = Path(out_dir) / "trace.txt"
    write_table(txt, headers, table_rows)
    return [svg, txt]


def render_histogram(run_dir, out_dir) -> list:
    """Final-energy histogram for every swept intensity."""
    _configure()
    rows = read_sweep_csv(Path(run_dir) / "sweep.csv")
    grouped = _group_by_intensity(rows)
    n = len(grouped)
    fig, axes = plt.subplots(n, 1, figsize=(7, 1.6 * n + 1), sharex=True, squeeze=False)
    lo, hi = HIST_RANGE
    edges = np.arange(lo, hi + HIST_BIN_WIDTH / 2, HIST_BIN_WIDTH)
    table_rows = []
    for ax, (intensity, energies) in zip(axes[:, 0], grouped.items()):
        c, _ = np.histogram(np.clip(energies, lo, hi - 1e-12), bins=edges)
        ax.bar(edges[:-1], c, width=HIST_BIN_WIDTH, align="edge", color="tab:blue")
        ax.axvline(EXACT_GROUND, color="black", linestyle=":", linewidth=1)
        ax.set_ylabel(f"{intensity:g}", rotation=0, labelpad=25)
        table_rows.append([f"{intensity:g}", f"{np.mean(energies):.6f}", f"{np.std(energies):.6f}", len(energies)])
    axes[-1, 0].set_xlabel("final energy (Ha)")
    fig.tight_layout()
    svg = Path(out_dir) / "histogram.svg"
    fig.savefig(svg, **_SVG_OPTS)
    plt.close(fig)
    txt = Path(out_dir) / "histogram.txt"
    write_table(txt, ["intensity", "mean", "std", "n"], table_rows)
    return [svg, txt]


def render_bakeoff(run_dir, out_dir) -> list:
    """Learning curves of every optimizer in a bakeoff run directory."""
    _configure()
    run_dir = Path(run_dir)
    import csv as _csv

    summary = read_json(run_dir / "summary.json")
    fig, ax = plt.subplots(figsize=(8, 5))
    table_rows = []
    for name in summary["optimizers"]:
        for rep in range(summary["repetitions"]):
            path = run_dir / f"trace_{name}_{rep}.csv"
            its, es = [], []
            with open(path, newline="") as fh:
                for rec in _csv.DictReader(fh):
                    its.append(int(rec["iteration"]))
                    es.append(float(rec["energy"]))
            label = name if rep == 0 else None
            ax.plot(its, es, alpha=0.8, label=label)
            table_rows.append([name, rep, f"{min(es):.6f}", f"{es[-1]:.6f}"])
    ax.axhline(EXACT_GROUND, color="black", linestyle=":", linewidth=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy (Ha)")
    ax.legend()
    fig.tight_layout()
    svg = Path(out_dir) / "bakeoff.svg"
    fig.savefig(svg, **_SVG_OPTS)
    plt.close(fig)
    txt = Path(out_dir) / "bakeoff.txt"
    write_table(txt, ["optimizer", "repetition", "best_energy", "final_energy"], table_rows)
    return [svg, txt]


REPORT_KINDS = {
    "heatmap": (render_heatmap, "sweep.csv"),
    "noise_curve": (render_noise_curve, "sweep.csv"),
    "trace": (render_trace, "trace.csv"),
    "histogram": (render_histogram, "sweep.csv"),
}
