"""Figure regeneration from simulator outputs; no metric recomputation.

Two styles:

* fig2: running metrics versus slot index, one curve per (algorithm, run
  label) pair, two stacked panels (normalized deviation f_bar and per-user
  rate r_bar).
* fig3: final per-user rate versus the swept axis value, one curve per
  algorithm (falls back to one point per algorithm when the input is a
  single run rather than a sweep).

``regen_figures`` returns a manifest mapping each written image to the
(algorithm, label/value) pairs plotted, so callers and tests can check the
legend contents without parsing pixels.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .schema import (
    SWEEP_SUMMARY_NAME,
    PlotInputError,
    discover_runs,
    is_nan,
    read_sweep_summary,
    read_timeseries,
)


def _curve_has_data(values) -> bool:
    return any(not is_nan(v) for v in values)


def fig2(results_dir, out_path) -> list[tuple[str, str]]:
    """Running deviation and rate versus time; returns the plotted (algo, label) pairs."""
    runs = discover_runs(results_dir)
    if not runs:
        raise PlotInputError(
            f"no inputs under {results_dir}: expected timeseries.csv in the "
            "directory or its subdirectories")
    fig, (ax_dev, ax_rate) = plt.subplots(2, 1, figsize=(7, 8), sharex=True)
    plotted: list[tuple[str, str]] = []
    for label, path in runs:
        series = read_timeseries(path)
        for algo in series.algorithms:
            name = f"{algo}, {label}" if len(runs) > 1 else algo
            fbar = series.columns[(algo, "f_bar")]
            if _curve_has_data(fbar):
                ax_dev.plot(series.slots, fbar, label=name)
            rbar = series.columns[(algo, "r_bar")]
            ax_rate.plot(series.slots, rbar, label=name)
            plotted.append((algo, label))
    ax_dev.set_ylabel("normalized deviation (running)")
    ax_dev.set_yscale("log")
    ax_dev.grid(True, alpha=0.4)
    if ax_dev.get_legend_handles_labels()[1]:
        ax_dev.legend(fontsize=8)
    ax_rate.set_ylabel("per-user rate [b/s/Hz] (running)")
    ax_rate.set_xlabel("slot")
    ax_rate.grid(True, alpha=0.4)
    ax_rate.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return plotted


def fig3(results_dir, out_path) -> list[tuple[str, str]]:
    """Final per-user rate versus the swept value; returns (algo, value-label) pairs."""
    summary_path = os.path.join(os.fspath(results_dir), SWEEP_SUMMARY_NAME)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    plotted: list[tuple[str, str]] = []
    if os.path.exists(summary_path):
        summary = read_sweep_summary(summary_path)
        algos = sorted({r["algorithm"] for r in summary.rows})
        for algo in algos:
            pts = sorted(
                ((r["value"], r["r_bar"]) for r in summary.rows if r["algorithm"] == algo))
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=algo)
            plotted.extend((algo, f"{p[0]:g}") for p in pts)
        ax.set_xlabel(summary.axis)
    else:
        runs = discover_runs(results_dir)
        if not runs:
            raise PlotInputError(
                f"no inputs under {results_dir}: expected {SWEEP_SUMMARY_NAME} or "
                "timeseries.csv files")
        finals: dict[str, list[tuple[str, float]]] = {}
        for label, path in runs:
            series = read_timeseries(path)
            for algo in series.algorithms:
                rbar = series.columns[(algo, "r_bar")]
                finals.setdefault(algo, []).append((label, rbar[-1]))
        for algo, points in sorted(finals.items()):
            xs = list(range(len(points)))
            ax.plot(xs, [p[1] for p in points], marker="s", linestyle="--", label=algo)
            plotted.extend((algo, p[0]) for p in points)
        ax.set_xticks(range(max(len(v) for v in finals.values())))
        ax.set_xticklabels([p[0] for p in next(iter(finals.values()))], rotation=30,
                           fontsize=8)
        ax.set_xlabel("run")
    ax.set_ylabel("final per-user rate [b/s/Hz]")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return plotted


def regen_figures(results_dir, out_dir, style: str = "all") -> dict:
    """Emit the requested figures; returns {image path: plotted pairs}."""
    os.makedirs(out_dir, exist_ok=True)
    manifest: dict = {}
    if style in ("fig2", "all"):
        path = os.path.join(os.fspath(out_dir), "fig2.png")
        manifest[path] = fig2(results_dir, path)
    if style in ("fig3", "all"):
        path = os.path.join(os.fspath(out_dir), "fig3.png")
        manifest[path] = fig3(results_dir, path)
    for path, pairs in manifest.items():
        if len(set(pairs)) != len(pairs):
            raise RuntimeError(f"{path}: duplicate legend entries {pairs}")
    return manifest
