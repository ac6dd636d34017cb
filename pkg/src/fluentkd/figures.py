"""Benchmark charts: latency and memory curves rendered to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "naive": {"color": "#C44E52", "label": "naive baseline"},
    "ceckd": {"color": "#4C72B0", "label": "kd-indexed engine"},
}


def _series(rows, column):
    """column values grouped by engine then event_index, averaged over
    repeats: {engine: (xs, means, stds)}."""
    from statistics import fmean, pstdev

    per_engine: dict = {}
    for r in rows:
        per_engine.setdefault(r[0], {}).setdefault(r[2], []).append(r[column])
    out = {}
    for eng, by_x in per_engine.items():
        xs = sorted(by_x)
        means = [fmean(by_x[x]) for x in xs]
        stds = [pstdev(by_x[x]) if len(by_x[x]) > 1 else 0.0 for x in xs]
        out[eng] = (xs, means, stds)
    return out


def _curve_figure(rows, column, title, ylabel, path, scale=1.0):
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for eng, (xs, means, stds) in sorted(_series(rows, column).items()):
        style = _STYLE.get(eng, {"color": None, "label": eng})
        ys = [m / scale for m in means]
        errs = [s / scale for s in stds]
        ax.errorbar(xs, ys, yerr=errs, lw=1.4, capsize=2, elinewidth=0.6,
                    color=style["color"], label=style["label"])
    ax.set_xlabel("events processed")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_all(rows, outdir) -> list:
    """The four standard charts; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [
        _curve_figure(rows, 3, "Update time per event", "update latency (us)",
                      outdir / "update_time.png", scale=1e3),
        _curve_figure(rows, 4, "Ground holds_at query", "query latency (us)",
                      outdir / "ground_holds_at.png", scale=1e3),
        _curve_figure(rows, 6, "Unbound holds_at query", "query latency (us)",
                      outdir / "unbound_holds_at.png", scale=1e3),
        _curve_figure(
            [r for r in rows if r[9] > 0], 9, "Structure memory",
            "structure bytes (MiB)", outdir / "memory.png", scale=2**20),
    ]
    return paths
