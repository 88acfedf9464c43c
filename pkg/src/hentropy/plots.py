"""Figure rendering for sweep reports; SVG files, fixed 800x500 viewport."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def sweep_plot(rows, path: str | Path, title: str = "") -> None:
    """Bound against resolution, with a horizontal line at the maximum bound."""
    xs, ys = [], []
    for res, rec, _ in rows:
        if rec.bound is not None:
            xs.append(float(res))
            ys.append(rec.bound)
    fig, ax = plt.subplots(figsize=(8, 5), dpi=100)
    if xs:
        ax.plot(xs, ys, marker="o", color="#2b6ca3", lw=1.2, ms=3.5)
        ax.axhline(max(ys), color="red", lw=1.0)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("resolution")
    ax.set_ylabel("entropy lower bound")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def region_plot(region_map, grid, path: str | Path) -> None:
    """Scatter of symbol regions, one color per reference symbol."""
    fig, ax = plt.subplots(figsize=(8, 5), dpi=100)
    cmap = plt.get_cmap("tab10")
    for k, entry in enumerate(region_map):
        xs, ys = [], []
        for (i, j) in entry["boxes"]:
            rect = grid.box_of((i, j))
            xs.append(0.5 * (rect.x.lo + rect.x.hi))
            ys.append(0.5 * (rect.y.lo + rect.y.hi))
        ax.scatter(xs, ys, s=2, color=cmap(k % 10),
                   label=entry["reference_symbol"])
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(markerscale=4, fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
