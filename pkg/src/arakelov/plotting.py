"""SVG line plots for series and tables stored in result records.

Plots are rendered from the plain ``{"x": [...], "series": {label: [...]}}``
description kept in a record, so a cached result renders the same figure as
a fresh one.  The SVG writer is configured for reproducible output (fixed
hash salt, no date stamp).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "arakelov"
plt.rcParams["svg.fonttype"] = "none"


def line_plot_spec(name: str, x, series: dict, xlabel: str, ylabel: str, title: str = "", reference: float | None = None) -> dict:
    spec = {
        "name": name,
        "x": [float(v) for v in x],
        "series": {k: [float(v) for v in ys] for k, ys in series.items()},
        "xlabel": xlabel,
        "ylabel": ylabel,
        "title": title,
    }
    if reference is not None:
        spec["reference"] = float(reference)
    return spec


def render_line_plot(spec: dict, path: str | Path) -> Path:
    """Write one SVG line plot described by :func:`line_plot_spec`."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    markers = "osd^v<>"
    for i, (label, ys) in enumerate(spec["series"].items()):
        ax.plot(spec["x"], ys, marker=markers[i % len(markers)], ms=4, lw=1.2, label=label)
    if "reference" in spec:
        ax.axhline(spec["reference"], color="0.4", ls="--", lw=1.0, label="reference")
    ax.set_xlabel(spec["xlabel"])
    ax.set_ylabel(spec["ylabel"])
    if spec.get("title"):
        ax.set_title(spec["title"])
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
