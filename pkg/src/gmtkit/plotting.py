"""Figure rendering for the CLI report path.

Every CSV the tool emits gets a companion PNG unless plotting is turned
off.  Figures are presentation artifacts: they are listed in reports but
never digested, so verification does not depend on the renderer.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 110, "bbox_inches": "tight", "metadata": {"Software": None}}


def save_xy(path, rows, xlabel, ylabel, title, logy=False, logx=False) -> None:
    """Line plot of (x, y) rows."""
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(xs, ys, marker="o", ms=3.5, lw=1.2)
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_multi(path, series, xlabel, ylabel, title, logy=False, logx=False) -> None:
    """Several labelled (x, y) series on one axis: {label: rows}."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for label, rows in series.items():
        ax.plot([r[0] for r in rows], [r[1] for r in rows], marker="o", ms=3, lw=1.1, label=label)
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_cubes(path, region, box, title, highlight=None) -> None:
    """2-D rendering of a region's cubes (and an optional second region)."""
    if box.dim != 2:
        raise ValueError("cube plots are 2-D only")
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    for reg, color, alpha in ((region, "tab:blue", 0.45), (highlight, "tab:red", 0.35)):
        if reg is None:
            continue
        for cube in reg:
            lo = cube.low(box)
            side = cube.side(box)
            ax.add_patch(plt.Rectangle(lo, side, side, facecolor=color, edgecolor="k",
                                       linewidth=0.3, alpha=alpha))
    ax.set_xlim(box.origin[0], box.origin[0] + box.side)
    ax.set_ylim(box.origin[1], box.origin[1] + box.side)
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=10)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_atoms(path, measure, title) -> None:
    """2-D scatter of atoms sized by mass."""
    if measure.dim != 2:
        raise ValueError("atom plots are 2-D only")
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    m = measure.masses
    sizes = 3.0 + 40.0 * m / m.max() if m.size else []
    ax.scatter(measure.positions[:, 0], measure.positions[:, 1], s=sizes, alpha=0.6, lw=0)
    box = measure.box
    ax.set_xlim(box.origin[0], box.origin[0] + box.side)
    ax.set_ylim(box.origin[1], box.origin[1] + box.side)
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=10)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_field(path, field, title, component: int | None = None) -> None:
    """Heatmap of a 2-D scalar field (or |V| of a vector field)."""
    if field.dim != 2:
        raise ValueError("field plots are 2-D only")
    if field.rank == "scalar":
        img = field.values
    elif component is not None:
        img = field.values[component]
    else:
        img = np.sqrt((field.values**2).sum(axis=0))
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    extent = (field.box.origin[0], field.box.origin[0] + field.box.side,
              field.box.origin[1], field.box.origin[1] + field.box.side)
    im = ax.imshow(img.T, origin="lower", extent=extent, cmap="RdBu_r")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title, fontsize=10)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
