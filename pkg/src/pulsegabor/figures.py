"""Matplotlib figure rendering for the CLI report paths.

Everything goes through :func:`save_figure` so the PNG byte stream
stays reproducible: fixed dpi, pinned Software metadata, no
timestamps.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

__all__ = ["save_figure", "sweep_figure", "edge_figure", "response_figure"]

FIGURE_DPI = 120
PNG_METADATA = {"Software": "pulsegabor"}


def save_figure(fig, path) -> None:
    """Write ``fig`` as a deterministic PNG and release it."""
    fig.savefig(path, dpi=FIGURE_DPI, metadata=dict(PNG_METADATA))
    plt.close(fig)


def sweep_figure(r1: float, r2_values, measured, analytic):
    """Measured subtractor rate vs counter-rate, against the ideal law."""
    r2_values = np.asarray(r2_values, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(r2_values, np.asarray(analytic, dtype=np.float64), "k--", label="max(r1 - r2, 0)")
    ax.plot(r2_values, np.asarray(measured, dtype=np.float64), "o-", ms=4, label="measured")
    ax.set_xlabel("counter-input rate r2 (pulses / unit time)")
    ax.set_ylabel("output rate")
    ax.set_title(f"pulse subtractor, r1 = {r1:g}")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def edge_figure(displacements, unpooled, pooled=None):
    """Response-vs-displacement curve(s) for the edge detector."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(displacements, unpooled, "o-", ms=4, label="unpooled")
    if pooled is not None:
        ax.plot(displacements, pooled, "s-", ms=4, label="pooled")
    ax.set_xlabel("edge displacement (pixels from window start)")
    ax.set_ylabel("summed response rate")
    ax.set_title("step edge sweep")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def response_figure(grids: dict):
    """Side-by-side grayscale maps, one panel per named grid."""
    names = list(grids)
    fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names), 3.4))
    if len(names) == 1:
        axes = [axes]
    for ax, name in zip(axes, names):
        grid = np.asarray(grids[name], dtype=np.float64)
        ax.imshow(grid, cmap="gray", interpolation="nearest")
        ax.set_title(name)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    return fig
