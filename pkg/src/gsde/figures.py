"""Matplotlib renderings of the report data files.

Every figure mirrors a delimited file written next to it; the figures are a
convenience view, the CSVs are the contract.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_MAX_CURVES = 400


def render_lognorm(
    path: str | Path,
    times: np.ndarray,
    matrix: np.ndarray,
    scenario_ids: list[int],
    title: str = "",
) -> Path:
    """Plot log|x(t)| per trajectory, colored by scenario."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = matrix.shape[1]
    stride = max(1, n // _MAX_CURVES)
    unique = sorted(set(scenario_ids))
    cmap = plt.get_cmap("viridis", max(len(unique), 2))
    color_of = {sid: cmap(i) for i, sid in enumerate(unique)}
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for j in range(0, n, stride):
        ax.plot(times, matrix[:, j], color=color_of[scenario_ids[j]], alpha=0.25, lw=0.6)
    for sid in unique:
        ax.plot([], [], color=color_of[sid], label=f"scenario {sid}")
    ax.set_xlabel("t")
    ax.set_ylabel("log |x(t)|")
    if title:
        ax.set_title(title)
    if len(unique) <= 8:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_margins(
    path: str | Path,
    points: np.ndarray,
    margins: np.ndarray,
    tolerance: float,
    title: str = "",
) -> Path:
    """Scatter generator-bound margins against sample radius."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    radii = np.linalg.norm(points, axis=1)
    finite = np.isfinite(margins)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.scatter(radii[finite], margins[finite], s=4, alpha=0.4)
    ax.axhline(tolerance, color="crimson", lw=1.0, label="tolerance")
    ax.set_xscale("log")
    ax.set_xlabel("|x|")
    ax.set_ylabel("LV - gamma + eta")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
