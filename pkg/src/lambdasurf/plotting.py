"""Static figure rendering for CLI reports.

All plots use the half-plane convention: x horizontal, r vertical, unit
scale, with the axis of revolution drawn as the horizontal boundary and
the sphere-radius half circle added for reference.  Figures are written to
files (SVG by default), never shown interactively.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .integrate import Trajectory
from .linearize import LinearizedSolution
from .model import Params
from .surface import ClosedProfile

__all__ = [
    "profile_figure",
    "closing_figure",
    "linearize_figure",
]


def _decorate_half_plane(ax, params: Params) -> None:
    radius = params.r_lambda
    u = np.linspace(0.0, math.pi, 200)
    ax.plot(-radius * np.cos(u), radius * np.sin(u), linestyle="--",
            color="0.6", linewidth=0.8, label=f"sphere r={radius:.4g}")
    ax.axhline(0.0, color="0.3", linewidth=0.8)
    ax.axvline(0.0, color="0.85", linewidth=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("r")
    ax.set_aspect("equal")
    ax.grid(True, alpha=0.25)


def profile_figure(
    curves: list[tuple[str, Trajectory]],
    params: Params,
    path: str,
    title: str | None = None,
    points_per_curve: int = 1200,
) -> None:
    """Plot profile curves in the (x, r) half plane and save to ``path``."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, traj in curves:
        ss = np.linspace(traj.s_start, traj.s_end, points_per_curve)
        y = traj.evaluate_array(ss)
        ax.plot(y[0], y[1], linewidth=1.2, label=label)
    _decorate_half_plane(ax, params)
    if title:
        ax.set_title(title)
    if len(curves) <= 12:
        ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def closing_figure(profile: ClosedProfile, params: Params, path: str,
                   title: str | None = None) -> None:
    """Plot a mirror-extended closed profile and save to ``path``."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(profile.x, profile.r, color="crimson", linewidth=1.4,
            label="closing profile")
    _decorate_half_plane(ax, params)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def linearize_figure(solution: LinearizedSolution, path: str,
                     title: str | None = None) -> None:
    """Plot the cylinder linearization with its located zeros."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(solution.xs, solution.ws, linewidth=1.2, label="w(x)")
    if solution.zeros:
        ax.plot(solution.zeros, [0.0] * len(solution.zeros), "o",
                color="crimson", markersize=4,
                label=f"{len(solution.zeros)} zeros")
    ax.axhline(0.0, color="0.3", linewidth=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("w")
    ax.set_title(title or f"coefficient c = {solution.coefficient:.6g}")
    ax.grid(True, alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
