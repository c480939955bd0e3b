"""Render run reports to figure files alongside the delimited output.

Everything draws through the Agg backend so the CLI works headless; each
function writes one PNG and returns its path.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .targets import GaussianMixture, eggholder_grid


def save_trace_figure(states: np.ndarray, path: str | Path, title: str = "") -> Path:
    """First-coordinate trajectory, plus a state scatter when d >= 2."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    path = Path(path)
    two_d = states.shape[1] >= 2
    fig, axes = plt.subplots(1, 2 if two_d else 1, figsize=(10 if two_d else 6, 4))
    ax_series = axes[0] if two_d else axes
    ax_series.plot(states[:, 0], lw=0.5)
    ax_series.set_xlabel("step")
    ax_series.set_ylabel("first coordinate")
    if two_d:
        axes[1].scatter(states[:, 0], states[:, 1], s=1, alpha=0.3)
        axes[1].set_xlabel("x1")
        axes[1].set_ylabel("x2")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_tail_comparison_figure(
    rwm_states: np.ndarray,
    skip_states: np.ndarray,
    path: str | Path,
    mixture: GaussianMixture | None = None,
    level_log: float | None = None,
) -> Path:
    """Side-by-side exploration comparison for the tail experiment.

    For two-dimensional runs the top row scatters both trajectories over
    the level-set boundary; the bottom row shows the first-coordinate
    series for each sampler.
    """
    rwm_states = np.atleast_2d(np.asarray(rwm_states, dtype=float))
    skip_states = np.atleast_2d(np.asarray(skip_states, dtype=float))
    path = Path(path)
    two_d = rwm_states.shape[1] == 2

    fig, axes = plt.subplots(2, 2, figsize=(11, 8))
    if two_d:
        grid = None
        if mixture is not None and level_log is not None:
            all_pts = np.vstack([rwm_states, skip_states])
            pad = 0.1 * (all_pts.max(axis=0) - all_pts.min(axis=0) + 1.0)
            lo = all_pts.min(axis=0) - pad
            hi = all_pts.max(axis=0) + pad
            g1, g2 = np.meshgrid(np.linspace(lo[0], hi[0], 200), np.linspace(lo[1], hi[1], 200))
            pts = np.column_stack([g1.ravel(), g2.ravel()])
            grid = (g1, g2, mixture.logpdf_batch(pts).reshape(g1.shape))
        for ax, states, name in ((axes[0, 0], rwm_states, "random walk"),
                                 (axes[0, 1], skip_states, "skipping")):
            if grid is not None:
                ax.contour(grid[0], grid[1], grid[2], levels=[level_log], colors="k", linewidths=1)
            ax.scatter(states[:, 0], states[:, 1], s=1, alpha=0.25)
            ax.set_title(f"{name}: states")
    else:
        axes[0, 0].hist(rwm_states[:, 0], bins=80)
        axes[0, 0].set_title("random walk: first coordinate")
        axes[0, 1].hist(skip_states[:, 0], bins=80)
        axes[0, 1].set_title("skipping: first coordinate")
    axes[1, 0].plot(rwm_states[:, 0], lw=0.4)
    axes[1, 0].set_title("random walk: first-coordinate series")
    axes[1, 1].plot(skip_states[:, 0], lw=0.4)
    axes[1, 1].set_title("skipping: first-coordinate series")
    for ax in axes[1]:
        ax.set_xlabel("step")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_endpoints_figure(
    endpoints_by_variant: dict[str, np.ndarray],
    bounds: np.ndarray,
    path: str | Path,
    optimum: np.ndarray | None = None,
) -> Path:
    """Endpoint scatter per variant over the eggholder landscape, plus the
    basin-fraction bar chart implied by the endpoints' metadata is left to
    the JSON; this figure is purely the spatial picture."""
    path = Path(path)
    n = len(endpoints_by_variant)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 4), squeeze=False)
    g1, g2 = np.meshgrid(
        np.linspace(bounds[0, 0], bounds[0, 1], 300),
        np.linspace(bounds[1, 0], bounds[1, 1], 300),
    )
    z = eggholder_grid(g1, g2)
    for ax, (name, pts) in zip(axes[0], endpoints_by_variant.items()):
        ax.contourf(g1, g2, z, levels=30, cmap="viridis", alpha=0.7)
        pts = np.atleast_2d(pts)
        ax.scatter(pts[:, 0], pts[:, 1], s=4, c="red", alpha=0.6)
        if optimum is not None:
            ax.scatter([optimum[0]], [optimum[1]], marker="*", s=120, c="white",
                       edgecolors="black", zorder=5)
        ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_metrics_bar_figure(metrics: dict[str, dict], metric_key: str, path: str | Path,
                            ylabel: str = "") -> Path:
    """One bar per variant for a single scalar metric."""
    path = Path(path)
    names = list(metrics)
    values = [metrics[n][metric_key] for n in names]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.bar(names, values, color="tab:blue")
    ax.set_ylabel(ylabel or metric_key)
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.3g}", ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
