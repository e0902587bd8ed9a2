"""Matplotlib renderers for the report path; every figure lands in a file."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_COLORS = {
    "sample": "tab:red",
    "thermal": "tab:blue",
    "squashed": "tab:orange",
    "coherent": "tab:green",
    "distinguishable": "tab:purple",
    "smsv": "goldenrod",
}


def _color(label: str) -> str:
    return _COLORS.get(label, "gray")


def connectivity_figure(profile: np.ndarray, path, delays=(1, 6, 36)) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    offsets = np.arange(len(profile))
    positive = profile > 0
    ax.semilogy(offsets[positive], profile[positive], lw=1.0, color="tab:blue")
    for d in delays:
        if d < len(profile):
            ax.axvline(d, color="tab:red", ls=":", lw=0.8)
    ax.set_xlabel("sub-diagonal offset (bins)")
    ax.set_ylabel("mean |entry|")
    ax.set_title("transfer-matrix connectivity profile")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def orbit_scatter_figure(points_by_label: dict[str, np.ndarray], path, lines=None) -> None:
    """3D orbit-space scatter with a 2D projection panel.

    ``points_by_label`` maps label -> (N, 3) arrays of (o1, o2, o3);
    ``lines`` is an optional iterable of (anchor, direction, half_length).
    """
    fig = plt.figure(figsize=(11, 5))
    ax3 = fig.add_subplot(1, 2, 1, projection="3d")
    ax2 = fig.add_subplot(1, 2, 2)
    for label, pts in points_by_label.items():
        pts = np.asarray(pts)
        if pts.size == 0:
            continue
        ax3.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=14, label=label, color=_color(label))
        ax2.scatter(pts[:, 0], pts[:, 1], s=14, label=label, color=_color(label))
    if lines:
        for anchor, direction, half in lines:
            seg = np.outer(np.linspace(-half, half, 2), direction) + anchor
            ax3.plot(seg[:, 0], seg[:, 1], seg[:, 2], color="k", lw=0.6, alpha=0.6)
            ax2.plot(seg[:, 0], seg[:, 1], color="k", lw=0.6, alpha=0.6)
    ax3.set_xlabel("O1")
    ax3.set_ylabel("O2")
    ax3.set_zlabel("O3")
    ax2.set_xlabel("O1")
    ax2.set_ylabel("O2")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def covariance_grid_figure(matrices: dict[str, np.ndarray], path) -> None:
    labels = list(matrices)
    n = len(labels)
    cols = min(n, 3)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3.4 * rows), squeeze=False)
    vmax = max(float(np.abs(m).max()) for m in matrices.values())
    for k, label in enumerate(labels):
        ax = axes[k // cols][k % cols]
        im = ax.imshow(matrices[label], vmin=0, vmax=vmax, cmap="viridis")
        ax.set_title(label, fontsize=10)
        fig.colorbar(im, ax=ax, fraction=0.046)
    for k in range(n, rows * cols):
        axes[k // cols][k % cols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def photon_number_figure(totals_by_label: dict[str, np.ndarray], path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, totals in totals_by_label.items():
        totals = np.asarray(totals)
        hi = int(totals.max()) + 2 if totals.size else 2
        ax.hist(
            totals, bins=np.arange(hi) - 0.5, histtype="step",
            density=True, label=label, color=_color(label),
        )
    ax.set_xlabel("detected photons per shot")
    ax.set_ylabel("frequency")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def orbit_histogram_figure(hist, n: int, path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    freqs = list(hist.values())
    ax.bar(np.arange(len(freqs)), freqs, color="tab:blue")
    ax.set_xlabel(f"orbit index (canonical order, n={n})")
    ax.set_ylabel("frequency")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
