"""Matplotlib rendering for evaluation reports and map inspection.

All functions write PNG files; none open interactive windows (Agg backend).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .imaging import ParametricImage

__all__ = ["save_map_figure", "save_comparison_figure", "save_rrmse_histogram",
           "save_correlation_scatter"]

_CMAP = "viridis"


def _masked(img) -> np.ma.MaskedArray:
    if isinstance(img, ParametricImage):
        return np.ma.masked_invalid(img.values)
    return np.ma.masked_invalid(np.asarray(img, dtype=float))


def save_map_figure(img, path, title: str = "", value_range: tuple[float, float] | None = None) -> Path:
    """Render one map with a colorbar."""
    data = _masked(img)
    vmin, vmax = value_range if value_range else (None, None)
    fig, ax = plt.subplots(figsize=(4.0, 4.0 * data.shape[0] / max(data.shape[1], 1) * 0.6 + 1.0))
    im = ax.imshow(data, cmap=_CMAP, vmin=vmin, vmax=vmax, interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_comparison_figure(panels: list[tuple[str, object]], path,
                           value_range: tuple[float, float] | None = None) -> Path:
    """Render labelled maps side by side with a shared color scale."""
    arrays = [_masked(img) for _, img in panels]
    if value_range is None:
        finite = np.concatenate([a.compressed() for a in arrays if a.count()]) if arrays else np.array([0.0])
        vmin, vmax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        if vmin == vmax:
            vmax = vmin + 1.0
    else:
        vmin, vmax = value_range
    fig, axes = plt.subplots(1, len(panels), figsize=(3.2 * len(panels), 4.0))
    if len(panels) == 1:
        axes = [axes]
    im = None
    for ax, (label, _), data in zip(axes, panels, arrays):
        im = ax.imshow(data, cmap=_CMAP, vmin=vmin, vmax=vmax, interpolation="nearest")
        ax.set_title(label, fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=list(axes), fraction=0.03)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_rrmse_histogram(per_image: dict[str, list[float]], path) -> Path:
    """Histogram of per-image RRMSE values, one panel per parameter."""
    kinds = [k for k in per_image if any(np.isfinite(v) for v in per_image[k])]
    fig, axes = plt.subplots(1, max(len(kinds), 1), figsize=(4.0 * max(len(kinds), 1), 3.2))
    if len(kinds) <= 1:
        axes = [axes]
    for ax, kind in zip(axes, kinds):
        vals = np.asarray([v for v in per_image[kind] if np.isfinite(v)])
        ax.hist(vals, bins=min(30, max(5, vals.size // 5)), color="steelblue", edgecolor="black",
                linewidth=0.4)
        ax.set_title(f"{kind} RRMSE (mean {vals.mean():.3f})", fontsize=10)
        ax.set_xlabel("RRMSE")
        ax.set_ylabel("images")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_correlation_scatter(map_alpha: ParametricImage, map_m: ParametricImage, path,
                             max_points: int = 20000) -> Path:
    """Scatter of jointly valid (log10 alpha, m) pixel pairs."""
    joint = map_alpha.valid_mask & map_m.valid_mask
    a = map_alpha.values[joint]
    b = map_m.values[joint]
    if a.size > max_points:
        idx = np.linspace(0, a.size - 1, max_points).astype(int)
        a, b = a[idx], b[idx]
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    ax.plot(a, b, ".", markersize=2, alpha=0.35, color="midnightblue")
    ax.set_xlabel("log10 alpha estimate")
    ax.set_ylabel("m estimate")
    ax.set_title("alpha vs m across pixels", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
