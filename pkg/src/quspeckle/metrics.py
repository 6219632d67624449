"""Evaluation metrics: relative RMSE with truth-zero exclusion, improvement
percentages, map correlation, and frame averaging.

RRMSE here takes the per-pixel reading of the relative error: the root mean
of ((pred - truth) / truth)^2 over included pixels. Pixels whose truth value
is zero (within 1e-12) are excluded, as are pixels the predictor marked
invalid; that exclusion is what makes the per-pixel denominator well defined.
A whole-map-mean denominator variant is kept behind ``denominator=`` for
comparison, and reports record which one was used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, EmptyDomainError, ParameterDomainError
from .imaging import ParametricImage

__all__ = [
    "rrmse",
    "rrmse_detail",
    "improvement_percent",
    "map_correlation",
    "frame_average",
    "MetricReport",
]

TRUTH_ZERO_TOL = 1e-12


def _pred_values_mask(pred) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pred, ParametricImage):
        return pred.values.astype(np.float64), pred.valid_mask
    arr = np.asarray(pred, dtype=np.float64)
    return arr, np.isfinite(arr)


def rrmse_detail(pred, truth, denominator: str = "per-pixel",
                 zero_tol: float = TRUTH_ZERO_TOL) -> tuple[float, int]:
    """RRMSE plus the number of excluded pixels.

    ``zero_tol`` widens the truth-zero exclusion; the default keeps only
    exact zeros out. With truth values drawn from a continuum the relative
    error is unbounded near zero, so evaluations of log10(alpha) maps against
    continuous ground truth typically pass a tolerance on the scale of the
    map (e.g. 0.05) and report it.
    """
    if denominator not in ("per-pixel", "global-mean"):
        raise ParameterDomainError(f"unknown denominator mode {denominator!r}")
    if zero_tol < 0:
        raise ParameterDomainError(f"zero_tol must be >= 0, got {zero_tol}")
    pred_vals, valid = _pred_values_mask(pred)
    truth_vals = np.asarray(truth, dtype=np.float64)
    if truth_vals.shape != pred_vals.shape:
        raise ParameterDomainError(
            f"prediction shape {pred_vals.shape} != truth shape {truth_vals.shape}"
        )
    include = valid & (np.abs(truth_vals) > zero_tol)
    excluded = int(include.size - np.count_nonzero(include))
    if not np.any(include):
        raise EmptyDomainError("no pixels left after exclusion")
    diff = pred_vals[include] - truth_vals[include]
    if denominator == "per-pixel":
        value = math.sqrt(float(np.mean((diff / truth_vals[include]) ** 2)))
    else:
        value = math.sqrt(float(np.mean(diff**2))) / abs(float(np.mean(truth_vals[include])))
    return value, excluded


def rrmse(pred, truth, denominator: str = "per-pixel",
          zero_tol: float = TRUTH_ZERO_TOL) -> float:
    """Relative root-mean-square error over valid, truth-nonzero pixels."""
    return rrmse_detail(pred, truth, denominator, zero_tol)[0]


def improvement_percent(baseline: float, method: float) -> float:
    """Percentage improvement of ``method`` over ``baseline``: 100 (b - m) / b."""
    if not (np.isfinite(baseline) and baseline > 0):
        raise ParameterDomainError(f"baseline must be positive, got {baseline}")
    return 100.0 * (baseline - method) / baseline


def map_correlation(map_a: ParametricImage, map_b: ParametricImage) -> float:
    """Pearson correlation over jointly valid pixels of two maps."""
    if (map_a.height, map_a.width) != (map_b.height, map_b.width):
        raise ParameterDomainError("maps must have matching dimensions")
    joint = map_a.valid_mask & map_b.valid_mask
    if np.count_nonzero(joint) < 2:
        raise DegenerateInputError("need at least 2 jointly valid pixels")
    a = map_a.values[joint].astype(np.float64)
    b = map_b.values[joint].astype(np.float64)
    a -= a.mean()
    b -= b.mean()
    denom = math.sqrt(float(np.sum(a * a)) * float(np.sum(b * b)))
    if denom == 0.0:
        raise DegenerateInputError("zero variance in at least one map")
    return float(np.clip(np.sum(a * b) / denom, -1.0, 1.0))


def frame_average(maps: list[ParametricImage]) -> ParametricImage:
    """Pixelwise mean across frames, over the frames valid at each pixel.

    A pixel of the result is valid when a strict majority of frames are valid
    there.
    """
    if not maps:
        raise EmptyDomainError("frame_average needs at least one map")
    kind = maps[0].parameter_kind
    shape = maps[0].values.shape
    for m in maps:
        if m.values.shape != shape or m.parameter_kind != kind:
            raise ParameterDomainError("all frames must share dimensions and parameter kind")
    stack = np.stack([m.values.astype(np.float64) for m in maps])
    valid = np.stack([m.valid_mask for m in maps])
    counts = valid.sum(axis=0)
    with np.errstate(invalid="ignore"):
        summed = np.where(valid, stack, 0.0).sum(axis=0)
        mean = np.where(counts > 0, summed / np.maximum(counts, 1), np.nan)
    majority = counts * 2 > len(maps)
    return ParametricImage(values=mean.astype(np.float32), valid_mask=majority, parameter_kind=kind)


@dataclass
class MetricReport:
    """Aggregated evaluation results over a set of images.

    ``per_image`` maps parameter kind -> list of per-image RRMSE values (NaN
    where an image could not be scored); aggregates are over scored images.
    """

    denominator: str
    per_image: dict[str, list[float]] = field(default_factory=dict)
    excluded_pixels: dict[str, int] = field(default_factory=dict)
    correlations: list[float] = field(default_factory=list)
    improvements: dict[str, float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add(self, kind: str, value: float, excluded: int) -> None:
        self.per_image.setdefault(kind, []).append(value)
        self.excluded_pixels[kind] = self.excluded_pixels.get(kind, 0) + excluded

    def mean_std(self, kind: str) -> tuple[float, float]:
        vals = np.asarray([v for v in self.per_image.get(kind, []) if np.isfinite(v)])
        if vals.size == 0:
            raise EmptyDomainError(f"no scored images for {kind!r}")
        return float(vals.mean()), float(vals.std(ddof=0))

    def summary(self) -> dict:
        out = {"denominator": self.denominator, "parameters": {}, "config": self.config}
        for kind in self.per_image:
            mean, std = self.mean_std(kind)
            out["parameters"][kind] = {
                "rrmse_mean": mean,
                "rrmse_std": std,
                "images": len(self.per_image[kind]),
                "excluded_pixels": self.excluded_pixels.get(kind, 0),
            }
            if kind in self.improvements:
                out["parameters"][kind]["improvement_percent"] = self.improvements[kind]
        if self.correlations:
            corr = np.asarray([c for c in self.correlations if np.isfinite(c)])
            if corr.size:
                out["alpha_m_correlation"] = {
                    "mean": float(corr.mean()),
                    "std": float(corr.std(ddof=0)),
                    "images": int(corr.size),
                }
        return out
