"""Patch-based reconstruction of QUS parametric images.

For every output pixel a window of the envelope field is handed to an
estimator. The default border policy is "shrink": windows are clipped at the
image edge and the estimator simply sees fewer samples, because mirrored
padding would duplicate samples and violate the i.i.d. assumption behind the
log-moment statistics. Mirror padding stays available for comparison.

Window moments are computed with a two-pass separable sliding sum in the
interior (identical window contents give bitwise-identical sums) and direct
summation in the border band.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from .errors import ConfigError, MalformedFileError, ParameterDomainError
from .estimators import ALPHA_CLAMP_DEFAULT, MIN_SAMPLES
from .mapfile import read_map
from .models import M_BRACKET, EnvelopeField

__all__ = ["ParametricImage", "patch_map", "apply_external_map", "PARAMETER_KINDS"]

PARAMETER_KINDS = ("log10_alpha", "m", "omega")
DEFAULT_PATCH = (32, 16)
DEFAULT_MIN_SAMPLES = 128


@dataclass(frozen=True, eq=False)
class ParametricImage:
    """Per-pixel parameter estimates with a validity mask.

    Invalid pixels hold NaN and are excluded from every downstream statistic.
    """

    values: np.ndarray = field(repr=False)
    valid_mask: np.ndarray = field(repr=False)
    parameter_kind: str

    def __post_init__(self):
        if self.parameter_kind not in PARAMETER_KINDS:
            raise ParameterDomainError(f"unknown parameter kind {self.parameter_kind!r}")
        vals = np.ascontiguousarray(self.values, dtype=np.float32)
        mask = np.ascontiguousarray(self.valid_mask, dtype=bool)
        if vals.ndim != 2 or mask.shape != vals.shape:
            raise ParameterDomainError("values and valid_mask must be matching 2-D arrays")
        vals = vals.copy()
        vals[~mask] = np.nan
        vals.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_values(cls, values: np.ndarray, kind: str) -> "ParametricImage":
        """Wrap raw values; NaN entries become the invalid mask."""
        vals = np.asarray(values, dtype=np.float32)
        return cls(values=vals, valid_mask=np.isfinite(vals), parameter_kind=kind)


def _window_bounds(n: int, size: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Half-open clipped window [i - size//2, i - size//2 + size) for each index."""
    start = idx - size // 2
    return np.clip(start, 0, n), np.clip(start + size, 0, n)


def _window_sums(arr: np.ndarray, patch: tuple[int, int]) -> np.ndarray:
    """Clipped-window sums of ``arr`` at every pixel (shrink border policy)."""
    h, w = patch
    rows, cols = arr.shape
    out = np.empty((rows, cols), dtype=np.float64)
    interior = rows >= h and cols >= w
    if interior:
        row_sums = sliding_window_view(arr, h, axis=0).sum(axis=-1)
        full = sliding_window_view(row_sums, w, axis=1).sum(axis=-1)
        r0, r1 = h // 2, h // 2 + rows - h + 1
        c0, c1 = w // 2, w // 2 + cols - w + 1
        out[r0:r1, c0:c1] = full
    else:
        r0 = r1 = c0 = c1 = 0
    rs, re = _window_bounds(rows, h, np.arange(rows))
    cs, ce = _window_bounds(cols, w, np.arange(cols))
    for r in range(rows):
        inside_r = interior and r0 <= r < r1
        for c in range(cols):
            if inside_r and c0 <= c < c1:
                continue
            out[r, c] = arr[rs[r] : re[r], cs[c] : ce[c]].sum()
    return out


def _solve_m_map(gap: np.ndarray, solve_mask: np.ndarray) -> np.ndarray:
    """Vectorized safeguarded Newton for log(m) - digamma(m) = gap on masked pixels.

    Pixels whose root falls outside the shape bracket come back saturated at
    the exact bracket edge so callers can flag them invalid.
    """
    m = np.full(gap.shape, np.nan)
    if not np.any(solve_mask):
        return m
    s = gap[solve_mask]
    lo = np.full(s.shape, M_BRACKET[0])
    hi = np.full(s.shape, M_BRACKET[1])
    below = np.log(lo) - special.digamma(lo) - s <= 0
    above = np.log(hi) - special.digamma(hi) - s >= 0
    x = np.clip((3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s), lo, hi)
    for _ in range(100):
        fx = np.log(x) - special.digamma(x) - s
        lo = np.where(fx > 0, x, lo)
        hi = np.where(fx > 0, hi, x)
        if np.all(np.abs(fx) < 1e-12):
            break
        nxt = x - fx / (1.0 / x - special.polygamma(1, x))
        bad = (nxt <= lo) | (nxt >= hi) | ~np.isfinite(nxt)
        x = np.where(bad, 0.5 * (lo + hi), np.where(np.abs(fx) < 1e-14, x, nxt))
    x = np.where(below, M_BRACKET[0], np.where(above, M_BRACKET[1], x))
    m[solve_mask] = x
    return m


def patch_map(
    field_or_values,
    patch: tuple[int, int] = DEFAULT_PATCH,
    estimator: str = "alpha",
    border: str = "shrink",
    min_samples: int = DEFAULT_MIN_SAMPLES,
    clamp: tuple[float, float] = ALPHA_CLAMP_DEFAULT,
    stride: int = 1,
) -> dict[str, ParametricImage]:
    """Estimate parameters in a sliding window around every pixel.

    Returns maps keyed by parameter kind: ``alpha`` gives {"log10_alpha"},
    ``nakagami`` gives {"m", "omega"}, ``both`` gives all three. A pixel is
    invalid when its window holds fewer than ``min_samples`` samples, the
    window is statistically degenerate, or the alpha inversion saturates its
    clamp. ``stride`` > 1 estimates on a subsampled grid and fills the rest
    by bilinear interpolation.
    """
    values = field_or_values.values if isinstance(field_or_values, EnvelopeField) else field_or_values
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ConfigError(f"field must be 2-D, got shape {values.shape}")
    if estimator not in ("alpha", "nakagami", "both"):
        raise ConfigError(f"unknown estimator {estimator!r}")
    if border not in ("shrink", "mirror"):
        raise ConfigError(f"unknown border policy {border!r}")
    h, w = patch
    rows, cols = values.shape
    if h < 4 or w < 4:
        raise ConfigError(f"patch {patch} below the 4x4 minimum")
    if h > rows or w > cols:
        raise ConfigError(f"patch {patch} exceeds field {rows}x{cols}")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ParameterDomainError("envelope values must be finite and >= 0")
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    min_samples = max(int(min_samples), MIN_SAMPLES)

    if stride > 1:
        return _strided(values, patch, estimator, border, min_samples, clamp, stride)

    if border == "mirror":
        pad_r, pad_c = h // 2, w // 2
        padded = np.pad(values, ((pad_r, h - 1 - pad_r), (pad_c, w - 1 - pad_c)), mode="reflect")
        inner = patch_map(padded, patch, estimator, "shrink", min_samples, clamp)
        return {
            kind: ParametricImage(
                values=img.values[pad_r : pad_r + rows, pad_c : pad_c + cols],
                valid_mask=img.valid_mask[pad_r : pad_r + rows, pad_c : pad_c + cols],
                parameter_kind=kind,
            )
            for kind, img in inner.items()
        }

    intensity = values * values
    nonzero = intensity > 0
    log_i = np.where(nonzero, np.log(np.where(nonzero, intensity, 1.0)), 0.0)
    i_log_i = intensity * log_i

    counts = _window_sums(np.ones_like(values), patch)
    n_nonzero = _window_sums(nonzero.astype(np.float64), patch)
    sum_i = _window_sums(intensity, patch)
    sum_log = _window_sums(log_i, patch)

    counts_r = np.round(counts)
    nz = np.round(n_nonzero)
    dropped = counts_r - nz
    usable = (counts_r >= min_samples) & (dropped <= 0.01 * counts_r) & (nz >= MIN_SAMPLES)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean_i = sum_i / nz
        mean_log = sum_log / nz
        gap = np.where(usable & (mean_i > 0), np.log(np.where(mean_i > 0, mean_i, 1.0)) - mean_log, np.nan)
    informative = usable & (gap > 1e-12)

    out: dict[str, ParametricImage] = {}
    if estimator in ("alpha", "both"):
        sum_ilog = _window_sums(i_log_i, patch)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_stat = sum_ilog / sum_i - mean_log
        ok = informative & (x_stat > 1.0 + 1e-6)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(ok, 1.0 / (x_stat - 1.0), np.nan)
        ok &= (alpha >= clamp[0]) & (alpha <= clamp[1])
        log10_alpha = np.where(ok, np.log10(np.where(ok, alpha, 1.0)), np.nan)
        out["log10_alpha"] = ParametricImage(
            values=log10_alpha.astype(np.float32), valid_mask=ok, parameter_kind="log10_alpha"
        )
    if estimator in ("nakagami", "both"):
        m = _solve_m_map(gap, informative)
        ok = informative & (m > M_BRACKET[0]) & (m < M_BRACKET[1])
        out["m"] = ParametricImage(values=m.astype(np.float32), valid_mask=ok, parameter_kind="m")
        omega = np.where(ok, mean_i, np.nan)
        out["omega"] = ParametricImage(
            values=omega.astype(np.float32), valid_mask=ok, parameter_kind="omega"
        )
    return out


def _strided(values, patch, estimator, border, min_samples, clamp, stride):
    rows, cols = values.shape
    grid_r = np.unique(np.append(np.arange(0, rows, stride), rows - 1))
    grid_c = np.unique(np.append(np.arange(0, cols, stride), cols - 1))
    dense = patch_map(values, patch, estimator, border, min_samples, clamp, stride=1)
    out = {}
    rr = np.arange(rows, dtype=float)
    cc = np.arange(cols, dtype=float)
    for kind, img in dense.items():
        coarse = img.values[np.ix_(grid_r, grid_c)].astype(np.float64)
        coarse_valid = img.valid_mask[np.ix_(grid_r, grid_c)]
        filled = np.where(coarse_valid, coarse, np.nanmean(coarse) if np.any(coarse_valid) else 0.0)
        tmp = np.empty((len(grid_r), cols))
        for i in range(len(grid_r)):
            tmp[i] = np.interp(cc, grid_c.astype(float), filled[i])
        full = np.empty((rows, cols), dtype=np.float32)
        for j in range(cols):
            full[:, j] = np.interp(rr, grid_r.astype(float), tmp[:, j])
        nearest_r = np.clip(np.round(rr / stride).astype(int), 0, len(grid_r) - 1)
        nearest_c = np.clip(np.round(cc / stride).astype(int), 0, len(grid_c) - 1)
        mask = coarse_valid[np.ix_(nearest_r, nearest_c)]
        out[kind] = ParametricImage(values=full, valid_mask=mask, parameter_kind=kind)
    return out


def apply_external_map(reference, path) -> dict[str, ParametricImage]:
    """Import externally produced parameter maps for evaluation.

    ``reference`` fixes the expected shape (an EnvelopeField, a 2-D array, or
    an ``(height, width)`` tuple). Channels named like known parameter kinds
    are wrapped as ParametricImage with validity derived from the NaN
    sentinel; all pixels are valid when no NaN is present.
    """
    if isinstance(reference, EnvelopeField):
        expected = (reference.height, reference.width)
    elif isinstance(reference, tuple):
        expected = reference
    else:
        arr = np.asarray(reference)
        expected = arr.shape
    data = read_map(Path(path))
    if (data.height, data.width) != tuple(expected):
        raise MalformedFileError(
            f"{path}: dimensions {data.height}x{data.width} do not match "
            f"expected {expected[0]}x{expected[1]}"
        )
    out = {}
    for name, channel in data.channels.items():
        if name in PARAMETER_KINDS:
            out[name] = ParametricImage.from_values(channel, name)
    if not out:
        raise MalformedFileError(
            f"{path}: no recognized parameter channels (have {sorted(data.channels)})"
        )
    return out
