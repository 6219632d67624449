"""Synthetic phantom corpus: random region shapes, per-region HK parameters,
per-pixel independent envelope samples, and aligned ground-truth maps.

Region shapes mix rotated ellipses with blobs cut from Gaussian-smoothed
white noise. A blob is thresholded at the quantile that keeps exactly its
target pixel area (drawn uniformly from the configured area range), with a
radial bias toward a random center so the kept pixels cluster rather than
scatter. Later shapes occlude earlier ones; the uncovered remainder is
region 0 (background), which receives parameters like any other region.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from ._version import __version__
from .errors import ConfigError, ParameterDomainError
from .mapfile import ImageRecord, Manifest, write_map
from .models import EnvelopeField, HKParams, nakagami_moment_m, nakagami_pseudo_m
from .rng import RngState, derive_image_seed

__all__ = [
    "GenerationConfig",
    "RegionMap",
    "GroundTruthMaps",
    "PhantomSample",
    "generate_region_map",
    "assign_region_params",
    "synthesize_field",
    "plan_dataset",
    "generate_dataset",
    "TRUTH_CHANNELS",
]

TRUTH_CHANNELS = ("log10_alpha", "m", "sigma", "region_id")


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs for phantom synthesis. Ranges are toolkit defaults, not published values."""

    height: int = 256
    width: int = 128
    shape_count: tuple[int, int] = (1, 6)
    ellipse_fraction: float = 0.5
    axis_range: tuple[float, float] = (8.0, 48.0)  # full ellipse axis lengths, px
    area_range: tuple[int, int] = (40, 2000)  # per-shape pixel area bounds
    blob_smoothing: tuple[float, float] = (4.0, 12.0)  # correlation length, px
    log10_alpha_range: tuple[float, float] = (-0.6, 1.0)
    sigma_range: tuple[float, float] = (0.5, 2.0)
    epsilon: float = 0.0
    truth_m_mapping: str = "mle"  # "mle" (pseudo-m fixed point) or "moment"

    def __post_init__(self):
        if self.height < 8 or self.width < 8:
            raise ConfigError(f"image size {self.height}x{self.width} too small")
        if not 0 <= self.shape_count[0] <= self.shape_count[1]:
            raise ConfigError(f"bad shape count range {self.shape_count}")
        if not 0 < self.axis_range[0] <= self.axis_range[1]:
            raise ConfigError(f"bad axis range {self.axis_range}")
        if self.axis_range[1] >= min(self.height, self.width):
            raise ConfigError(
                f"max axis {self.axis_range[1]} does not fit inside {self.height}x{self.width}"
            )
        if not 1 <= self.area_range[0] <= self.area_range[1]:
            raise ConfigError(f"bad area range {self.area_range}")
        if self.area_range[1] > self.height * self.width:
            raise ConfigError("max shape area exceeds the image")
        if not 0.0 <= self.ellipse_fraction <= 1.0:
            raise ConfigError(f"ellipse fraction must be in [0, 1], got {self.ellipse_fraction}")
        if not self.log10_alpha_range[0] <= self.log10_alpha_range[1]:
            raise ConfigError(f"bad log10 alpha range {self.log10_alpha_range}")
        if not 0 < self.sigma_range[0] <= self.sigma_range[1]:
            raise ConfigError(f"bad sigma range {self.sigma_range}")
        if self.epsilon != 0.0:
            raise ConfigError("only epsilon = 0 phantoms are supported")
        if self.truth_m_mapping not in ("mle", "moment"):
            raise ConfigError(f"unknown truth m mapping {self.truth_m_mapping!r}")

    def truth_m(self, alpha):
        return nakagami_pseudo_m(alpha) if self.truth_m_mapping == "mle" else nakagami_moment_m(alpha)


@dataclass(frozen=True, eq=False)
class RegionMap:
    """Per-pixel region labels (0 = background) plus each shape's as-drawn area."""

    labels: np.ndarray = field(repr=False)
    shape_areas: tuple[int, ...] = ()

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.int32)
        if lab.ndim != 2:
            raise ParameterDomainError(f"labels must be 2-D, got shape {lab.shape}")
        if lab.min() < 0:
            raise ParameterDomainError("labels must be >= 0")
        present = np.unique(lab)
        if not np.array_equal(present, np.arange(len(present))):
            raise ParameterDomainError("labels must be contiguous 0..K-1 with every label present")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def region_count(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(frozen=True, eq=False)
class GroundTruthMaps:
    """Pixelwise ground truth, piecewise constant on regions.

    Kept in float64 in memory; persistence casts to the float32 payload type.
    """

    log10_alpha: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    region_id: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = self.log10_alpha.shape
        for name in ("log10_alpha", "m", "sigma", "region_id"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ParameterDomainError(f"truth map {name} shape {arr.shape} != {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def as_channels(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TRUTH_CHANNELS}


@dataclass(frozen=True)
class PhantomSample:
    """One synthesized image: envelope field, truth maps, and its provenance."""

    envelope: EnvelopeField
    truth: GroundTruthMaps
    seed: int
    params: tuple[HKParams, ...]


def _rasterize_ellipse(labels: np.ndarray, value: int, cy: float, cx: float,
                       a: float, b: float, theta: float) -> int:
    h, w = labels.shape
    rr, cc = np.ogrid[0:h, 0:w]
    dy = rr - cy
    dx = cc - cx
    ct, st = math.cos(theta), math.sin(theta)
    u = dx * ct + dy * st
    v = -dx * st + dy * ct
    mask = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    labels[mask] = value
    return int(np.count_nonzero(mask))


def _rasterize_blob(labels: np.ndarray, value: int, g: np.random.Generator,
                    config: GenerationConfig) -> int:
    h, w = labels.shape
    area = int(round(g.uniform(config.area_range[0], config.area_range[1])))
    area = min(area, h * w)
    corr = g.uniform(*config.blob_smoothing)
    cy = g.uniform(0.0, h - 1.0)
    cx = g.uniform(0.0, w - 1.0)
    noise = gaussian_filter(g.standard_normal((h, w)), corr, mode="reflect")
    noise = (noise - noise.mean()) / max(noise.std(), 1e-12)
    radius = max(math.sqrt(area / math.pi), 1.0)
    rr, cc = np.ogrid[0:h, 0:w]
    bias = 1.5 * np.exp(-((rr - cy) ** 2 + (cc - cx) ** 2) / (2.0 * radius**2))
    scores = (noise + bias).ravel()
    keep = np.argpartition(scores, scores.size - area)[scores.size - area :]
    mask = np.zeros(h * w, dtype=bool)
    mask[keep] = True
    labels[mask.reshape(h, w)] = value
    return area


def generate_region_map(config: GenerationConfig, rng: RngState) -> RegionMap:
    """Draw random shapes onto a background; later shapes occlude earlier ones.

    Labels are compacted after drawing so fully occluded shapes leave no gap;
    ``shape_areas`` records each shape's rasterized area before occlusion.
    """
    g = rng.generator()
    h, w = config.height, config.width
    labels = np.zeros((h, w), dtype=np.int32)
    lo, hi = config.shape_count
    n_shapes = int(g.integers(lo, hi + 1)) if hi > 0 else 0
    areas = []
    for k in range(n_shapes):
        if g.random() < config.ellipse_fraction:
            ax_a = g.uniform(*config.axis_range) / 2.0
            ax_b = g.uniform(*config.axis_range) / 2.0
            theta = g.uniform(0.0, math.pi)
            margin = math.ceil(max(ax_a, ax_b)) + 1
            cy = g.uniform(margin, h - 1 - margin)
            cx = g.uniform(margin, w - 1 - margin)
            areas.append(_rasterize_ellipse(labels, k + 1, cy, cx, ax_a, ax_b, theta))
        else:
            areas.append(_rasterize_blob(labels, k + 1, g, config))
    present = np.unique(labels)
    remap = np.zeros(int(labels.max()) + 1, dtype=np.int32)
    remap[present] = np.arange(len(present), dtype=np.int32)
    return RegionMap(labels=remap[labels], shape_areas=tuple(areas))


def assign_region_params(region_map: RegionMap, config: GenerationConfig,
                         rng: RngState) -> tuple[HKParams, ...]:
    """Draw one HKParams per region id (background included), in id order."""
    g = rng.generator()
    params = []
    for _ in range(region_map.region_count):
        log10_alpha = g.uniform(*config.log10_alpha_range)
        sigma = g.uniform(*config.sigma_range)
        params.append(HKParams(epsilon=config.epsilon, sigma=sigma, alpha=10.0**log10_alpha))
    return tuple(params)


def synthesize_field(region_map: RegionMap, params: tuple[HKParams, ...],
                     config: GenerationConfig, rng: RngState) -> PhantomSample:
    """Fill every pixel with an independent HK draw from its region's parameters."""
    from .models import sample_hk  # local import keeps module init cheap

    if len(params) != region_map.region_count:
        raise ParameterDomainError(
            f"{len(params)} parameter sets for {region_map.region_count} regions"
        )
    labels = region_map.labels
    envelope = np.empty(labels.shape, dtype=np.float64)
    log10_alpha = np.empty(labels.shape, dtype=np.float64)
    m_map = np.empty(labels.shape, dtype=np.float64)
    sigma_map = np.empty(labels.shape, dtype=np.float64)
    for rid, p in enumerate(params):
        mask = labels == rid
        count = int(np.count_nonzero(mask))
        envelope[mask] = sample_hk(p, count, rng.child(rid))
        log10_alpha[mask] = math.log10(p.alpha)
        m_map[mask] = config.truth_m(p.alpha)
        sigma_map[mask] = p.sigma
    truth = GroundTruthMaps(
        log10_alpha=log10_alpha,
        m=m_map,
        sigma=sigma_map,
        region_id=labels.astype(np.float64),
    )
    return PhantomSample(
        envelope=EnvelopeField(envelope.astype(np.float32)),
        truth=truth,
        seed=rng.seed,
        params=params,
    )


def make_sample(config: GenerationConfig, seed: int) -> PhantomSample:
    """Synthesize one phantom from a single 64-bit seed (substreams 0..2)."""
    base = RngState(seed)
    region_map = generate_region_map(config, base.child(0))
    params = assign_region_params(region_map, config, base.child(1))
    return synthesize_field(region_map, params, config, base.child(2))


# --- dataset generation --------------------------------------------------------


def plan_dataset(count: int, base_seed: int, splits: tuple[int, ...] | None) -> list[ImageRecord]:
    """Deterministic per-image seeds, split tags, and file paths for a dataset.

    ``splits`` gives consecutive counts for (train, val[, test]); any
    remainder becomes test. Pure function of its arguments, which is what
    makes generation independent of worker count.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    names = ("train", "val", "test")
    if splits is None:
        splits = (count,)
    if len(splits) > 3 or any(s < 0 for s in splits):
        raise ConfigError(f"bad split spec {splits}")
    if sum(splits) > count:
        raise ConfigError(f"splits {splits} sum past count {count}")
    bounds = np.cumsum(splits)
    records = []
    for i in range(count):
        tag = names[int(np.searchsorted(bounds, i, side="right"))] if i < bounds[-1] else "test"
        records.append(
            ImageRecord(
                index=i,
                seed=derive_image_seed(base_seed, i),
                split=tag,
                envelope=f"env/{i:05d}.qusf",
                truth=f"truth/{i:05d}.qusf",
            )
        )
    return records


def _write_one(args) -> int:
    config, record, out_dir = args
    sample = make_sample(config, record.seed)
    write_map(Path(out_dir) / record.envelope, {"envelope": sample.envelope.values})
    write_map(Path(out_dir) / record.truth, sample.truth.as_channels())
    return record.index


def generate_dataset(config: GenerationConfig, count: int, base_seed: int, out_dir,
                     splits: tuple[int, ...] | None = None, jobs: int = 1) -> Manifest:
    """Synthesize ``count`` phantoms under ``out_dir`` and write the manifest.

    Output bytes depend only on (config, count, base_seed, splits); ``jobs``
    parallelizes across images without changing results.
    """
    out_dir = Path(out_dir)
    records = plan_dataset(count, base_seed, splits)
    (out_dir / "env").mkdir(parents=True, exist_ok=True)
    (out_dir / "truth").mkdir(parents=True, exist_ok=True)
    work = [(config, rec, out_dir) for rec in records]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_write_one, work, chunksize=8))
    else:
        for item in work:
            _write_one(item)
    manifest = Manifest(
        config={"base_seed": base_seed, "count": count,
                "splits": list(splits) if splits else None, **asdict(config)},
        images=records,
        toolkit_version=__version__,
    )
    manifest.save(out_dir)
    return manifest
