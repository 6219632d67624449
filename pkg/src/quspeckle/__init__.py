"""quspeckle: synthetic Homodyned-K ultrasound speckle and QUS parametric imaging.

The package covers the loop of a speckle-statistics study: draw envelope
fields with spatially varying HK parameters, reconstruct parametric images
with patch-based baseline estimators, persist everything in a flat binary
format an external trainer can consume, and score predictions with RRMSE and
correlation metrics.
"""

from ._version import __version__
from .errors import (
    AccuracyError,
    ConfigError,
    DegenerateInputError,
    EmptyDomainError,
    MalformedFileError,
    ParameterDomainError,
)
from .estimators import (
    Diagnostic,
    EstimateResult,
    estimate_alpha,
    nakagami_mle,
    u_statistic,
    x_statistic,
)
from .imaging import ParametricImage, apply_external_map, patch_map
from .mapfile import Manifest, MapData, load_manifest, read_map, render_pgm, write_map
from .metrics import frame_average, improvement_percent, map_correlation, rrmse
from .models import (
    EnvelopeField,
    HKParams,
    NakagamiParams,
    QuadSpec,
    nakagami_moment_m,
    nakagami_pseudo_m,
    pdf_hk,
    pdf_nakagami,
    sample_hk,
    sample_nakagami,
)
from .phantom import (
    GenerationConfig,
    GroundTruthMaps,
    PhantomSample,
    RegionMap,
    assign_region_params,
    generate_dataset,
    generate_region_map,
    synthesize_field,
)
from .rng import RngState, derive_image_seed

__all__ = [
    "__version__",
    "AccuracyError",
    "ConfigError",
    "DegenerateInputError",
    "Diagnostic",
    "EmptyDomainError",
    "EnvelopeField",
    "EstimateResult",
    "GenerationConfig",
    "GroundTruthMaps",
    "HKParams",
    "MalformedFileError",
    "Manifest",
    "MapData",
    "NakagamiParams",
    "ParameterDomainError",
    "ParametricImage",
    "PhantomSample",
    "QuadSpec",
    "RegionMap",
    "RngState",
    "apply_external_map",
    "assign_region_params",
    "derive_image_seed",
    "estimate_alpha",
    "frame_average",
    "generate_dataset",
    "generate_region_map",
    "improvement_percent",
    "load_manifest",
    "map_correlation",
    "nakagami_mle",
    "nakagami_moment_m",
    "nakagami_pseudo_m",
    "patch_map",
    "pdf_hk",
    "pdf_nakagami",
    "read_map",
    "render_pgm",
    "rrmse",
    "sample_hk",
    "sample_nakagami",
    "synthesize_field",
    "u_statistic",
    "write_map",
    "x_statistic",
]
