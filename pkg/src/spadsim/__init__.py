from .augment import AugmentRanges, AugmentSpec, apply_affine, sample_augment_specs
from .dataset import (
    build_paired_dataset,
    ingest_scene_dir,
    summarize_manifest,
    verify_manifest,
)
from .flux_recover import BitStack, estimate_flux_from_bits, estimate_flux_from_count
from .frames import (
    BinaryFrame,
    FluxMap,
    auto_exposure,
    intensity_to_flux,
    synthesize_binary_frame,
    synthesize_burst,
    synthesize_count_frame,
)
from .metrics import MetricsReport, evaluate_dirs, psnr, ssim
from .photon_model import bit_probability, expected_count, variance_count
from .sampler import (
    RngKey,
    SampleMode,
    derive_stream,
    sample_count_exact,
    sample_count_gaussian,
)
from .sensor import SensorConfig

__name__ = "spadsim"
__version__ = "0.1.0"
__all__ = [
    "AugmentRanges",
    "AugmentSpec",
    "BinaryFrame",
    "BitStack",
    "FluxMap",
    "MetricsReport",
    "RngKey",
    "SampleMode",
    "SensorConfig",
    "apply_affine",
    "auto_exposure",
    "bit_probability",
    "build_paired_dataset",
    "derive_stream",
    "estimate_flux_from_bits",
    "estimate_flux_from_count",
    "evaluate_dirs",
    "expected_count",
    "ingest_scene_dir",
    "intensity_to_flux",
    "psnr",
    "sample_augment_specs",
    "sample_count_exact",
    "sample_count_gaussian",
    "ssim",
    "summarize_manifest",
    "synthesize_binary_frame",
    "synthesize_burst",
    "synthesize_count_frame",
    "variance_count",
    "verify_manifest",
]
