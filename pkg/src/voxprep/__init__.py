"""voxprep: volumetric preprocessing for self-supervised learning on 3D CT/MRI.

Foreground masks, anonymization simulation/detection, Dice/HD95 evaluation,
and foreground-constrained patch sampling with loss masks.
"""

__version__ = "0.1.0"

from .anon_detect import (
    DetectionMode,
    DetectionParams,
    DetectionResult,
    blur_energy_map,
    detect_anonymization,
    detect_zero_regions,
)
from .anon_sim import (
    AnonKind,
    AnonResult,
    AnonScheme,
    apply_anonymization,
    build_face_region,
    gaussian_blur,
)
from .errors import VoxprepError
from .foreground import (
    ForegroundParams,
    KeepComponents,
    PaddingReport,
    ThresholdMode,
    detect_constant_padding,
    otsu_threshold,
    segment_foreground,
)
from .metrics import MetricField, SegMetrics, StatsSummary, aggregate_stats, dice, hd95
from .morphology import (
    Connectivity,
    LabeledComponents,
    MorphOp,
    StructuringElement,
    binary_morph,
    connected_components,
    distance_transform,
    extract_surface,
    fill_holes,
)
from .nifti_io import NiftiHeader, parse_header, read_mask, read_volume, write_mask, write_volume
from .sampler import PatchSpec, SampledPatch, counter_rand, make_loss_mask, sample_patches
from .volume import (
    Mask3D,
    Modality,
    Volume3D,
    VolumeStats,
    volume_stats,
    voxel_to_world,
    zscore_normalize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
