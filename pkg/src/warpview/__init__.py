"""Depth-based view warping toolkit.

Forward 3D warping with z-buffering, IoU-driven adaptive reference-range
selection, warp-guided masked batch self-attention, pose-aware spectral
noise re-initialization, and a view-consistency metric framework, plus
file formats and a CLI tying them together. Pretrained networks (depth
estimators, latent encoders, perceptual features) stay behind pluggable
interfaces.
"""

from .attention import (
    AttentionBatch,
    DropoutConfig,
    batch_self_attention,
    resample_mask,
    warp_guided_attention,
)
from .geometry import (
    BehindCameraError,
    CameraIntrinsics,
    CameraPose,
    OrbitSpec,
    compose,
    make_orbit_poses,
    project,
    relative_pose,
    rotation_about_axis,
    unproject,
)
from .metrics import (
    ConsistencyReport,
    FeatureDistanceProvider,
    PixelDistanceProvider,
    RotationMetricReport,
    angular_consistency,
    camera_accuracy_report,
    frobenius_rotation,
    pad_missing_poses,
    rotation_angle_difference,
    sequence_consistency,
)
from .noiseinit import (
    NoiseSchedule,
    PatchMeanEncoder,
    SpectralMixConfig,
    ddpm_forward,
    fill_missing,
    gaussian_lowpass,
    pani_pipeline,
    reinitialize_noise,
)
from .numerics import derive_stream, fft2, ifft2, randn, rng_stream, softmax_rows
from .scene import make_checkerboard_scene
from .viewrange import IoUMatrix, RangeSelection, adaptive_range, iou_matrix, region_mask
from .warp import DepthMap, WarpResult, forward_warp, warp_batch

__version__ = "0.1.0"

__all__ = [
    "AttentionBatch",
    "BehindCameraError",
    "CameraIntrinsics",
    "CameraPose",
    "ConsistencyReport",
    "DepthMap",
    "DropoutConfig",
    "FeatureDistanceProvider",
    "IoUMatrix",
    "NoiseSchedule",
    "OrbitSpec",
    "PatchMeanEncoder",
    "PixelDistanceProvider",
    "RangeSelection",
    "RotationMetricReport",
    "SpectralMixConfig",
    "WarpResult",
    "adaptive_range",
    "angular_consistency",
    "batch_self_attention",
    "camera_accuracy_report",
    "compose",
    "ddpm_forward",
    "derive_stream",
    "fft2",
    "fill_missing",
    "forward_warp",
    "frobenius_rotation",
    "gaussian_lowpass",
    "ifft2",
    "iou_matrix",
    "make_checkerboard_scene",
    "make_orbit_poses",
    "pad_missing_poses",
    "pani_pipeline",
    "project",
    "randn",
    "region_mask",
    "reinitialize_noise",
    "relative_pose",
    "resample_mask",
    "rng_stream",
    "rotation_about_axis",
    "rotation_angle_difference",
    "sequence_consistency",
    "softmax_rows",
    "unproject",
    "warp_batch",
    "warp_guided_attention",
]
