"""Forward 3D warping of an image to a target pose via its depth map.

Each valid source pixel is unprojected with its depth, moved by the
relative pose, reprojected, and point-splatted onto the nearest target
pixel (round half up). When several sources land on the same target the
one with the smallest target-space depth wins; equal depths are resolved
toward the smaller source linear index, so results are deterministic and
independent of evaluation order. Uncovered target pixels are exactly
zero in the image and invalid in the z-buffer.

Input images are expected to contain no exact-zero pixels (the image
loader lifts them); that keeps "pixel == 0" equivalent to "pixel not
covered" downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import CameraIntrinsics, CameraPose, project, unproject

__all__ = ["DepthMap", "WarpResult", "forward_warp", "warp_batch"]


@dataclass
class DepthMap:
    """Per-pixel depth in positive scene units with a validity mask."""

    values: np.ndarray  # (H, W) float64
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2 or self.values.shape != self.valid.shape:
            raise ValueError("values and valid must be matching 2D arrays")
        if np.any(self.valid & ~(np.isfinite(self.values) & (self.values > 0))):
            raise ValueError("valid depth entries must be finite and positive")

    @classmethod
    def from_values(cls, values) -> "DepthMap":
        """Mark non-positive or non-finite entries invalid."""
        v = np.asarray(values, dtype=np.float64)
        return cls(v, np.isfinite(v) & (v > 0))

    @property
    def shape(self):
        return self.values.shape


@dataclass
class WarpResult:
    """Warped image (holes exactly 0), its z-buffer, and fill fraction."""

    image: np.ndarray  # (H, W, C), holes exactly 0.0
    zbuffer: DepthMap  # holes invalid
    coverage: float


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"image must have shape (H, W, C) with C in {{1, 3}}, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image values must be finite")
    return img


def forward_warp(
    img: np.ndarray,
    depth: DepthMap,
    intrinsics: CameraIntrinsics,
    rel: CameraPose,
) -> WarpResult:
    """Warp ``img`` from the source view to the view reached by ``rel``.

    ``rel`` maps source-camera coordinates to target-camera coordinates.
    An all-invalid depth map yields a zero image with coverage 0.
    """
    img = _check_image(img)
    h, w, _ = img.shape
    if depth.shape != (h, w):
        raise ValueError(f"image {img.shape[:2]} and depth {depth.shape} dimensions differ")
    if (intrinsics.height, intrinsics.width) != (h, w):
        raise ValueError("intrinsics raster extents do not match the image")

    out = np.zeros_like(img)
    zvals = np.zeros((h, w), dtype=np.float64)
    zvalid = np.zeros((h, w), dtype=bool)

    sy, sx = np.nonzero(depth.valid)
    if sy.size:
        d = depth.values[sy, sx]
        pts = unproject(np.stack([sx, sy], axis=-1), d, intrinsics)
        cam = rel.transform(pts)
        front = cam[:, 2] < 0
        src = (sy * w + sx)[front]
        if src.size:
            px, td = project(cam[front], intrinsics)
            iu = np.floor(px[:, 0] + 0.5).astype(np.int64)
            iv = np.floor(px[:, 1] + 0.5).astype(np.int64)
            ok = (iu >= 0) & (iu < w) & (iv >= 0) & (iv < h)
            lin, td, src = iv[ok] * w + iu[ok], td[ok], src[ok]
            # smallest depth wins per target, ties to the smaller source index
            order = np.lexsort((src, td, lin))
            lin, td, src = lin[order], td[order], src[order]
            keep = np.ones(lin.size, dtype=bool)
            keep[1:] = lin[1:] != lin[:-1]
            lin, td, src = lin[keep], td[keep], src[keep]
            out.reshape(-1, img.shape[2])[lin] = img.reshape(-1, img.shape[2])[src]
            zvals.reshape(-1)[lin] = td
            zvalid.reshape(-1)[lin] = True

    return WarpResult(
        image=out,
        zbuffer=DepthMap(zvals, zvalid),
        coverage=float(zvalid.mean()),
    )


def warp_batch(
    img: np.ndarray,
    depth: DepthMap,
    intrinsics: CameraIntrinsics,
    poses: Sequence[CameraPose],
) -> list[WarpResult]:
    """forward_warp for every pose, order preserved."""
    return [forward_warp(img, depth, intrinsics, pose) for pose in poses]
