"""Built-in synthetic test scene: a checkerboard plane at constant depth.

Generated procedurally so every test and CLI walkthrough runs offline
and reproducibly. A mild diagonal brightness ramp keeps neighboring
pixels distinct (useful for catching index bugs) and all values stay
strictly inside (0, 1), so no pixel collides with the warp-hole value.
"""

from __future__ import annotations

import numpy as np

from .geometry import CameraIntrinsics
from .warp import DepthMap

__all__ = ["make_checkerboard_scene"]


def make_checkerboard_scene(
    size: int = 64, depth: float = 2.0, square: int = 8
) -> tuple[np.ndarray, DepthMap, CameraIntrinsics]:
    """Checkerboard image, constant depth map, and matching intrinsics.

    The camera is centered on the raster with focal length ``size``
    pixels; the plane is fronto-parallel at the given depth.
    """
    if size < 2 or square < 1:
        raise ValueError("size must be >= 2 and square >= 1")
    if depth <= 0:
        raise ValueError("depth must be positive")
    ys, xs = np.mgrid[0:size, 0:size]
    checker = ((ys // square + xs // square) % 2).astype(np.float64)
    dark = np.array([0.20, 0.30, 0.45])
    light = np.array([0.85, 0.75, 0.55])
    img = np.where(checker[..., None] > 0, light, dark)
    ramp = 0.9 + 0.1 * (xs + ys) / (2.0 * (size - 1))
    img = img * ramp[..., None]
    depth_map = DepthMap.from_values(np.full((size, size), float(depth)))
    intrinsics = CameraIntrinsics(
        fx=float(size),
        fy=float(size),
        cx=(size - 1) / 2.0,
        cy=(size - 1) / 2.0,
        width=size,
        height=size,
    )
    return img, depth_map, intrinsics
