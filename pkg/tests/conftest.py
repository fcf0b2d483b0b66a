"""Shared test helpers: independent oracles and random inputs."""

from __future__ import annotations

import math

import numpy as np

from warpview.geometry import CameraIntrinsics, CameraPose
from warpview.warp import DepthMap


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation from a normalized quaternion."""
    q = rng.standard_normal(4)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def naive_forward_warp(img, depth: DepthMap, intrinsics: CameraIntrinsics, rel: CameraPose):
    """Reference forward warp: explicit per-pixel loop with a z-test.

    Independent of the vectorized implementation: source pixels are
    visited one at a time in raster order and pushed through the
    documented formulas with plain Python floats (IEEE doubles, the
    same rounding as numpy):

        unproject:  x = (u - cx) * d / fx,  y = (cy - v) * d / fy,  z = -d
        transform:  row-by-row R @ p + t
        project:    u' = cx + fx * (x / td),  v' = cy - fy * (y / td)
        splat:      floor(. + 0.5), nearest target depth wins, equal
                    depths keep the earlier (smaller linear index) source

    Returns (image, zvalues, zvalid, coverage).
    """
    h, w, _ = img.shape
    out = np.zeros_like(img)
    zvals = np.zeros((h, w))
    zvalid = np.zeros((h, w), dtype=bool)
    fx, fy, cx, cy = intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy
    r = [[float(v) for v in row] for row in rel.rotation]
    t = [float(v) for v in rel.translation]
    dvals = depth.values.tolist()
    dvalid = depth.valid.tolist()
    for sy in range(h):
        for sx in range(w):
            if not dvalid[sy][sx]:
                continue
            d = dvals[sy][sx]
            x = (sx - cx) * d / fx
            y = (cy - sy) * d / fy
            z = -d
            tx = r[0][0] * x + r[0][1] * y + r[0][2] * z + t[0]
            ty = r[1][0] * x + r[1][1] * y + r[1][2] * z + t[1]
            tz = r[2][0] * x + r[2][1] * y + r[2][2] * z + t[2]
            if tz >= 0:
                continue
            td = -tz
            iu = math.floor(cx + fx * (tx / td) + 0.5)
            iv = math.floor(cy - fy * (ty / td) + 0.5)
            if not (0 <= iu < w and 0 <= iv < h):
                continue
            if zvalid[iv, iu] and zvals[iv, iu] <= td:
                continue
            out[iv, iu] = img[sy, sx]
            zvals[iv, iu] = td
            zvalid[iv, iu] = True
    return out, zvals, zvalid, float(zvalid.mean())


def random_scene(rng: np.random.Generator, size: int = 16):
    """Random image, random valid depth in [0.5, 4], matching intrinsics."""
    img = 0.05 + 0.9 * rng.random((size, size, 3))
    depth = DepthMap.from_values(0.5 + 3.5 * rng.random((size, size)))
    intrinsics = CameraIntrinsics(
        fx=float(size),
        fy=float(size),
        cx=(size - 1) / 2.0,
        cy=(size - 1) / 2.0,
        width=size,
        height=size,
    )
    return img, depth, intrinsics
