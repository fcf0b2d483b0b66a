"""Pinhole camera model, rigid camera poses, and orbit trajectories.

Conventions, fixed once for the whole package:

* Camera frames are OpenGL style: the camera looks down -z, +y is up,
  +x is right. A point at depth ``d`` in front of the camera has
  ``z = -d``.
* Pixel coordinates: ``u`` grows rightward and ``v`` grows downward,
  so ``u = cx + fx * x / d`` and ``v = cy - fy * y / d`` for a
  camera-frame point ``(x, y, -d)``.
* ``CameraPose`` stores the world-to-camera map ``p_cam = R @ p + t``.

The OpenCV convention (+z forward, +y down) differs by a sign flip of
the camera y and z axes; pose files in that convention are converted on
ingest (see ``warpview.io``).

``CameraPose`` does not revalidate orthonormality on every construction;
loaders check rotations at their ingest tolerance and generated poses
are covered by tests. Pose transforms use explicit componentwise
arithmetic (no BLAS) so that scalar and vectorized evaluation of the
same points is bit-identical, which the warp oracle tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BehindCameraError",
    "CameraIntrinsics",
    "CameraPose",
    "OrbitSpec",
    "compose",
    "make_orbit_poses",
    "project",
    "relative_pose",
    "rotation_about_axis",
    "unproject",
    "validate_rotation",
]


class BehindCameraError(ValueError):
    """Raised when a point with z >= 0 is projected (behind an OpenGL camera)."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics with raster extents, all in pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the raster")


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform (OpenGL camera convention)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(-1)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {t.shape}")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply the pose to points of shape (..., 3)."""
        p = np.asarray(points, dtype=np.float64)
        if p.shape[-1] != 3:
            raise ValueError(f"points must have shape (..., 3), got {p.shape}")
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r, t = self.rotation, self.translation
        out = np.stack(
            np.broadcast_arrays(
                r[0, 0] * x + r[0, 1] * y + r[0, 2] * z + t[0],
                r[1, 0] * x + r[1, 1] * y + r[1, 2] * z + t[1],
                r[2, 0] * x + r[2, 1] * y + r[2, 2] * z + t[2],
            ),
            axis=-1,
        )
        return out

    def inverse(self) -> "CameraPose":
        rt = self.rotation.T
        return CameraPose(rt, -(rt @ self.translation))

    def camera_center(self) -> np.ndarray:
        """Camera position in the world frame."""
        return -(self.rotation.T @ self.translation)


def validate_rotation(r: np.ndarray, tol: float) -> float:
    """Check orthonormality and det(+1) of a rotation matrix.

    Returns the observed deviation; raises ValueError if it exceeds
    ``tol``.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    dev = float(np.abs(r.T @ r - np.eye(3)).max())
    det_dev = abs(float(np.linalg.det(r)) - 1.0)
    worst = max(dev, det_dev)
    if worst > tol:
        raise ValueError(f"matrix is not a rotation within {tol:g} (deviation {worst:g})")
    return worst


def compose(first: CameraPose, second: CameraPose) -> CameraPose:
    """Pose applying ``first`` and then ``second``."""
    return CameraPose(
        second.rotation @ first.rotation,
        second.rotation @ first.translation + second.translation,
    )


def relative_pose(a: CameraPose, b: CameraPose) -> CameraPose:
    """The pose ``rel`` with compose(a, rel) == b, i.e. frame-a to frame-b."""
    return compose(a.inverse(), b)


def rotation_about_axis(axis, angle_rad: float) -> np.ndarray:
    """Rotation matrix for ``angle_rad`` about ``axis`` (Rodrigues form)."""
    a = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise ValueError("axis must be nonzero")
    x, y, z = a / norm
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


def unproject(pixels, depth, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Lift pixel coordinates with depth into the camera frame.

    ``pixels`` has shape (..., 2) as (u, v); ``depth`` broadcasts
    against it and must be strictly positive. The result has shape
    (..., 3) with z = -depth.
    """
    px = np.asarray(pixels, dtype=np.float64)
    if px.shape[-1] != 2:
        raise ValueError(f"pixels must have shape (..., 2), got {px.shape}")
    d = np.asarray(depth, dtype=np.float64)
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise ValueError("depth must be finite and positive")
    u, v = px[..., 0], px[..., 1]
    x = (u - intrinsics.cx) * d / intrinsics.fx
    y = (intrinsics.cy - v) * d / intrinsics.fy
    z = -d
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def project(points, intrinsics: CameraIntrinsics):
    """Project camera-frame points to (pixels, depth).

    Points must satisfy z < 0 (in front of the camera); otherwise a
    ``BehindCameraError`` is raised. Returned pixels may lie outside the
    raster; clipping is the caller's job. Depth is -z > 0.
    """
    p = np.asarray(points, dtype=np.float64)
    if p.shape[-1] != 3:
        raise ValueError(f"points must have shape (..., 3), got {p.shape}")
    z = p[..., 2]
    if np.any(z >= 0):
        raise BehindCameraError("point with z >= 0 cannot be projected")
    d = -z
    u = intrinsics.cx + intrinsics.fx * (p[..., 0] / d)
    v = intrinsics.cy - intrinsics.fy * (p[..., 1] / d)
    return np.stack(np.broadcast_arrays(u, v), axis=-1), d


@dataclass(frozen=True)
class OrbitSpec:
    """Yaw orbit of viewpoints around a look-at center.

    ``count`` poses span yaw in [-half_angle_deg, +half_angle_deg] at
    distance ``radius`` from the center; for an odd count the middle
    pose is the identity (the input view).
    """

    count: int
    radius: float = 1.0
    half_angle_deg: float = 30.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if not (0 <= self.half_angle_deg < 180):
            raise ValueError("half_angle_deg must lie in [0, 180)")


def make_orbit_poses(spec: OrbitSpec) -> list[CameraPose]:
    """Generate orbit poses relative to the central (input) view.

    The world frame coincides with the input camera frame; the orbit
    center is the look-at point at (0, 0, -radius). Every camera sits on
    the circle of the given radius around that center in the y = 0 plane
    and looks at it. Yaw values are symmetric about zero, so for an odd
    count the middle pose is exactly the identity.
    """
    n = spec.count
    if n == 1:
        yaw_deg = np.zeros(1)
    else:
        step = 2.0 * spec.half_angle_deg / (n - 1)
        yaw_deg = (np.arange(n) - (n - 1) / 2.0) * step
    r = spec.radius
    poses = []
    for th in np.deg2rad(yaw_deg):
        s, c = np.sin(th), np.cos(th)
        position = np.array([r * s, 0.0, r * c - r])
        rotation = np.array(
            [
                [c, 0.0, -s],
                [0.0, 1.0, 0.0],
                [s, 0.0, c],
            ]
        )
        poses.append(CameraPose(rotation, -(rotation @ position)))
    return poses
