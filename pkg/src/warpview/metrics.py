"""View-consistency metrics: rotation accuracy and sequence pairing.

Rotation accuracy between an estimated and a reference pose sequence is
measured by the Frobenius norm of the rotation difference, the geodesic
rotation angle, and the variance of consecutive-view angle gaps
(angular consistency). Translations are deliberately excluded; they are
scale-sensitive. When fewer poses were estimated than required, either
the last pose is duplicated to full length or missing entries are
charged the maximum possible error.

Image-sequence consistency is aggregation-only: a pluggable pairwise
distance provider supplies d(a, b) (and optionally a similarity), and
the "first" scheme averages distances from a reference image to all
others while the "next" scheme averages over adjacent pairs. Built-in
providers cover raw pixels and precomputed per-image feature vectors;
learned perceptual metrics plug in through the same interface.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraPose

__all__ = [
    "ConsistencyReport",
    "FeatureDistanceProvider",
    "MAX_ANGLE",
    "MAX_FROBENIUS",
    "PixelDistanceProvider",
    "RotationMetricReport",
    "angular_consistency",
    "camera_accuracy_report",
    "camera_translation_xz",
    "frobenius_rotation",
    "pad_missing_poses",
    "rotation_angle_difference",
    "sequence_consistency",
]

MAX_ANGLE = np.pi  # largest geodesic distance on SO(3)
MAX_FROBENIUS = 2.0 * np.sqrt(2.0)  # ||R(pi) - I||_F, largest Frobenius gap

_ORTHO_TOL = 1e-6


def _as_rotation(r, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {r.shape}")
    dev = float(np.abs(r.T @ r - np.eye(3)).max())
    if dev > _ORTHO_TOL:
        warnings.warn(
            f"{name} deviates from orthonormality by {dev:.3g} (> {_ORTHO_TOL:g})",
            RuntimeWarning,
            stacklevel=3,
        )
    return r


def frobenius_rotation(r_est, r_gt) -> float:
    """Frobenius norm of the elementwise rotation difference."""
    a = _as_rotation(r_est, "r_est")
    b = _as_rotation(r_gt, "r_gt")
    return float(np.linalg.norm(a - b))


def rotation_angle_difference(r1, r2) -> float:
    """Geodesic angle between two rotations, in [0, pi] radians.

    arccos((trace(r1^T r2) - 1) / 2), with the argument clamped to
    [-1, 1] to absorb round-off.
    """
    a = _as_rotation(r1, "r1")
    b = _as_rotation(r2, "r2")
    cos = (np.trace(a.T @ b) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def _rotations(seq) -> list[np.ndarray]:
    return [p.rotation if isinstance(p, CameraPose) else np.asarray(p, float) for p in seq]


def angular_consistency(rotations) -> float:
    """Variance of the consecutive-view rotation angle gaps.

    For N >= 3 rotations there are N - 1 gaps theta_i; the result is
    (1/(N-1)) * sum((theta_i - mean)^2). Uniformly spaced sequences give
    zero.
    """
    rs = _rotations(rotations)
    if len(rs) < 3:
        raise ValueError("angular consistency needs at least 3 rotations")
    gaps = np.array(
        [rotation_angle_difference(rs[i], rs[i + 1]) for i in range(len(rs) - 1)]
    )
    return float(np.mean((gaps - gaps.mean()) ** 2))


def pad_missing_poses(est: list[CameraPose], required_n: int) -> list[CameraPose]:
    """Extend a short pose list to ``required_n`` by repeating the last pose.

    A list that is already long enough passes through (first
    ``required_n`` entries). An empty list is an error; use the
    max-error penalty mode of the accuracy report for that case.
    """
    if required_n < 1:
        raise ValueError("required_n must be >= 1")
    if len(est) == 0:
        raise ValueError("cannot pad an empty pose list")
    if len(est) >= required_n:
        return list(est[:required_n])
    return list(est) + [est[-1]] * (required_n - len(est))


@dataclass
class RotationMetricReport:
    """Rotation accuracy of an estimated sequence against a reference."""

    frobenius: float
    angle_diff: float
    angular_consistency: float
    per_pair_frobenius: list[float]
    per_pair_angle: list[float]
    penalty_mode: str
    n_estimated: int
    required_n: int

    def to_dict(self) -> dict:
        return {
            "frobenius": self.frobenius,
            "angle_diff": self.angle_diff,
            "angular_consistency": self.angular_consistency,
            "per_pair_frobenius": self.per_pair_frobenius,
            "per_pair_angle": self.per_pair_angle,
            "penalty_mode": self.penalty_mode,
            "n_estimated": self.n_estimated,
            "required_n": self.required_n,
        }


def camera_accuracy_report(
    est: list[CameraPose],
    gt: list[CameraPose],
    required_n: int | None = None,
    penalty_mode: str = "duplicate",
) -> RotationMetricReport:
    """Per-index rotation metrics of ``est`` against ``gt``.

    ``gt`` must hold exactly ``required_n`` poses (default: its length).
    Shortfalls in ``est`` are handled per ``penalty_mode``:

    * ``"duplicate"``: est is padded by repeating its last pose, then
      compared index by index; angular consistency is computed on the
      padded sequence.
    * ``"max-error"``: missing indices are charged the maximum errors
      (pi for the angle, 2*sqrt(2) for the Frobenius norm); angular
      consistency uses the available estimated poses, or pi^2 when
      fewer than 3 exist. An empty ``est`` is allowed here.
    """
    if penalty_mode not in ("duplicate", "max-error"):
        raise ValueError(f"unknown penalty_mode {penalty_mode!r}")
    if required_n is None:
        required_n = len(gt)
    if len(gt) != required_n:
        raise ValueError(f"reference sequence has {len(gt)} poses, required {required_n}")

    if penalty_mode == "duplicate":
        padded = pad_missing_poses(est, required_n)
        angles = [
            rotation_angle_difference(padded[i].rotation, gt[i].rotation)
            for i in range(required_n)
        ]
        frobs = [
            frobenius_rotation(padded[i].rotation, gt[i].rotation)
            for i in range(required_n)
        ]
        consistency = angular_consistency(padded)
    else:
        k = min(len(est), required_n)
        angles = [
            rotation_angle_difference(est[i].rotation, gt[i].rotation) for i in range(k)
        ] + [MAX_ANGLE] * (required_n - k)
        frobs = [
            frobenius_rotation(est[i].rotation, gt[i].rotation) for i in range(k)
        ] + [MAX_FROBENIUS] * (required_n - k)
        consistency = angular_consistency(est[:k]) if k >= 3 else MAX_ANGLE**2

    return RotationMetricReport(
        frobenius=float(np.mean(frobs)),
        angle_diff=float(np.mean(angles)),
        angular_consistency=consistency,
        per_pair_frobenius=frobs,
        per_pair_angle=angles,
        penalty_mode=penalty_mode,
        n_estimated=len(est),
        required_n=required_n,
    )


def camera_translation_xz(poses: list[CameraPose]) -> np.ndarray:
    """Normalized (x, z) camera positions for external trajectory plots.

    Camera centers are shifted to zero mean and scaled by the largest
    center distance (heights vary little on orbit trajectories and are
    dropped). Returns an (n, 2) array; a single pose maps to the origin.
    """
    centers = np.array([p.camera_center() for p in poses])
    centers = centers - centers.mean(axis=0)
    scale = float(np.linalg.norm(centers, axis=1).max())
    if scale > 0:
        centers = centers / scale
    return centers[:, [0, 2]]


class PixelDistanceProvider:
    """RMS pixel distance and cosine similarity over downsampled images.

    A self-contained stand-in for learned perceptual metrics: images are
    area-pooled to at most ``pool`` cells per side and compared as flat
    vectors. d(a, a) == 0.
    """

    def __init__(self, images, pool: int = 16):
        if pool < 1:
            raise ValueError("pool must be >= 1")
        self._vecs = []
        for img in images:
            a = np.asarray(img, dtype=np.float64)
            if a.ndim == 2:
                a = a[..., None]
            h, w = a.shape[:2]
            by, bx = max(1, h // pool), max(1, w // pool)
            ny, nx = h // by, w // bx
            a = a[: ny * by, : nx * bx]
            a = a.reshape(ny, by, nx, bx, -1).mean(axis=(1, 3))
            self._vecs.append(a.reshape(-1))
        shapes = {v.size for v in self._vecs}
        if len(shapes) > 1:
            raise ValueError("all images must share dimensions")

    def distance(self, a: int, b: int) -> float:
        return float(np.sqrt(np.mean((self._vecs[a] - self._vecs[b]) ** 2)))

    def similarity(self, a: int, b: int) -> float:
        va, vb = self._vecs[a], self._vecs[b]
        denom = np.linalg.norm(va) * np.linalg.norm(vb)
        if denom == 0:
            return 1.0 if np.array_equal(va, vb) else 0.0
        return float(np.dot(va, vb) / denom)


class FeatureDistanceProvider:
    """L2 distance and cosine similarity over precomputed feature vectors."""

    def __init__(self, features):
        f = np.asarray(features, dtype=np.float64)
        if f.ndim != 2:
            raise ValueError(f"features must be (n_images, dim), got shape {f.shape}")
        self._f = f

    def distance(self, a: int, b: int) -> float:
        return float(np.linalg.norm(self._f[a] - self._f[b]))

    def similarity(self, a: int, b: int) -> float:
        va, vb = self._f[a], self._f[b]
        denom = np.linalg.norm(va) * np.linalg.norm(vb)
        if denom == 0:
            return 1.0 if np.array_equal(va, vb) else 0.0
        return float(np.dot(va, vb) / denom)


@dataclass
class ConsistencyReport:
    """Aggregated pairwise distances under a pairing scheme."""

    scheme: str
    pairs: list[tuple[int, int]]
    distances: list[float]
    mean_distance: float
    ref_index: int | None = None
    similarities: list[float] | None = None
    mean_similarity: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "pairs": [list(p) for p in self.pairs],
            "distances": self.distances,
            "mean_distance": self.mean_distance,
            "ref_index": self.ref_index,
            "similarities": self.similarities,
            "mean_similarity": self.mean_similarity,
        }


def sequence_consistency(
    n_images: int,
    provider,
    scheme: str = "next",
    ref_index: int | None = None,
) -> ConsistencyReport:
    """Aggregate pairwise distances over an image sequence.

    ``scheme`` is "first" (reference image against every other, default
    reference index n // 2, the orbit center) or "next" (adjacent
    pairs). Both produce exactly n - 1 pairs. ``provider`` needs a
    ``distance(a, b)`` method or may be a bare callable; a
    ``similarity(a, b)`` method, if present, is aggregated as well.
    """
    if n_images < 2:
        raise ValueError("need at least 2 images")
    if scheme not in ("first", "next"):
        raise ValueError(f"unknown scheme {scheme!r}")

    dist = provider.distance if hasattr(provider, "distance") else provider
    sim = getattr(provider, "similarity", None)

    if scheme == "first":
        ref = n_images // 2 if ref_index is None else ref_index
        if not (0 <= ref < n_images):
            raise ValueError(f"ref_index {ref} out of range for {n_images} images")
        pairs = [(ref, i) for i in range(n_images) if i != ref]
    else:
        ref = None
        pairs = [(i, i + 1) for i in range(n_images - 1)]

    def evaluate(fn, a, b):
        try:
            return float(fn(a, b))
        except Exception as exc:
            raise RuntimeError(f"provider failed on pair ({a}, {b}): {exc}") from exc

    distances = [evaluate(dist, a, b) for a, b in pairs]
    similarities = [evaluate(sim, a, b) for a, b in pairs] if sim is not None else None
    return ConsistencyReport(
        scheme=scheme,
        pairs=pairs,
        distances=distances,
        mean_distance=float(np.mean(distances)),
        ref_index=ref,
        similarities=similarities,
        mean_similarity=float(np.mean(similarities)) if similarities is not None else None,
    )
