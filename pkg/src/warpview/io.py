"""File formats and run configuration.

Formats:

* Tensor files (.wavt): magic ``WAVT``, u16 version, u16 rank, rank u32
  dims, then row-major little-endian float32 payload. Saving rounds
  float64 data to float32 once; loading is bit-exact.
* Pose files: JSON with a convention tag ("opengl" or "opencv"),
  shared intrinsics, and per-pose row-major rotation plus translation.
  OpenCV poses are converted to the internal OpenGL convention on load
  by flipping the camera y and z axes (an involution).
* Images: 8-bit PNG, grayscale or RGB, scaled to [0, 1]. With
  ``lift_zeros=True`` exact-zero pixels are raised to 1/255 on load so
  a genuinely black input pixel cannot masquerade as a warp hole; this
  is the one lossy ingest step and is only applied to input views,
  never to warped intermediates.
* Depth: PFM (scale-line sign gives the endianness, rows stored
  bottom-up) or a rank-2 tensor file; non-positive and non-finite
  entries are marked invalid.

``RunConfig`` gathers every tunable default in one flat document;
unknown keys are rejected and the effective configuration is echoed
into each manifest a CLI run writes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import CameraIntrinsics, CameraPose, validate_rotation
from .warp import DepthMap

__all__ = [
    "RunConfig",
    "TensorFileError",
    "UnsupportedImageError",
    "ZERO_LIFT",
    "flip_camera_convention",
    "load_depth",
    "load_image",
    "load_pfm",
    "load_poses",
    "load_tensor",
    "save_image",
    "save_pfm",
    "save_poses",
    "save_tensor",
    "write_manifest",
]

TENSOR_MAGIC = b"WAVT"
TENSOR_VERSION = 1
ZERO_LIFT = 1.0 / 255.0  # smallest 8-bit level; survives PNG round trips


class TensorFileError(ValueError):
    """Malformed or unsupported tensor file."""


class UnsupportedImageError(ValueError):
    """Image format outside the 8-bit grayscale/RGB PNG contract."""


# ---------------------------------------------------------------------------
# tensor files


def save_tensor(path, array) -> None:
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    header = TENSOR_MAGIC + struct.pack("<HH", TENSOR_VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def load_tensor(path) -> np.ndarray:
    """Load a tensor file bit-exactly as float32."""
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != TENSOR_MAGIC:
        raise TensorFileError(f"{path}: missing WAVT magic")
    version, rank = struct.unpack_from("<HH", data, 4)
    if version != TENSOR_VERSION:
        raise TensorFileError(f"{path}: unsupported version {version}")
    if rank > 16:
        raise TensorFileError(f"{path}: implausible rank {rank}")
    if len(data) < 8 + 4 * rank:
        raise TensorFileError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{rank}I", data, 8)
    offset = 8 + 4 * rank
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    if len(data) - offset != 4 * count:
        raise TensorFileError(
            f"{path}: payload is {len(data) - offset} bytes, expected {4 * count}"
        )
    return np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(dims).copy()


# ---------------------------------------------------------------------------
# images


def load_image(path, *, lift_zeros: bool = False) -> np.ndarray:
    """Load an 8-bit PNG as an (H, W, C) float64 array in [0, 1]."""
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.float64)[..., None]
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.float64)
        else:
            raise UnsupportedImageError(
                f"{path}: mode {im.mode!r} not supported; need 8-bit grayscale (L) or RGB"
            )
    arr = arr / 255.0
    if lift_zeros:
        arr[arr == 0.0] = ZERO_LIFT
    return arr


def save_image(img, path) -> None:
    """Save an (H, W, C) array in [0, 1] as an 8-bit PNG (round half up)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, C) with C in {{1, 3}}, got shape {img.shape}")
    quant = np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    if quant.shape[2] == 1:
        Image.fromarray(quant[..., 0], mode="L").save(path)
    else:
        Image.fromarray(quant, mode="RGB").save(path)


# ---------------------------------------------------------------------------
# depth


def save_pfm(path, values) -> None:
    """Write a single-channel little-endian PFM (rows bottom-up)."""
    v = np.asarray(values, dtype="<f4")
    if v.ndim != 2:
        raise ValueError(f"PFM depth must be 2D, got shape {v.shape}")
    h, w = v.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(np.flipud(v)).tobytes())


def load_pfm(path) -> np.ndarray:
    """Read a single-channel PFM; the scale sign selects the endianness."""
    data = Path(path).read_bytes()

    def next_line(offset):
        end = data.find(b"\n", offset)
        if end < 0:
            raise ValueError(f"{path}: truncated PFM header at byte {offset}")
        return data[offset:end].decode("ascii", errors="replace").strip(), end + 1

    tag, offset = next_line(0)
    if tag == "PF":
        raise ValueError(f"{path}: 3-channel PFM not supported for depth maps")
    if tag != "Pf":
        raise ValueError(f"{path}: bad PFM tag {tag!r} at byte 0")
    dims, offset = next_line(offset)
    parts = dims.split()
    if len(parts) != 2 or not all(p.lstrip("+").isdigit() for p in parts):
        raise ValueError(f"{path}: bad PFM dimensions {dims!r} at byte {offset - len(dims) - 1}")
    w, h = int(parts[0]), int(parts[1])
    scale_line, offset = next_line(offset)
    try:
        scale = float(scale_line)
    except ValueError:
        raise ValueError(f"{path}: bad PFM scale {scale_line!r}") from None
    dtype = "<f4" if scale < 0 else ">f4"
    expected = w * h * 4
    if len(data) - offset < expected:
        raise ValueError(
            f"{path}: payload is {len(data) - offset} bytes at offset {offset}, expected {expected}"
        )
    raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=offset).reshape(h, w)
    return np.flipud(raw).astype(np.float32)


def load_depth(path) -> DepthMap:
    """Load a depth map from a PFM or a rank-2 tensor file."""
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        values = load_pfm(path)
    else:
        values = load_tensor(path)
        if values.ndim != 2:
            raise ValueError(f"{path}: depth tensor must be rank 2, got rank {values.ndim}")
    return DepthMap.from_values(np.asarray(values, dtype=np.float64))


# ---------------------------------------------------------------------------
# poses

_FLIP_YZ = np.diag([1.0, -1.0, -1.0])


def flip_camera_convention(pose: CameraPose) -> CameraPose:
    """Swap a pose between the OpenGL and OpenCV camera conventions.

    Flips the camera y and z axes; applying it twice restores the
    original pose.
    """
    return CameraPose(_FLIP_YZ @ pose.rotation, _FLIP_YZ @ pose.translation)


def save_poses(path, poses, intrinsics: CameraIntrinsics, convention: str = "opengl") -> None:
    if convention not in ("opengl", "opencv"):
        raise ValueError(f"unknown convention {convention!r}")
    out = [flip_camera_convention(p) if convention == "opencv" else p for p in poses]
    doc = {
        "convention": convention,
        "intrinsics": {
            "fx": intrinsics.fx,
            "fy": intrinsics.fy,
            "cx": intrinsics.cx,
            "cy": intrinsics.cy,
            "width": intrinsics.width,
            "height": intrinsics.height,
        },
        "poses": [
            {
                "rotation": [float(x) for x in p.rotation.reshape(-1)],
                "translation": [float(x) for x in p.translation],
            }
            for p in out
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_poses(path) -> tuple[list[CameraPose], CameraIntrinsics]:
    """Load poses, converting to the internal OpenGL convention."""
    doc = json.loads(Path(path).read_text())
    convention = doc.get("convention", "opengl")
    if convention not in ("opengl", "opencv"):
        raise ValueError(f"{path}: unknown convention {convention!r}")
    ki = doc["intrinsics"]
    intrinsics = CameraIntrinsics(
        fx=float(ki["fx"]),
        fy=float(ki["fy"]),
        cx=float(ki["cx"]),
        cy=float(ki["cy"]),
        width=int(ki["width"]),
        height=int(ki["height"]),
    )
    poses = []
    for i, entry in enumerate(doc["poses"]):
        rot = np.array(entry["rotation"], dtype=np.float64)
        if rot.size != 9:
            raise ValueError(f"{path}: pose {i} rotation must have 9 entries")
        rot = rot.reshape(3, 3)
        try:
            validate_rotation(rot, 1e-6)
        except ValueError as exc:
            raise ValueError(f"{path}: pose {i}: {exc}") from None
        pose = CameraPose(rot, np.array(entry["translation"], dtype=np.float64))
        poses.append(flip_camera_convention(pose) if convention == "opencv" else pose)
    return poses, intrinsics


# ---------------------------------------------------------------------------
# run configuration and manifests


@dataclass
class RunConfig:
    """Every tunable default, overridable from a JSON file and CLI flags."""

    seed: int = 0
    # orbit
    orbit_count: int = 19
    orbit_radius: float = 1.0
    orbit_half_angle_deg: float = 30.0
    # noise re-initialization
    d0: float = 0.25
    t_noise: int = 950
    fill_sigma: float = 1.0
    schedule_steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    mean_mode: str = "all"
    patch_size: int = 8
    # attention
    dropout_ratio: float = 0.2
    dropout_enabled: bool = False
    renormalize_attention: bool = False
    # range selection
    interval_mode: str = "interval"
    include_self_in_stats: bool = False
    # metrics
    penalty_mode: str = "duplicate"
    ref_index: int | None = None

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        unknown = sorted(set(doc) - set(cls.field_names()))
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        return cls(**doc)

    def updated(self, **overrides) -> "RunConfig":
        """Copy with the non-None overrides applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(changes) - set(self.field_names()))
        if unknown:
            raise ValueError(f"unknown config keys {unknown}")
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(path, command: str, config: RunConfig, outputs, extra: dict | None = None) -> Path:
    """Record a run: command, effective config (incl. seed), output hashes.

    Only output basenames are stored, so manifests from runs in
    different directories compare byte-for-byte when the artifacts do.
    """
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "outputs": [{"name": Path(p).name, "sha256": _sha256(Path(p))} for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
