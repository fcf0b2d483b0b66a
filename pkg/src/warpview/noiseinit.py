"""Pose-aware re-initialization of diffusion noise from warped images.

Per target pose: warp the input view, fill the warp holes with Gaussian
noise, encode the filled image to a latent, push the latent through the
DDPM forward process to a fixed noise level, and mix its low-frequency
band (magnitude-normalized) with the high-frequency band of a fresh
noise sample:

    F_low  = fft2(z_T) * G,   F_low /= mean(|F_low|)
    F_high = fft2(eps) * (1 - G)
    eps'   = real(ifft2(F_low + F_high))

``G`` is a Gaussian low-pass filter over DC-centered frequencies
normalized to [-0.5, 0.5] cycles/sample per axis, returned in the
unshifted FFT bin layout so it multiplies fft2 output directly.

The pipeline draws all randomness from streams derived from a single
seed with the labels "fill/{i}", "ddpm/{i}" and "eps/{i}" (i = pose
index), so stages can be re-run or parallelized without changing any
output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .geometry import CameraIntrinsics, CameraPose
from .numerics import derive_stream, fft2, ifft2
from .warp import DepthMap, WarpResult, forward_warp

__all__ = [
    "LatentEncoder",
    "NoiseSchedule",
    "PatchMeanEncoder",
    "SpectralMix",
    "SpectralMixConfig",
    "ddpm_forward",
    "fill_missing",
    "gaussian_lowpass",
    "pani_pipeline",
    "reinitialize_noise",
]

# Maps an (H, W, C) image to a (channels, h, w) latent; must be deterministic.
LatentEncoder = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NoiseSchedule:
    """Variance schedule with cumulative products alpha_bar.

    ``alpha_bars[t]`` is the product of (1 - beta_s) over the first t
    steps, so ``alpha_bars[0] == 1`` and the array is strictly
    decreasing with length steps + 1.
    """

    betas: np.ndarray
    alpha_bars: np.ndarray = field(init=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size == 0:
            raise ValueError("betas must be a nonempty 1D array")
        if np.any((betas <= 0) | (betas >= 1)):
            raise ValueError("betas must lie strictly in (0, 1)")
        bars = np.concatenate(([1.0], np.cumprod(1.0 - betas)))
        if np.any(np.diff(bars) >= 0):
            raise ValueError("alpha_bars must be strictly decreasing")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", bars)

    @property
    def steps(self) -> int:
        return self.betas.size

    @classmethod
    def linear(
        cls, steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02
    ) -> "NoiseSchedule":
        """Linear beta schedule (the common DDPM default)."""
        return cls(np.linspace(beta_start, beta_end, steps))


@dataclass
class SpectralMixConfig:
    """Knobs of the noise re-initialization.

    d0: Gaussian filter cutoff in normalized frequency units.
    t_noise: DDPM forward noise level applied to the encoded latent.
    fill_sigma: standard deviation of the hole-filling noise.
    mean_mode: magnitude normalization averages over "all" spectrum bins
        or only the "passband" bins (filter gain >= 0.5).
    """

    d0: float = 0.25
    t_noise: int = 950
    fill_sigma: float = 1.0
    mean_mode: str = "all"

    def __post_init__(self):
        if self.d0 <= 0:
            raise ValueError("d0 must be positive")
        if self.t_noise < 0:
            raise ValueError("t_noise must be nonnegative")
        if self.mean_mode not in ("all", "passband"):
            raise ValueError(f"unknown mean_mode {self.mean_mode!r}")


def fill_missing(w: WarpResult, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Replace uncovered warp pixels with N(0, sigma^2) samples.

    Covered pixels pass through unchanged. Samples are not clamped to
    [0, 1]; the encoder tolerates out-of-range values.
    """
    noise = sigma * rng.standard_normal(w.image.shape)
    return np.where(w.zbuffer.valid[..., None], w.image, noise)


def ddpm_forward(
    z0: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator
) -> np.ndarray:
    """Diffuse ``z0`` to noise level ``t``:  sqrt(a)*z0 + sqrt(1-a)*eps.

    ``a`` is alpha_bars[t]; t == 0 returns z0 exactly and draws nothing.
    """
    if not (0 <= t < sched.steps):
        raise ValueError(f"t must lie in [0, {sched.steps}), got {t}")
    z0 = np.asarray(z0, dtype=np.float64)
    if t == 0:
        return z0.copy()
    a = sched.alpha_bars[t]
    return np.sqrt(a) * z0 + np.sqrt(1.0 - a) * rng.standard_normal(z0.shape)


def gaussian_lowpass(h: int, w: int, d0: float) -> np.ndarray:
    """Gaussian low-pass filter exp(-D^2 / (2 d0^2)) on an h x w spectrum.

    D is the Euclidean distance from DC in normalized frequency
    coordinates ([-0.5, 0.5) cycles/sample per axis). The filter is laid
    out in unshifted FFT bin order, so G[0, 0] (the DC gain) is exactly 1.
    """
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    d2 = fy[:, None] ** 2 + fx[None, :] ** 2
    return np.exp(-d2 / (2.0 * d0 * d0))


class SpectralMix(NamedTuple):
    """Re-initialized noise plus channels whose normalization was skipped."""

    noise: np.ndarray
    unnormalized_channels: tuple[int, ...]


def reinitialize_noise(
    z_t: np.ndarray,
    eps: np.ndarray,
    lowpass: np.ndarray,
    *,
    mean_mode: str = "all",
) -> SpectralMix:
    """Mix the filtered band of ``z_t`` with the complementary band of ``eps``.

    Channels are processed independently: the low band of z_t is divided
    by the mean magnitude over the channel's spectrum bins ("all") or
    over the passband bins with gain >= 0.5 ("passband"); a zero mean
    (z_t or the filter identically zero) skips normalization for that
    channel and reports it. The inverse transform of the summed bands is
    returned as a real array; a residual imaginary part above 1e-9 would
    indicate non-real inputs and raises.
    """
    z_t = np.asarray(z_t, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if z_t.ndim != 3 or eps.shape != z_t.shape:
        raise ValueError("z_t and eps must be matching (channels, h, w) arrays")
    if lowpass.shape != z_t.shape[1:]:
        raise ValueError("filter spatial dims must match the latents")
    if mean_mode not in ("all", "passband"):
        raise ValueError(f"unknown mean_mode {mean_mode!r}")

    highpass = 1.0 - lowpass
    out = np.empty_like(z_t)
    skipped = []
    for c in range(z_t.shape[0]):
        f_low = fft2(z_t[c]) * lowpass
        mag = np.abs(f_low)
        mean = mag.mean() if mean_mode == "all" else mag[lowpass >= 0.5].mean()
        if mean == 0.0:
            skipped.append(c)
        else:
            f_low = f_low / mean
        mixed = ifft2(f_low + fft2(eps[c]) * highpass)
        residue = float(np.abs(mixed.imag).max())
        if residue > 1e-9:
            raise ValueError(f"imaginary residue {residue:g} exceeds 1e-9")
        out[c] = mixed.real
    return SpectralMix(out, tuple(skipped))


@dataclass
class PatchMeanEncoder:
    """Latent stand-in for a learned image encoder.

    Maps an (H, W, C) image to a (4, H/patch, W/patch) latent: channels
    0..2 are per-channel patch means (grayscale is replicated) and
    channel 3 is the patch mean of Rec.601 luma. Real latents of the
    same shape, loaded from file, are drop-in replacements.
    """

    patch: int = 8

    def __call__(self, img: np.ndarray) -> np.ndarray:
        img = np.asarray(img, dtype=np.float64)
        if img.ndim != 3 or img.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W, C) image with C in {{1, 3}}, got {img.shape}")
        h, w, c = img.shape
        if h % self.patch or w % self.patch:
            raise ValueError(f"image dims {h}x{w} must be divisible by patch {self.patch}")
        rgb = np.repeat(img, 3, axis=2) if c == 1 else img
        blocks = rgb.reshape(h // self.patch, self.patch, w // self.patch, self.patch, 3)
        means = blocks.mean(axis=(1, 3))
        luma = 0.299 * means[..., 0] + 0.587 * means[..., 1] + 0.114 * means[..., 2]
        return np.concatenate([means.transpose(2, 0, 1), luma[None]], axis=0)


def pani_pipeline(
    img: np.ndarray,
    depth: DepthMap,
    intrinsics: CameraIntrinsics,
    poses: Sequence[CameraPose],
    encoder: LatentEncoder,
    cfg: SpectralMixConfig,
    seed: int,
    *,
    schedule: NoiseSchedule | None = None,
    lowpass: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Re-initialized noise for every pose, deterministic in ``seed``.

    Per pose i: warp, fill holes (stream "fill/{i}"), encode, DDPM
    forward to cfg.t_noise (stream "ddpm/{i}"), and mix against a fresh
    standard normal field (stream "eps/{i}"). ``lowpass`` overrides the
    Gaussian filter built from cfg.d0.
    """
    sched = schedule if schedule is not None else NoiseSchedule.linear()
    if not (0 <= cfg.t_noise < sched.steps):
        raise ValueError(f"t_noise {cfg.t_noise} outside schedule range [0, {sched.steps})")
    results = []
    for i, pose in enumerate(poses):
        warped = forward_warp(img, depth, intrinsics, pose)
        filled = fill_missing(warped, cfg.fill_sigma, derive_stream(seed, f"fill/{i}"))
        z0 = encoder(filled)
        if z0.ndim != 3:
            raise ValueError("encoder must return a (channels, h, w) latent")
        z_t = ddpm_forward(z0, cfg.t_noise, sched, derive_stream(seed, f"ddpm/{i}"))
        eps = derive_stream(seed, f"eps/{i}").standard_normal(z0.shape)
        filt = lowpass if lowpass is not None else gaussian_lowpass(z0.shape[1], z0.shape[2], cfg.d0)
        results.append(reinitialize_noise(z_t, eps, filt, mean_mode=cfg.mean_mode).noise)
    return results
