"""Shared numeric kernels: seeded random streams, 2D FFT, row softmax.

Everything here operates on float64 / complex128 numpy arrays and is pure:
identical inputs produce bit-identical outputs.

Randomness comes exclusively from Philox4x64-10 counter-based bit
generators (``numpy.random.Philox``) with normal variates drawn through
numpy's ziggurat sampler, so a given seed yields the same stream on every
platform. Child streams are derived by keyed BLAKE2b hashing of a string
label, which means adding a new labeled stream somewhere in a pipeline
never perturbs the existing ones.

FFT convention: the forward transform is unnormalized and the inverse
carries the 1/(H*W) factor (numpy's default "backward" norm).
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = [
    "rng_stream",
    "derive_stream",
    "randn",
    "fft2",
    "ifft2",
    "softmax_rows",
]

_U64 = 0xFFFFFFFFFFFFFFFF


def rng_stream(seed: int) -> np.random.Generator:
    """Root random stream for ``seed``.

    The low 64 bits of ``seed`` become the Philox key directly, so equal
    seeds give bit-identical sample sequences across runs and platforms.
    """
    return np.random.Generator(np.random.Philox(key=seed & _U64))


def derive_stream(seed: int, label: str) -> np.random.Generator:
    """Independent child stream for ``(seed, label)``.

    The Philox key is ``blake2b(label, key=seed)``; distinct labels give
    statistically independent streams and the mapping is stable, so new
    labels can be introduced without changing established streams.
    """
    digest = hashlib.blake2b(
        label.encode("utf-8"),
        digest_size=16,
        key=(seed & _U64).to_bytes(8, "little"),
    ).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))


def randn(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. standard normal samples of the given shape (float64)."""
    return rng.standard_normal(shape, dtype=np.float64)


def fft2(t: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2D DFT of an H x W array (complex128)."""
    t = np.asarray(t)
    if t.ndim != 2:
        raise ValueError(f"fft2 expects a 2D array, got shape {t.shape}")
    return np.fft.fft2(t)


def ifft2(f: np.ndarray) -> np.ndarray:
    """Inverse 2D DFT with the 1/(H*W) factor; exact inverse of fft2."""
    f = np.asarray(f)
    if f.ndim != 2:
        raise ValueError(f"ifft2 expects a 2D array, got shape {f.shape}")
    return np.fft.ifft2(f)


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a p x q matrix.

    Rows are shifted by their maximum before exponentiation, so the
    result is invariant under per-row constant shifts and never
    overflows for finite input. Raises on non-finite entries.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"softmax_rows expects a 2D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("softmax_rows requires finite entries")
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
