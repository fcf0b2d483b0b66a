"""Batch self-attention and its warp-guided, range-restricted variant.

In batch self-attention every view's queries attend to the keys and
values of all views concatenated in view order. The warp-guided variant
restricts each view i to its reference set S_i and multiplies the
attention map, after the softmax, by a per-key binary mask built from
the views' warped-region token masks, with view i's own block forced to
ones. Masking is applied post-softmax without renormalization (masked
row sums drop below 1); pass ``renormalize=True`` for rows rescaled back
to unit sum.

Optional dropout zeroes mask entries outside the self block
independently with a fixed probability, using a per-view derived stream
so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import derive_stream, softmax_rows
from .viewrange import RangeSelection

__all__ = [
    "AttentionBatch",
    "DropoutConfig",
    "batch_self_attention",
    "resample_mask",
    "warp_guided_attention",
]


@dataclass
class AttentionBatch:
    """Per-view query/key/value matrices: q, k are (n, p, d_qk), v is (n, p, d_v)."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        self.k = np.asarray(self.k, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.q.ndim != 3 or self.k.ndim != 3 or self.v.ndim != 3:
            raise ValueError("q, k, v must be rank-3 (views, tokens, features)")
        if self.q.shape != self.k.shape:
            raise ValueError(f"q {self.q.shape} and k {self.k.shape} must match")
        if self.v.shape[:2] != self.q.shape[:2]:
            raise ValueError("v must share the view and token counts of q")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def p(self) -> int:
        return self.q.shape[1]

    @property
    def d_k(self) -> int:
        return self.q.shape[2]


@dataclass
class DropoutConfig:
    """Mask dropout: entries zeroed with probability ``ratio`` when enabled."""

    ratio: float = 0.2
    seed: int = 0
    enabled: bool = False

    def __post_init__(self):
        if not (0 <= self.ratio < 1):
            raise ValueError("dropout ratio must lie in [0, 1)")


def batch_self_attention(batch: AttentionBatch) -> np.ndarray:
    """Attention of each view's queries over all views' keys and values.

    Keys and values are row-concatenated across views; the output has
    shape (n, p, d_v).
    """
    n, p, dk = batch.q.shape
    kstar = batch.k.reshape(n * p, dk)
    vstar = batch.v.reshape(n * p, batch.v.shape[2])
    scale = np.sqrt(dk)
    out = np.empty((n, p, vstar.shape[1]))
    for i in range(n):
        a = softmax_rows(batch.q[i] @ kstar.T / scale)
        out[i] = a @ vstar
    return out


def resample_mask(mask: np.ndarray, grid: tuple[int, int]) -> np.ndarray:
    """Resample a pixel mask to a token grid, flattened row-major.

    Area-average pooling (with fractional pixel coverage when the grid
    does not divide the mask) followed by a threshold at 0.5; exact
    halves round to 1. Returns a boolean vector of grid_h * grid_w
    entries.
    """
    m = np.asarray(mask).astype(np.float64)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2D, got shape {m.shape}")
    gh, gw = grid
    if gh <= 0 or gw <= 0:
        raise ValueError("token grid dims must be positive")
    h, w = m.shape
    if h % gh == 0 and w % gw == 0:
        pooled = m.reshape(gh, h // gh, gw, w // gw).mean(axis=(1, 3))
    else:
        pooled = np.empty((gh, gw))
        for r in range(gh):
            y0, y1 = r * h / gh, (r + 1) * h / gh
            ys = np.arange(int(np.floor(y0)), int(np.ceil(y1)))
            wy = np.minimum(y1, ys + 1) - np.maximum(y0, ys)
            for c in range(gw):
                x0, x1 = c * w / gw, (c + 1) * w / gw
                xs = np.arange(int(np.floor(x0)), int(np.ceil(x1)))
                wx = np.minimum(x1, xs + 1) - np.maximum(x0, xs)
                area = (y1 - y0) * (x1 - x0)
                pooled[r, c] = wy @ m[np.ix_(ys, xs)] @ wx / area
    return (pooled >= 0.5).reshape(-1)


def _check_token_masks(masks: np.ndarray, n: int, p: int) -> np.ndarray:
    m = np.asarray(masks, dtype=np.float64)
    if m.shape != (n, p):
        raise ValueError(f"token masks must have shape ({n}, {p}), got {m.shape}")
    if not np.all((m == 0) | (m == 1)):
        raise ValueError("token masks must be binary")
    return m


def warp_guided_attention(
    batch: AttentionBatch,
    token_masks: np.ndarray,
    sel: RangeSelection,
    drop: DropoutConfig | None = None,
    *,
    renormalize: bool = False,
) -> np.ndarray:
    """Masked batch self-attention over each view's reference set.

    For view i, keys and values concatenate the views of sel.sets[i] in
    ascending order. The key mask concatenates those views' token masks
    with view i's own block replaced by ones, is optionally thinned by
    dropout, and multiplies the softmaxed attention map before the value
    product. Output shape is (n, p, d_v).
    """
    n, p, dk = batch.q.shape
    masks = _check_token_masks(token_masks, n, p)
    if sel.n != n:
        raise ValueError(f"range selection covers {sel.n} views, batch has {n}")
    scale = np.sqrt(dk)
    out = np.empty((n, p, batch.v.shape[2]))
    for i in range(n):
        members = np.asarray(sel.sets[i])
        if members.size == 0 or i not in members:
            raise AssertionError(f"reference set of view {i} must contain the view itself")
        kstar = batch.k[members].reshape(-1, dk)
        vstar = batch.v[members].reshape(-1, batch.v.shape[2])
        a = softmax_rows(batch.q[i] @ kstar.T / scale)
        mask_row = masks[members].copy()
        self_pos = int(np.nonzero(members == i)[0][0])
        mask_row[self_pos] = 1.0
        mask_row = mask_row.reshape(-1)
        if drop is not None and drop.enabled:
            g = derive_stream(drop.seed, f"attention-dropout/{i}")
            keep = g.random(mask_row.size) >= drop.ratio
            keep[self_pos * p : (self_pos + 1) * p] = True
            mask_row = mask_row * keep
        a = a * mask_row[None, :]
        if renormalize:
            row_sum = a.sum(axis=1, keepdims=True)
            a = np.divide(a, row_sum, out=a, where=row_sum > 0)
        out[i] = a @ vstar
    return out
