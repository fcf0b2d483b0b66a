"""Warped-region masks, pairwise mask IoU, and adaptive reference ranges.

Each warped view gets a binary mask marking its covered pixels. The
pairwise IoU matrix over those masks measures how much two viewpoints
overlap; for every view the reference set keeps the other views whose
IoU falls inside [mean - std, mean + std] of that view's off-diagonal
IoU row, plus the view itself. With equal overlaps everywhere the
interval degenerates and all views are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .warp import WarpResult

__all__ = [
    "IoUMatrix",
    "RangeSelection",
    "adaptive_range",
    "iou_matrix",
    "mask_from_image",
    "region_mask",
]


def mask_from_image(img: np.ndarray) -> np.ndarray:
    """Binary (H, W) mask: 1 where any channel is nonzero."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img != 0
    if img.ndim == 3:
        return np.any(img != 0, axis=-1)
    raise ValueError(f"expected (H, W) or (H, W, C) image, got shape {img.shape}")


def region_mask(w: WarpResult) -> np.ndarray:
    """Covered-region mask of a warp result (holes are exactly zero)."""
    return mask_from_image(w.image)


@dataclass
class IoUMatrix:
    """Pairwise IoU of n masks; symmetric, unit diagonal for nonempty masks.

    ``empty_union`` flags pairs whose mask union is empty (their IoU is
    reported as 0); its diagonal marks views with empty masks.
    """

    values: np.ndarray  # (n, n) float64 in [0, 1]
    empty_union: np.ndarray  # (n, n) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.empty_union = np.asarray(self.empty_union, dtype=bool)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("IoU values must be a square matrix")
        if self.empty_union.shape != self.values.shape:
            raise ValueError("empty_union shape must match values")
        if np.any((self.values < 0) | (self.values > 1)):
            raise ValueError("IoU entries must lie in [0, 1]")

    @classmethod
    def from_values(cls, values) -> "IoUMatrix":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.zeros_like(values, dtype=bool))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def empty_views(self) -> np.ndarray:
        """Indices of views whose masks are empty."""
        return np.nonzero(np.diag(self.empty_union))[0]


def iou_matrix(masks: Sequence[np.ndarray]) -> IoUMatrix:
    """IoU of every mask pair, computed from exact integer counts.

    Intersections and unions are counted as integers and divided once,
    so the matrix is exactly symmetric. Pairs with an empty union get 0
    and are flagged.
    """
    if len(masks) == 0:
        raise ValueError("at least one mask is required")
    shape = np.asarray(masks[0]).shape
    flat = []
    for i, m in enumerate(masks):
        m = np.asarray(m)
        if m.shape != shape:
            raise ValueError(f"mask {i} has shape {m.shape}, expected {shape}")
        flat.append((m != 0).reshape(-1))
    bits = np.stack(flat).astype(np.int64)
    inter = bits @ bits.T
    sizes = bits.sum(axis=1)
    union = sizes[:, None] + sizes[None, :] - inter
    empty = union == 0
    values = inter / np.where(empty, 1, union)
    return IoUMatrix(values, empty)


@dataclass
class RangeSelection:
    """Per-view reference sets with the row statistics that produced them."""

    sets: list[np.ndarray]  # sorted view indices, self always included
    mu: np.ndarray  # (n,)
    sigma: np.ndarray  # (n,)

    @property
    def n(self) -> int:
        return len(self.sets)

    @classmethod
    def full(cls, n: int) -> "RangeSelection":
        """Every view references all views (plain batch attention)."""
        all_views = np.arange(n)
        return cls([all_views.copy() for _ in range(n)], np.zeros(n), np.zeros(n))


def adaptive_range(
    u: IoUMatrix,
    *,
    include_self_in_stats: bool = False,
    mode: str = "interval",
) -> RangeSelection:
    """Select each view's reference set from its IoU row statistics.

    For view i, ``mu`` and ``sigma`` are the mean and population standard
    deviation of the off-diagonal entries {u_ij : j != i} (the forced
    diagonal would bias them; ``include_self_in_stats`` restores it).
    ``mode`` controls membership for j != i:

    * ``"interval"``: mu - sigma <= u_ij <= mu + sigma (closed, default)
    * ``"lower-bound"``: u_ij >= mu - sigma

    View i itself is always a member. For n == 1 the stats are 0.
    """
    if mode not in ("interval", "lower-bound"):
        raise ValueError(f"unknown mode {mode!r}")
    n = u.n
    if n == 0:
        raise ValueError("empty IoU matrix")
    mu = np.zeros(n)
    sigma = np.zeros(n)
    sets = []
    for i in range(n):
        others = np.delete(np.arange(n), i)
        stat_vals = u.values[i] if include_self_in_stats else u.values[i, others]
        if stat_vals.size:
            mu[i] = stat_vals.mean()
            sigma[i] = stat_vals.std()
        lo, hi = mu[i] - sigma[i], mu[i] + sigma[i]
        row = u.values[i, others]
        if mode == "interval":
            chosen = others[(row >= lo) & (row <= hi)]
        else:
            chosen = others[row >= lo]
        sets.append(np.sort(np.append(chosen, i)))
    return RangeSelection(sets, mu, sigma)
