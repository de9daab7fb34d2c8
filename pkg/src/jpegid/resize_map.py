"""Estimate the feature a down-resized copy would have, from the enrolled one.

Each output block averages the enrolled blocks its source window overlaps,
weighted by how many integer pixel positions of each block fall inside the
window.  Window edges sit at ``k * 8 * enrolled_len / query_len`` and are
handled in scaled integers, so there is no float drift in the geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from jpegid.dc_feature import FeatureVector
from jpegid.errors import ShapeMismatch, UpscaleUnsupported


@dataclass(eq=False)
class EstimatedFeature:
    width_px: int
    height_px: int
    d: np.ndarray

    @property
    def blocks_x(self) -> int:
        return math.ceil(self.width_px / 8)

    @property
    def blocks_y(self) -> int:
        return math.ceil(self.height_px / 8)

    def __len__(self) -> int:
        return self.d.size


def _ceil_div(a, b):
    return -((-a) // b)


def axis_counts(src_px: int, dst_px: int) -> np.ndarray:
    """Integer pixel counts, shape (ceil(dst/8), ceil(src/8)).

    Entry [q, o] is the number of integer source coordinates inside output
    block q's window that belong to source block o.  Windows are clamped to
    the source extent.
    """
    if dst_px > src_px:
        raise UpscaleUnsupported(f"query extent {dst_px} exceeds enrolled extent {src_px}")
    if dst_px < 1:
        raise ValueError("query extent must be positive")
    n_dst = math.ceil(dst_px / 8)
    n_src = math.ceil(src_px / 8)
    q = np.arange(n_dst, dtype=np.int64)
    # x <= x_I < x + dx with x = q*8*src/dst  <=>  ceil(q*8*src/dst) <= x_I < ceil((q+1)*8*src/dst)
    lo = np.minimum(_ceil_div(q * 8 * src_px, dst_px), src_px)
    hi = np.minimum(_ceil_div((q + 1) * 8 * src_px, dst_px), src_px)
    start = np.arange(n_src, dtype=np.int64) * 8
    stop = np.minimum(start + 8, src_px)
    counts = np.minimum(hi[:, None], stop[None, :]) - np.maximum(lo[:, None], start[None, :])
    return np.clip(counts, 0, None)


def axis_weights(src_px: int, dst_px: int) -> np.ndarray:
    """Row-normalized ``axis_counts`` as floats."""
    counts = axis_counts(src_px, dst_px)
    return counts / counts.sum(axis=1, keepdims=True)


def block_weights(src_w: int, src_h: int, dst_w: int, dst_h: int,
                  qx: int, qy: int) -> dict[tuple[int, int], Fraction]:
    """Exact weights of output block (qx, qy) over source blocks (x, y)."""
    cx = axis_counts(src_w, dst_w)[qx]
    cy = axis_counts(src_h, dst_h)[qy]
    total = int(cx.sum()) * int(cy.sum())
    return {
        (int(x), int(y)): Fraction(int(cx[x]) * int(cy[y]), total)
        for y in np.flatnonzero(cy) for x in np.flatnonzero(cx)
    }


def estimate(enrolled: FeatureVector, query_w: int, query_h: int) -> EstimatedFeature:
    """Map the enrolled feature onto the block grid of a (query_w x query_h) image."""
    if query_w > enrolled.width_px or query_h > enrolled.height_px:
        raise UpscaleUnsupported(
            f"query {query_w}x{query_h} is larger than enrolled "
            f"{enrolled.width_px}x{enrolled.height_px}"
        )
    if enrolled.v.size != enrolled.blocks_x * enrolled.blocks_y:
        raise ShapeMismatch("enrolled feature length disagrees with its dimensions")
    u = enrolled.v.reshape(enrolled.blocks_y, enrolled.blocks_x).astype(np.float64)
    if (query_w, query_h) == (enrolled.width_px, enrolled.height_px):
        return EstimatedFeature(query_w, query_h, u.reshape(-1).copy())
    wx = axis_weights(enrolled.width_px, query_w)
    wy = axis_weights(enrolled.height_px, query_h)
    d = wy @ u @ wx.T
    return EstimatedFeature(query_w, query_h, d.reshape(-1))
