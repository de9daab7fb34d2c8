"""The DC feature: dead-zoned, re-quantized luminance DC values.

Also the preliminary calibration of the dead zone ``th`` and step ``delta``
from pairs of single- and double-compressed DC planes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from jpegid.errors import ShapeMismatch
from jpegid.jpeg_parse import DcPlane
from jpegid.rounding import div_round_half_away


@dataclass(frozen=True)
class FeatureParams:
    th: int = 14
    delta: int = 50

    def __post_init__(self):
        if int(self.th) != self.th or self.th < 0:
            raise ValueError(f"th must be a non-negative integer, got {self.th!r}")
        if int(self.delta) != self.delta or self.delta <= 0:
            raise ValueError(f"delta must be a positive integer, got {self.delta!r}")


@dataclass(eq=False)
class FeatureVector:
    params: FeatureParams
    width_px: int
    height_px: int
    v: np.ndarray

    def __post_init__(self):
        self.v = np.ascontiguousarray(self.v, dtype=np.int32).reshape(-1)
        expected = math.ceil(self.width_px / 8) * math.ceil(self.height_px / 8)
        if self.v.size != expected:
            raise ShapeMismatch(
                f"feature has {self.v.size} components, {self.width_px}x{self.height_px} needs {expected}"
            )

    @property
    def blocks_x(self) -> int:
        return math.ceil(self.width_px / 8)

    @property
    def blocks_y(self) -> int:
        return math.ceil(self.height_px / 8)

    def __len__(self) -> int:
        return self.v.size

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.params == other.params
            and (self.width_px, self.height_px) == (other.width_px, other.height_px)
            and np.array_equal(self.v, other.v)
        )


def feature_values(dc, q_dc: int, params: FeatureParams) -> np.ndarray:
    """Map quantized DC values to feature integers (exact integer arithmetic).

    Zero inside ``[-th, th]``; otherwise ``round(q_dc * dc / delta) + sgn(dc)``.
    The dead zone is tested on the quantized value.
    """
    dc = np.asarray(dc, dtype=np.int64)
    v = div_round_half_away(q_dc * dc, params.delta) + np.sign(dc)
    return np.where(np.abs(dc) <= params.th, 0, v)


def extract(plane: DcPlane, params: FeatureParams | None = None) -> FeatureVector:
    params = params or FeatureParams()
    v = feature_values(plane.dc, plane.q_dc, params)
    return FeatureVector(params, plane.width_px, plane.height_px, v.astype(np.int32))


def _check_pair(single: DcPlane, double: DcPlane):
    if single.num_blocks != double.num_blocks:
        raise ShapeMismatch(
            f"block counts differ: {single.num_blocks} vs {double.num_blocks}"
        )
    return single.dc.astype(np.int64), double.dc.astype(np.int64)


def calibrate_th(pairs: Iterable[tuple[DcPlane, DcPlane]]) -> int:
    """Largest |DC| seen at a block whose two nonzero DC values have opposite signs."""
    best = 0
    for single, double in pairs:
        a, b = _check_pair(single, double)
        conflict = (a * b) < 0
        if conflict.any():
            best = max(best, int(np.maximum(np.abs(a), np.abs(b))[conflict].max()))
    return best


def calibrate_delta(pairs: Iterable[tuple[DcPlane, DcPlane]], th: int,
                    dequantized: bool = True) -> int:
    """Largest DC difference at same-sign blocks where both |DC| exceed ``th``.

    Differences are taken on dequantized values (``q_dc * dc``) by default;
    ``dequantized=False`` compares the raw quantized values instead.
    """
    best = 0
    for single, double in pairs:
        a, b = _check_pair(single, double)
        keep = (np.sign(a) == np.sign(b)) & (np.abs(a) > th) & (np.abs(b) > th)
        if not keep.any():
            continue
        if dequantized:
            diff = np.abs(single.q_dc * a[keep] - double.q_dc * b[keep])
        else:
            diff = np.abs(a[keep] - b[keep])
        best = max(best, int(diff.max()))
    return best
