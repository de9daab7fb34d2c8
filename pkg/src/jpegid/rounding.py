"""The one rounding convention used across the package: half away from zero."""

from __future__ import annotations

import numpy as np


def round_half_away(x):
    """Round floats to the nearest integer, ties away from zero.

    Works on scalars and arrays; returns float(s) with integral values.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return out if out.ndim else float(out)


def div_round_half_away(num, den):
    """Exact ``round(num / den)`` for integers (den > 0), ties away from zero."""
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    mag = (2 * np.abs(num) + den) // (2 * den)
    out = np.sign(num) * mag
    return out if out.ndim else int(out)
