"""A small baseline JPEG codec and area resizer for building test pipelines.

The encoder logs the quantized luminance DC plane it writes, which is the
oracle the parser is checked against.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from jpegid import _entropy
from jpegid.errors import OutOfRange, UpscaleUnsupported
from jpegid.jpeg_parse import DcPlane, read_frame
from jpegid.rounding import div_round_half_away, round_half_away
from jpegid.tables import (
    AC_CHROMA,
    AC_LUMA,
    BASE_CHROMA,
    BASE_LUMA,
    DC_CHROMA,
    DC_LUMA,
    ZIGZAG,
    build_encoder,
)

SAMPLINGS = {"444": (1, 1), "422": (2, 1), "420": (2, 2)}


@dataclass(eq=False)
class PixelImage:
    """8-bit samples, shape (height, width) for luma or (height, width, 3) for RGB."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim not in (2, 3) or (s.ndim == 3 and s.shape[2] != 3):
            raise ValueError(f"samples must be HxW or HxWx3, got shape {s.shape}")
        if s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if s.dtype != np.uint8:
            if s.size and (s.min() < 0 or s.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            s = s.astype(np.uint8)
        self.samples = np.ascontiguousarray(s)

    @property
    def width_px(self) -> int:
        return self.samples.shape[1]

    @property
    def height_px(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else 3

    def __eq__(self, other):
        if not isinstance(other, PixelImage):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class QuantTables:
    luma: np.ndarray
    chroma: np.ndarray
    qf: int


def scale_tables(qf: int) -> QuantTables:
    """IJG quality scaling of the Annex K base tables."""
    if not isinstance(qf, (int, np.integer)) or not 1 <= qf <= 100:
        raise OutOfRange(f"quality factor must be an integer in [1, 100], got {qf!r}")
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf

    def _scale(base):
        return np.clip((base * scale + 50) // 100, 1, 255)

    return QuantTables(_scale(BASE_LUMA), _scale(BASE_CHROMA), int(qf))


# Orthonormal 8-point DCT-II basis: S = T @ block @ T.T, so S[0, 0] = sum / 8.
_T = np.array(
    [[(math.sqrt(0.5) if u == 0 else 1.0) * 0.5 * math.cos((2 * x + 1) * u * math.pi / 16)
      for x in range(8)] for u in range(8)]
)

_HUFF_ENC = {
    "dc": [build_encoder(*DC_LUMA), build_encoder(*DC_CHROMA)],
    "ac": [build_encoder(*AC_LUMA), build_encoder(*AC_CHROMA)],
}


def _to_ycbcr(rgb):
    r, g, b = (rgb[..., k].astype(np.int64) for k in range(3))
    # BT.601 full range in 16-bit fixed point.
    y = (19595 * r + 38470 * g + 7471 * b + 32768) >> 16
    cb = ((-11059 * r - 21709 * g + 32768 * b + 32768) >> 16) + 128
    cr = ((32768 * r - 27439 * g - 5329 * b + 32768) >> 16) + 128
    return [np.clip(p, 0, 255) for p in (y, cb, cr)]


def _to_rgb(y, cb, cr):
    y = y.astype(np.float64)
    cb = cb.astype(np.float64) - 128.0
    cr = cr.astype(np.float64) - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.clip(round_half_away(np.stack([r, g, b], axis=-1)), 0, 255).astype(np.uint8)


def _pad_edge(plane, height, width):
    return np.pad(plane, ((0, height - plane.shape[0]), (0, width - plane.shape[1])), mode="edge")


def _downsample(plane, fy, fx):
    if fy == 1 and fx == 1:
        return plane
    h, w = plane.shape
    sums = plane.reshape(h // fy, fy, w // fx, fx).sum(axis=(1, 3))
    return div_round_half_away(sums, fy * fx)


def _blocks(plane):
    """(H, W) -> (H/8, W/8, 8, 8)."""
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).swapaxes(1, 2)


def _forward(plane, quant):
    """Level shift, DCT and quantize a padded plane; returns (by, bx, 64) int32.

    The DC term is done in exact integer arithmetic so ties round correctly.
    """
    blocks = _blocks(plane.astype(np.int64) - 128)
    coef = np.einsum("ux,byxv,wv->byuw", _T, blocks.astype(np.float64), _T, optimize=True)
    q = round_half_away(coef / quant).astype(np.int64)
    q[..., 0, 0] = div_round_half_away(blocks.sum(axis=(2, 3)), 8 * int(quant[0, 0]))
    q = q.reshape(q.shape[0], q.shape[1], 64)
    q[..., 1:] = np.clip(q[..., 1:], -1023, 1023)
    return q.astype(np.int32)


def _marker_segment(marker, payload):
    return struct.pack(">BBH", 0xFF, marker, len(payload) + 2) + payload


def _dht_payload(tc, th, spec):
    counts, symbols = spec
    return bytes([(tc << 4) | th]) + bytes(counts) + bytes(symbols)


def encode(img: PixelImage, qf: int, sampling: str = "420", restart_interval: int = 0):
    """Encode ``img`` as a baseline JPEG.

    Returns ``(jpeg_bytes, dc_plane)`` where ``dc_plane`` holds the quantized
    luminance DC values that were entropy coded.
    """
    sampling = str(sampling)
    if sampling not in SAMPLINGS:
        raise ValueError(f"sampling must be one of {sorted(SAMPLINGS)}, got {sampling!r}")
    if restart_interval < 0 or restart_interval > 65535:
        raise OutOfRange("restart interval must be in [0, 65535]")
    tables = scale_tables(qf)
    w, h = img.width_px, img.height_px

    if img.channels == 1:
        hmax = vmax = 1
        planes = [img.samples.astype(np.int64)]
        factors = [(1, 1)]
    else:
        hmax, vmax = SAMPLINGS[sampling]
        planes = _to_ycbcr(img.samples)
        factors = [(hmax, vmax), (1, 1), (1, 1)]
    mcus_x = math.ceil(w / (8 * hmax))
    mcus_y = math.ceil(h / (8 * vmax))
    pw, ph = mcus_x * 8 * hmax, mcus_y * 8 * vmax

    coefs = []
    for k, plane in enumerate(planes):
        plane = _pad_edge(plane, ph, pw)
        if k > 0:
            plane = _downsample(plane, vmax, hmax)
        coefs.append(_forward(plane, tables.luma if k == 0 else tables.chroma))

    blocks_x, blocks_y = math.ceil(w / 8), math.ceil(h / 8)
    logged = DcPlane(w, h, int(tables.luma[0, 0]), coefs[0][:blocks_y, :blocks_x, 0].reshape(-1))

    # Arrange blocks in MCU order.
    if len(coefs) == 1:
        ordered = coefs[0].reshape(-1, 64)
        slot_comp = np.zeros(1, dtype=np.int64)
    else:
        parts, slots = [], []
        for k, (c, (fh, fv)) in enumerate(zip(coefs, factors)):
            g = c.reshape(mcus_y, fv, mcus_x, fh, 64).transpose(0, 2, 1, 3, 4)
            parts.append(g.reshape(mcus_y * mcus_x, fv * fh, 64))
            slots += [k] * (fv * fh)
        ordered = np.concatenate(parts, axis=1).reshape(-1, 64)
        slot_comp = np.array(slots, dtype=np.int64)

    ncomp = len(coefs)
    kinds = [0] + [1] * (ncomp - 1)
    dc_codes = np.stack([_HUFF_ENC["dc"][t][0] for t in kinds])
    dc_sizes = np.stack([_HUFF_ENC["dc"][t][1] for t in kinds])
    ac_codes = np.stack([_HUFF_ENC["ac"][t][0] for t in kinds])
    ac_sizes = np.stack([_HUFF_ENC["ac"][t][1] for t in kinds])
    n_mcu = mcus_x * mcus_y
    buf = np.zeros(ordered.shape[0] * 420 + n_mcu * 2 + 16, dtype=np.uint8)
    n = _entropy.encode_scan(
        np.ascontiguousarray(ordered), slot_comp, dc_codes, dc_sizes, ac_codes, ac_sizes,
        restart_interval, ZIGZAG, buf,
    )
    if n < 0:
        raise RuntimeError(_entropy.MESSAGES[n])

    out = [b"\xff\xd8", _marker_segment(0xE0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00")]
    dqt = bytes([0]) + bytes(tables.luma.reshape(-1)[ZIGZAG].astype(np.uint8))
    if ncomp == 3:
        dqt += bytes([1]) + bytes(tables.chroma.reshape(-1)[ZIGZAG].astype(np.uint8))
    out.append(_marker_segment(0xDB, dqt))
    sof = struct.pack(">BHHB", 8, h, w, ncomp)
    for k, (fh, fv) in enumerate(factors):
        sof += bytes([k + 1, (fh << 4) | fv, kinds[k]])
    out.append(_marker_segment(0xC0, sof))
    dht = _dht_payload(0, 0, DC_LUMA) + _dht_payload(1, 0, AC_LUMA)
    if ncomp == 3:
        dht += _dht_payload(0, 1, DC_CHROMA) + _dht_payload(1, 1, AC_CHROMA)
    out.append(_marker_segment(0xC4, dht))
    if restart_interval:
        out.append(_marker_segment(0xDD, struct.pack(">H", restart_interval)))
    sos = bytes([ncomp])
    for k in range(ncomp):
        sos += bytes([k + 1, (kinds[k] << 4) | kinds[k]])
    sos += bytes([0, 63, 0])
    out.append(_marker_segment(0xDA, sos))
    out.append(buf[:n].tobytes())
    out.append(b"\xff\xd9")
    return b"".join(out), logged


def _inverse(coef, quant):
    """(by, bx, 64) quantized -> (by*8, bx*8) uint8 plane."""
    by, bx = coef.shape[:2]
    s = coef.reshape(by, bx, 8, 8).astype(np.float64) * quant
    pix = np.einsum("ux,byuw,wv->byxv", _T, s, _T, optimize=True) + 128.0
    pix = np.clip(round_half_away(pix), 0, 255)
    return pix.swapaxes(1, 2).reshape(by * 8, bx * 8)


def decode(data: bytes) -> PixelImage:
    """Full baseline decode: dequantize, inverse DCT, clamp, replicate chroma."""
    frame = read_frame(data)
    w, h = frame.width, frame.height
    planes = []
    for comp in frame.components:
        plane = _inverse(comp.coef, comp.quant)
        fy, fx = frame.vmax // comp.v, frame.hmax // comp.h
        if fy > 1 or fx > 1:
            plane = np.repeat(np.repeat(plane, fy, axis=0), fx, axis=1)
        planes.append(plane[:h, :w])
    if len(planes) == 1:
        return PixelImage(planes[0].astype(np.uint8))
    return PixelImage(_to_rgb(*planes))


def _area_weights(n_in, n_out):
    """Row-stochastic (n_out, n_in) overlap matrix of the box filter."""
    # Output pixel i covers [i*n_in/n_out, (i+1)*n_in/n_out) in input units;
    # work in units of 1/n_out so all edges are integers.
    lo = np.arange(n_out)[:, None] * n_in
    hi = lo + n_in
    src_lo = np.arange(n_in)[None, :] * n_out
    src_hi = src_lo + n_out
    overlap = np.clip(np.minimum(hi, src_hi) - np.maximum(lo, src_lo), 0, None)
    return overlap / n_in


def resize_area(img: PixelImage, out_w: int, out_h: int) -> PixelImage:
    """Downscale by area averaging (box filter), rounding half away from zero."""
    w, h = img.width_px, img.height_px
    if out_w > w or out_h > h:
        raise UpscaleUnsupported(f"cannot resize {w}x{h} up to {out_w}x{out_h}")
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be positive")
    if (out_w, out_h) == (w, h):
        return PixelImage(img.samples.copy())
    ay = _area_weights(h, out_h)
    ax = _area_weights(w, out_w)
    s = img.samples.astype(np.float64)
    if s.ndim == 2:
        out = ay @ s @ ax.T
    else:
        out = np.einsum("ij,jkc,lk->ilc", ay, s, ax, optimize=True)
    # Snap float noise off exact ties before rounding.
    out = np.round(out, 9)
    return PixelImage(np.clip(round_half_away(out), 0, 255).astype(np.uint8))
