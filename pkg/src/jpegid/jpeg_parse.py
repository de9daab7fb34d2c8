"""Baseline JPEG bitstream parsing down to quantized DCT coefficients.

Nothing here runs an inverse DCT: ``parse_jpeg`` reads the luminance DC
plane straight out of the entropy-coded data.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from jpegid import _entropy
from jpegid.errors import CorruptStream, DimensionOverflow, UnsupportedFormat
from jpegid.tables import ZIGZAG, build_lookup

SOI, EOI, SOS, DHT, DQT, DRI, DNL = 0xD8, 0xD9, 0xDA, 0xC4, 0xDB, 0xDD, 0xDC
_SEQUENTIAL_HUFFMAN = (0xC0, 0xC1)
_PROGRESSIVE = (0xC2, 0xC6, 0xCA, 0xCE)
_LOSSLESS = (0xC3, 0xC7, 0xCB, 0xCF)
_HIERARCHICAL = (0xC5, 0xC6, 0xC7, 0xCD, 0xCE, 0xCF)
_ARITHMETIC = (0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF, 0xCC)
_STANDALONE = set(range(0xD0, 0xD8)) | {0x01}


@dataclass(eq=False)
class DcPlane:
    """Quantized luminance DC values of one JPEG, raster order over the block grid."""

    width_px: int
    height_px: int
    q_dc: int
    dc: np.ndarray

    def __post_init__(self):
        self.dc = np.ascontiguousarray(self.dc, dtype=np.int32).reshape(-1)
        if self.q_dc < 1:
            raise ValueError(f"q_dc must be >= 1, got {self.q_dc}")
        if self.dc.size != self.blocks_x * self.blocks_y:
            raise ValueError(
                f"dc has {self.dc.size} entries, expected {self.blocks_x}x{self.blocks_y}"
            )

    @property
    def blocks_x(self) -> int:
        return math.ceil(self.width_px / 8)

    @property
    def blocks_y(self) -> int:
        return math.ceil(self.height_px / 8)

    @property
    def num_blocks(self) -> int:
        return self.dc.size

    def grid(self) -> np.ndarray:
        """The DC plane as a (blocks_y, blocks_x) array; element [y, x] is block m = y*blocks_x + x."""
        return self.dc.reshape(self.blocks_y, self.blocks_x)

    def __eq__(self, other):
        if not isinstance(other, DcPlane):
            return NotImplemented
        return (
            (self.width_px, self.height_px, self.q_dc)
            == (other.width_px, other.height_px, other.q_dc)
            and np.array_equal(self.dc, other.dc)
        )


@dataclass(eq=False)
class Component:
    cid: int
    h: int
    v: int
    tq: int
    blocks_x: int
    blocks_y: int
    # Padded grid (whole MCUs); coef has shape (padded_y, padded_x, 64), natural order.
    padded_x: int
    padded_y: int
    coef: np.ndarray | None = None
    quant: np.ndarray | None = None
    scanned: bool = False


@dataclass(eq=False)
class Frame:
    width: int
    height: int
    marker: int
    components: list[Component]
    hmax: int
    vmax: int
    mcus_x: int
    mcus_y: int
    qtables: dict = field(default_factory=dict)
    restart_interval: int = 0

    @property
    def sampling(self) -> str:
        """Human-readable luma sampling, e.g. '4:2:0' (gray for 1 component)."""
        if len(self.components) == 1:
            return "gray"
        y = self.components[0]
        return {(1, 1): "4:4:4", (2, 1): "4:2:2", (2, 2): "4:2:0", (1, 2): "4:4:0"}.get(
            (y.h, y.v), f"{y.h}x{y.v}"
        )


def _u16(data, pos):
    return (data[pos] << 8) | data[pos + 1]


def _segment(data, pos):
    """Return (payload, next_pos) for the marker segment whose length field is at pos."""
    if pos + 2 > len(data):
        raise CorruptStream("truncated marker segment")
    length = _u16(data, pos)
    if length < 2 or pos + length > len(data):
        raise CorruptStream("marker segment runs past end of data")
    return data[pos + 2:pos + length], pos + length


def _read_dqt(payload, qtables):
    i = 0
    while i < len(payload):
        pq, tq = payload[i] >> 4, payload[i] & 15
        i += 1
        if pq == 0:
            raw = np.frombuffer(payload[i:i + 64], dtype=np.uint8).astype(np.int64)
            i += 64
        else:
            raw = np.frombuffer(payload[i:i + 128], dtype=">u2").astype(np.int64)
            i += 128
        if raw.size != 64 or tq > 3:
            raise CorruptStream("malformed DQT segment")
        table = np.zeros(64, dtype=np.int64)
        table[ZIGZAG] = raw
        if table.min() < 1:
            raise CorruptStream("quantization table contains zero")
        qtables[tq] = table.reshape(8, 8)


def _read_dht(payload, luts, defined):
    i = 0
    while i < len(payload):
        if i + 17 > len(payload):
            raise CorruptStream("malformed DHT segment")
        tc, th = payload[i] >> 4, payload[i] & 15
        counts = list(payload[i + 1:i + 17])
        total = sum(counts)
        symbols = list(payload[i + 17:i + 17 + total])
        i += 17 + total
        if tc > 1 or th > 3 or len(symbols) != total:
            raise CorruptStream("malformed DHT segment")
        slot = th + 4 * tc
        luts[slot] = build_lookup(counts, symbols)
        defined.add(slot)


def _read_sof(payload, marker):
    if marker in _PROGRESSIVE:
        raise UnsupportedFormat("progressive JPEG is not supported")
    if marker in _ARITHMETIC:
        raise UnsupportedFormat("arithmetic-coded JPEG is not supported")
    if marker in _LOSSLESS or marker in _HIERARCHICAL:
        raise UnsupportedFormat("lossless/hierarchical JPEG is not supported")
    if len(payload) < 6:
        raise CorruptStream("truncated SOF segment")
    precision, height, width, nc = struct.unpack(">BHHB", payload[:6])
    if precision != 8:
        raise UnsupportedFormat(f"{precision}-bit sample precision is not supported")
    if nc not in (1, 3):
        raise UnsupportedFormat(f"{nc} components are not supported")
    if width == 0 or height == 0 or width > 65535 or height > 65535:
        raise DimensionOverflow(f"bad image dimensions {width}x{height}")
    if len(payload) < 6 + 3 * nc:
        raise CorruptStream("truncated SOF segment")
    raw = []
    for k in range(nc):
        cid, hv, tq = payload[6 + 3 * k:9 + 3 * k]
        h, v = hv >> 4, hv & 15
        if not (1 <= h <= 4 and 1 <= v <= 4) or tq > 3:
            raise CorruptStream("bad component sampling factors")
        raw.append((cid, h, v, tq))
    hmax = max(r[1] for r in raw)
    vmax = max(r[2] for r in raw)
    mcus_x = math.ceil(width / (8 * hmax))
    mcus_y = math.ceil(height / (8 * vmax))
    comps = []
    for cid, h, v, tq in raw:
        bx = math.ceil(math.ceil(width * h / hmax) / 8)
        by = math.ceil(math.ceil(height * v / vmax) / 8)
        comps.append(Component(cid, h, v, tq, bx, by, mcus_x * h, mcus_y * v))
    return Frame(width, height, marker, comps, hmax, vmax, mcus_x, mcus_y)


def _entropy_end(arr, start):
    """Index of the first marker (other than RSTn) at or after start."""
    tail = arr[start:]
    ff = np.flatnonzero(tail[:-1] == 0xFF)
    if ff.size:
        nxt = tail[ff + 1]
        is_marker = (nxt != 0) & ((nxt < 0xD0) | (nxt > 0xD7))
        hits = ff[is_marker]
        if hits.size:
            return start + int(hits[0])
    return len(arr)


def _decode_scan(data, arr, pos, payload, frame, luts, defined):
    if frame is None:
        raise CorruptStream("SOS before SOF")
    if not frame.qtables:
        raise CorruptStream("SOS before DQT")
    if not defined:
        raise CorruptStream("SOS before DHT")
    ns = payload[0] if payload else 0
    if ns < 1 or ns > 4 or len(payload) < 1 + 2 * ns + 3:
        raise CorruptStream("malformed SOS segment")
    by_id = {c.cid: c for c in frame.components}
    scan = []
    for k in range(ns):
        cid, tables = payload[1 + 2 * k], payload[2 + 2 * k]
        if cid not in by_id:
            raise CorruptStream(f"scan references unknown component {cid}")
        td, ta = tables >> 4, tables & 15
        if td > 3 or ta > 3 or td not in defined or (ta + 4) not in defined:
            raise CorruptStream("scan references undefined Huffman table")
        scan.append((by_id[cid], td, ta + 4))
    ss, se, a = payload[1 + 2 * ns:4 + 2 * ns]
    if ss != 0 or se != 63 or a != 0:
        raise UnsupportedFormat("spectral selection / successive approximation (progressive) scan")

    for comp, _, _ in scan:
        if comp.coef is None:
            comp.coef = np.zeros((comp.padded_y, comp.padded_x, 64), dtype=np.int32)
        if comp.tq not in frame.qtables:
            raise CorruptStream(f"component {comp.cid} uses undefined quantization table")
        comp.quant = frame.qtables[comp.tq]

    if ns == 1:
        comp = scan[0][0]
        hs = vs = np.ones(1, dtype=np.int64)
        mcus_x, mcus_y = comp.blocks_x, comp.blocks_y
    else:
        hs = np.array([c.h for c, _, _ in scan], dtype=np.int64)
        vs = np.array([c.v for c, _, _ in scan], dtype=np.int64)
        mcus_x, mcus_y = frame.mcus_x, frame.mcus_y

    # One flat output buffer; component row offsets index into it.
    sizes = [c.padded_x * c.padded_y for c, _, _ in scan]
    offsets = np.cumsum([0] + sizes[:-1]).astype(np.int64)
    out = np.zeros((sum(sizes), 64), dtype=np.int32)
    end = _entropy_end(arr, pos)
    status, _ = _entropy.decode_scan(
        arr, pos, end, luts,
        np.array([td for _, td, _ in scan], dtype=np.int64),
        np.array([ta for _, _, ta in scan], dtype=np.int64),
        hs, vs, offsets,
        np.array([c.padded_x for c, _, _ in scan], dtype=np.int64),
        mcus_x, mcus_y, frame.restart_interval, ZIGZAG, out,
    )
    if status != _entropy.OK:
        raise CorruptStream(_entropy.MESSAGES[status])
    for (comp, _, _), off, size in zip(scan, offsets, sizes):
        comp.coef[...] = out[off:off + size].reshape(comp.padded_y, comp.padded_x, 64)
        comp.scanned = True
    return end


def read_frame(data: bytes) -> Frame:
    """Parse a baseline JPEG and entropy-decode every component's coefficients."""
    data = bytes(data)
    arr = np.frombuffer(data, dtype=np.uint8)
    if len(data) < 4 or data[0] != 0xFF or data[1] != SOI:
        raise CorruptStream("missing SOI marker")
    luts = np.zeros((8, 1 << 16), dtype=np.int32)
    defined: set[int] = set()
    qtables: dict[int, np.ndarray] = {}
    frame = None
    restart = 0
    pos = 2
    while True:
        if pos >= len(data):
            raise CorruptStream("missing EOI marker")
        if data[pos] != 0xFF:
            raise CorruptStream(f"expected marker at offset {pos}")
        while pos < len(data) and data[pos] == 0xFF:
            pos += 1
        if pos >= len(data):
            raise CorruptStream("missing EOI marker")
        marker = data[pos]
        pos += 1
        if marker == EOI:
            break
        if marker in _STANDALONE:
            continue
        if marker == SOI:
            raise CorruptStream("unexpected SOI")
        payload, nxt = _segment(data, pos)
        if marker == DQT:
            _read_dqt(payload, qtables)
        elif marker == DHT:
            _read_dht(payload, luts, defined)
        elif marker == DRI:
            if len(payload) < 2:
                raise CorruptStream("malformed DRI segment")
            restart = _u16(payload, 0)
            if frame is not None:
                frame.restart_interval = restart
        elif 0xC0 <= marker <= 0xCF and marker not in (DHT, 0xC8, 0xCC):
            if frame is not None:
                raise UnsupportedFormat("multiple frames")
            frame = _read_sof(payload, marker)
            frame.qtables = qtables
            frame.restart_interval = restart
        elif marker == 0xCC:
            raise UnsupportedFormat("arithmetic-coded JPEG is not supported")
        elif marker == SOS:
            if frame is not None:
                frame.restart_interval = restart
            nxt = _decode_scan(data, arr, nxt, payload, frame, luts, defined)
        pos = nxt
    if frame is None:
        raise CorruptStream("no SOF segment")
    for comp in frame.components:
        if not comp.scanned:
            raise CorruptStream(f"component {comp.cid} was never scanned")
    return frame


def dc_plane(frame: Frame) -> DcPlane:
    y = frame.components[0]
    dc = y.coef[:y.blocks_y, :y.blocks_x, 0]
    return DcPlane(frame.width, frame.height, int(y.quant[0, 0]), dc.reshape(-1))


def parse_jpeg(data: bytes) -> DcPlane:
    """Extract the quantized luminance DC plane of a baseline JPEG."""
    return dc_plane(read_frame(data))
