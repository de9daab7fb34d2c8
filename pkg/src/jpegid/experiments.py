"""Desk-scale experiment pipelines: synthetic originals, databases, queries.

Manifests are UTF-8 ``key = value`` lines; ``#`` starts a comment.  Sizes
are written ``WIDTHxHEIGHT`` and lists are comma separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from jpegid.dc_feature import FeatureParams, calibrate_delta, calibrate_th, extract
from jpegid.feature_store import FeatureRecord, digest_of
from jpegid.jpeg_parse import parse_jpeg
from jpegid.jpeg_sim import SAMPLINGS, PixelImage, decode, encode, resize_area
from jpegid.matcher import EvalReport, MatchParams, evaluate


class ManifestError(ValueError):
    pass


def _cell_field(gen, width, height, cells_x, amp):
    """Uniform random values on a coarse grid, bilinearly interpolated to full size."""
    cells_y = max(2, round(cells_x * height / width))
    nodes = gen.uniform(-amp, amp, (cells_y + 1, cells_x + 1))
    xs = np.linspace(0, cells_x, width)
    ys = np.linspace(0, cells_y, height)
    rows = np.array([np.interp(xs, np.arange(cells_x + 1), r) for r in nodes])
    return np.array([np.interp(ys, np.arange(cells_y + 1), c) for c in rows.T]).T


def synthetic_originals(count: int, width: int, height: int, seed: int = 0,
                        detail: int = 32, amplitude: float = 40.0) -> list[PixelImage]:
    """Mutually similar RGB images: a shared smooth scene plus per-image variation.

    The per-image part is a random field on ``detail`` cells across the
    width.  Cells are laid out in normalized coordinates, so rendering at a
    larger size gives a smoother image of the same scene (like upscaling).
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    u = (xx + 0.5) / width
    v = (yy + 0.5) / height
    base = 128.0 + 10.0 * np.sin(2 * np.pi * (1.3 * u + 0.4 * v)) * np.cos(2 * np.pi * 0.9 * v)
    base += _cell_field(rng, width, height, 6, 10.0)
    tint = rng.uniform(-12, 12, 3)
    images = []
    for _ in range(count):
        g = np.random.default_rng(rng.integers(1 << 63))
        luma = base + _cell_field(g, width, height, detail, amplitude)
        grain = g.normal(0.0, 2.0, (height, width))
        rgb = np.stack([luma + tint[k] * (0.5 + v) for k in range(3)], axis=-1)
        rgb += grain[..., None]
        images.append(PixelImage(np.clip(np.rint(rgb), 0, 255).astype(np.uint8)))
    return images


def read_netpbm(path) -> PixelImage:
    """Binary PGM (P5) / PPM (P6) with maxval 255."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P6") or maxval != 255:
        raise ManifestError(f"{path}: only 8-bit binary PGM/PPM originals are supported")
    ch = 1 if magic == b"P5" else 3
    arr = np.frombuffer(data, dtype=np.uint8, count=w * h * ch, offset=pos)
    return PixelImage(arr.reshape((h, w) if ch == 1 else (h, w, 3)))


def write_netpbm(path, img: PixelImage) -> None:
    magic = b"P5" if img.channels == 1 else b"P6"
    head = magic + f"\n{img.width_px} {img.height_px}\n255\n".encode()
    Path(path).write_bytes(head + img.samples.tobytes())


def _size(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ManifestError(f"bad size {text!r}, expected WIDTHxHEIGHT") from None


def _ints(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ManifestError(f"bad integer list {text!r}") from None


def _sizes(text):
    return tuple(None if t.strip() == "same" else _size(t.strip()) for t in text.split(","))


@dataclass
class Manifest:
    originals: str = "synthetic"
    count: int = 32
    seed: int = 0
    size: tuple = (384, 288)
    upload_size: tuple | None = None
    enroll_qf: tuple = (95, 85, 75)
    query_qf: tuple = (71, 75, 80, 85)
    query_sizes: tuple = (None,)
    single_qf: tuple = (70, 75, 80, 85, 90, 95)
    double_qf: tuple = (70, 75, 80, 85, 90, 95)
    sampling: str = "420"
    delta_mode: str = "dequantized"
    base_dir: Path = field(default=Path("."), repr=False)

    _PARSERS = {
        "originals": str, "count": int, "seed": int, "size": _size,
        "upload_size": lambda t: None if t == "none" else _size(t),
        "enroll_qf": _ints, "query_qf": _ints, "query_sizes": _sizes,
        "single_qf": _ints, "double_qf": _ints, "sampling": str, "delta_mode": str,
    }

    @classmethod
    def parse(cls, text: str, base_dir=".") -> "Manifest":
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ManifestError(f"line {n}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in cls._PARSERS:
                raise ManifestError(f"line {n}: unknown key {key!r}")
            try:
                values[key] = cls._PARSERS[key](value)
            except ManifestError as exc:
                raise ManifestError(f"line {n}: {exc}") from None
            except ValueError:
                raise ManifestError(f"line {n}: bad value {value!r} for {key}") from None
        m = cls(**values, base_dir=Path(base_dir))
        if m.sampling not in SAMPLINGS:
            raise ManifestError(f"sampling must be one of {sorted(SAMPLINGS)}")
        if m.delta_mode not in ("dequantized", "quantized"):
            raise ManifestError("delta_mode must be 'dequantized' or 'quantized'")
        for qf in m.enroll_qf + m.query_qf + m.single_qf + m.double_qf:
            if not 1 <= qf <= 100:
                raise ManifestError(f"quality factor {qf} outside [1, 100]")
        if m.count < 0:
            raise ManifestError("count must be >= 0")
        return m

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ManifestError(f"cannot read manifest: {exc}") from exc
        return cls.parse(text, path.parent)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "base_dir"}

    def load_originals(self) -> list[tuple[str, PixelImage]]:
        if self.originals == "synthetic":
            imgs = synthetic_originals(self.count, *self.size, seed=self.seed)
            named = [(f"orig{k:04d}", img) for k, img in enumerate(imgs)]
        else:
            root = Path(self.originals)
            if not root.is_absolute():
                root = self.base_dir / root
            files = sorted(p for p in root.glob("*") if p.suffix.lower() in (".pgm", ".ppm"))
            if not files:
                raise ManifestError(f"no .pgm/.ppm originals in {root}")
            named = [(p.stem, read_netpbm(p)) for p in files]
        if self.upload_size is not None:
            named = [(n, resize_area(img, *self.upload_size)) for n, img in named]
        return named


def build_database(originals, qf: int, params: FeatureParams, sampling: str = "420"):
    """Encode every original at ``qf``; returns (records, uploaded_jpegs)."""
    records, jpegs = [], {}
    for name, img in originals:
        data, plane = encode(img, qf, sampling)
        records.append(FeatureRecord(name, extract(parse_jpeg(data), params), digest_of(data)))
        jpegs[name] = data
    return records, jpegs


def build_queries(jpegs: dict, query_qf, query_sizes, params: FeatureParams,
                  sampling: str = "420"):
    """Decode each upload, optionally area-resize, then re-encode at each query QF."""
    queries = []
    for name, data in jpegs.items():
        img = decode(data)
        for size in query_sizes:
            resized = img if size is None else resize_area(img, *size)
            for qf in query_qf:
                q, _ = encode(resized, qf, sampling)
                queries.append((extract(parse_jpeg(q), params), name))
    return queries


def run_eval(manifest: Manifest, params: FeatureParams | None = None,
             match_params: MatchParams | None = None) -> list[tuple[int, EvalReport]]:
    """One EvalReport per enrollment QF (one database each)."""
    params = params or FeatureParams()
    originals = manifest.load_originals()
    out = []
    for qf in manifest.enroll_qf:
        records, jpegs = build_database(originals, qf, params, manifest.sampling)
        queries = build_queries(jpegs, manifest.query_qf, manifest.query_sizes, params,
                                manifest.sampling)
        out.append((qf, evaluate(records, queries, match_params)))
    return out


def calibration_pairs(manifest: Manifest):
    """(single, double) DC-plane pairs over every single x double QF combination."""
    pairs = []
    for _, img in manifest.load_originals():
        for qf1 in manifest.single_qf:
            data1, _ = encode(img, qf1, manifest.sampling)
            single = parse_jpeg(data1)
            decoded = decode(data1)
            for qf2 in manifest.double_qf:
                data2, _ = encode(decoded, qf2, manifest.sampling)
                pairs.append((single, parse_jpeg(data2)))
    return pairs


def calibrate(pairs, dequantized: bool = True) -> tuple[int, int]:
    """Dead zone first, then the step size given that dead zone."""
    pairs = list(pairs)
    th = calibrate_th(pairs)
    return th, calibrate_delta(pairs, th, dequantized=dequantized)


def run_calibration(manifest: Manifest) -> tuple[int, int]:
    return calibrate(calibration_pairs(manifest), manifest.delta_mode == "dequantized")


def blocks(width: int, height: int) -> int:
    return math.ceil(width / 8) * math.ceil(height / 8)
