"""On-disk database of enrolled features: one ``.dcf`` file per record plus a manifest.

Record layout (little-endian)::

    magic    8s   b"DCFEAT01"
    format   u16  1
    width    u32
    height   u32
    th       u16
    delta    u32
    count    u32
    values   count x i32
    digest   32s  SHA-256 of the enrolled JPEG

The manifest ``manifest.tsv`` starts with a version header line and then
holds one ``id<TAB>file<TAB>WxH`` line per record.
"""

from __future__ import annotations

import datetime as dt
import fcntl
import hashlib
import logging
import os
import re
import struct
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from jpegid.dc_feature import FeatureParams, FeatureVector
from jpegid.errors import (
    DuplicateId,
    IoFailure,
    NotFound,
    ParamsMismatch,
    VersionMismatch,
)

log = logging.getLogger(__name__)

MAGIC = b"DCFEAT01"
FORMAT_VERSION = 1
STORE_VERSION = 1
MANIFEST = "manifest.tsv"
_HEADER = struct.Struct("<8sHIIHII")
DIGEST_LEN = 32


def encode_record(feature: FeatureVector, digest: bytes) -> bytes:
    if len(digest) != DIGEST_LEN:
        raise ValueError("source digest must be 32 bytes")
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, feature.width_px, feature.height_px,
                        feature.params.th, feature.params.delta, feature.v.size)
    return head + feature.v.astype("<i4").tobytes() + bytes(digest)


def decode_record(data: bytes) -> tuple[FeatureVector, bytes]:
    if len(data) < _HEADER.size:
        raise IoFailure("record too short")
    magic, fmt, w, h, th, delta, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise VersionMismatch(f"bad record magic {magic!r}")
    if fmt != FORMAT_VERSION:
        raise VersionMismatch(f"unknown record format version {fmt}")
    end = _HEADER.size + 4 * count
    if len(data) != end + DIGEST_LEN:
        raise IoFailure("record length does not match its header")
    v = np.frombuffer(data, dtype="<i4", count=count, offset=_HEADER.size).astype(np.int32)
    feature = FeatureVector(FeatureParams(th, delta), w, h, v)
    return feature, bytes(data[end:])


def digest_of(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(eq=False)
class FeatureRecord:
    image_id: str
    feature: FeatureVector
    source_digest: bytes = bytes(DIGEST_LEN)
    created_at: dt.datetime = field(
        default_factory=lambda: dt.datetime.now(dt.timezone.utc).replace(microsecond=0)
    )

    def __eq__(self, other):
        if not isinstance(other, FeatureRecord):
            return NotImplemented
        return (self.image_id == other.image_id and self.feature == other.feature
                and self.source_digest == other.source_digest)


def _file_name(image_id: str) -> str:
    stem = re.sub(r"[^A-Za-z0-9._-]", "_", image_id)[:64]
    tag = hashlib.sha1(image_id.encode("utf-8")).hexdigest()[:8]
    return f"{stem}.{tag}.dcf"


class FeatureStore:
    """Directory-backed feature database.

    Feature parameters are fixed when the store is created and every record
    put into it must use them.  Readers may run concurrently; writers hold
    an exclusive ``flock`` on the manifest.
    """

    def __init__(self, root, params: FeatureParams | None = None, create: bool = True):
        self.root = Path(root)
        self._manifest = self.root / MANIFEST
        if not self._manifest.exists():
            if not create:
                raise NotFound(f"no feature store at {self.root}")
            try:
                self.root.mkdir(parents=True, exist_ok=True)
                with open(self._manifest, "x", encoding="utf-8") as f:
                    p = params or FeatureParams()
                    f.write(self._header_line(p))
            except FileExistsError:
                pass
            except OSError as exc:
                raise IoFailure(str(exc)) from exc
        self.params = self._read_header()
        if params is not None and params != self.params:
            raise ParamsMismatch(f"store uses {self.params}, requested {params}")

    @staticmethod
    def _header_line(p: FeatureParams) -> str:
        return f"# jpegid-store version={STORE_VERSION} th={p.th} delta={p.delta}\n"

    def _read_header(self) -> FeatureParams:
        try:
            with open(self._manifest, encoding="utf-8") as f:
                first = f.readline()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        m = re.fullmatch(r"# jpegid-store version=(\d+) th=(\d+) delta=(\d+)\n?", first)
        if not m:
            raise VersionMismatch(f"unrecognized manifest header {first!r}")
        if int(m.group(1)) != STORE_VERSION:
            raise VersionMismatch(f"unknown store version {m.group(1)}")
        return FeatureParams(int(m.group(2)), int(m.group(3)))

    def _entries(self) -> dict[str, tuple[str, str]]:
        entries = {}
        with open(self._manifest, encoding="utf-8") as f:
            next(f, None)
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise IoFailure(f"malformed manifest line {line!r}")
                entries[parts[0]] = (parts[1], parts[2])
        return entries

    @contextmanager
    def _locked(self):
        with open(self._manifest, "a+", encoding="utf-8") as f:
            fcntl.flock(f, fcntl.LOCK_EX)
            try:
                yield f
            finally:
                fcntl.flock(f, fcntl.LOCK_UN)

    def put(self, record: FeatureRecord, overwrite: bool = False) -> None:
        image_id = record.image_id
        if not image_id or any(c in image_id for c in "\t\n\r"):
            raise ValueError(f"invalid image id {image_id!r}")
        if record.feature.params != self.params:
            raise ParamsMismatch(f"store uses {self.params}, record has {record.feature.params}")
        name = _file_name(image_id)
        f = record.feature
        try:
            with self._locked() as manifest:
                entries = self._entries()
                if image_id in entries and not overwrite:
                    raise DuplicateId(f"image id {image_id!r} already enrolled")
                tmp = self.root / (name + ".tmp")
                tmp.write_bytes(encode_record(f, record.source_digest))
                os.replace(tmp, self.root / name)
                ts = record.created_at.timestamp()
                os.utime(self.root / name, (ts, ts))
                line = f"{image_id}\t{name}\t{f.width_px}x{f.height_px}\n"
                if image_id in entries:
                    entries[image_id] = (name, f"{f.width_px}x{f.height_px}")
                    self._rewrite(entries)
                else:
                    manifest.write(line)
                    manifest.flush()
                    os.fsync(manifest.fileno())
        except OSError as exc:
            raise IoFailure(str(exc)) from exc

    def _rewrite(self, entries):
        tmp = self._manifest.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(self._header_line(self.params))
            for image_id, (name, dims) in entries.items():
                f.write(f"{image_id}\t{name}\t{dims}\n")
        os.replace(tmp, self._manifest)

    def _load(self, image_id: str, name: str) -> FeatureRecord:
        path = self.root / name
        try:
            data = path.read_bytes()
            mtime = path.stat().st_mtime
        except OSError as exc:
            raise IoFailure(f"cannot read record {image_id!r}: {exc}") from exc
        feature, digest = decode_record(data)
        created = dt.datetime.fromtimestamp(mtime, dt.timezone.utc)
        return FeatureRecord(image_id, feature, digest, created)

    def get(self, image_id: str) -> FeatureRecord:
        entries = self._entries()
        if image_id not in entries:
            raise NotFound(f"image id {image_id!r} not enrolled")
        return self._load(image_id, entries[image_id][0])

    def scan(self) -> list[FeatureRecord]:
        """Every record, sorted by image id."""
        entries = self._entries()
        known = {name for name, _ in entries.values()}
        for path in sorted(self.root.glob("*.dcf")):
            if path.name not in known:
                log.warning("ignoring orphan record file %s (not in manifest)", path.name)
        return [self._load(i, entries[i][0]) for i in sorted(entries)]

    def ids(self) -> list[str]:
        return sorted(self._entries())

    def __len__(self) -> int:
        return len(self._entries())

    def __contains__(self, image_id) -> bool:
        return image_id in self._entries()
