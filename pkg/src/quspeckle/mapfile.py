"""Bit-exact persistence for fields, maps, and manifests.

MapFile byte layout (little-endian throughout):

    offset 0   magic            4 bytes, ASCII "QUSF"
    offset 4   version          uint32, currently 1
    offset 8   height           uint32
    offset 12  width            uint32
    offset 16  channel count    uint32
    offset 20  value encoding   8 bytes, ASCII "f32le" NUL-padded
    offset 28  channel names    per channel: uint16 byte length + UTF-8 bytes
    then       payload          per channel, row-major height*width float32,
                                channels concatenated in header order

Invalid pixels are stored as quiet NaN; readers derive a validity mask from
that sentinel. The layout is the complete contract between this toolkit and
external producers/consumers (e.g. a separately-trained estimator), so keep
it frozen: bump ``version`` for any change.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedFileError, ParameterDomainError

__all__ = ["MAGIC", "FORMAT_VERSION", "MapData", "write_map", "read_map", "render_pgm",
           "Manifest", "ImageRecord", "load_manifest"]

MAGIC = b"QUSF"
FORMAT_VERSION = 1
_ENCODING = b"f32le\x00\x00\x00"
_HEADER = struct.Struct("<4sIIII8s")


@dataclass
class MapData:
    """In-memory form of a map file: named float32 channels of one shape."""

    height: int
    width: int
    channels: dict[str, np.ndarray]

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise KeyError(f"no channel {name!r}; file has {sorted(self.channels)}")
        return self.channels[name]


def write_map(path, channels: dict[str, np.ndarray]) -> None:
    """Write named 2-D channels to ``path`` in the MapFile layout.

    All channels must share one shape. Values are stored as float32; NaN is
    allowed only as the invalid-pixel sentinel, infinities are rejected.
    """
    if not channels:
        raise ParameterDomainError("write_map needs at least one channel")
    names = list(channels)
    if len(set(names)) != len(names):
        raise ParameterDomainError("channel names must be unique")
    arrays = []
    shape = None
    for name, arr in channels.items():
        a = np.asarray(arr, dtype=np.float32)
        if a.ndim != 2:
            raise ParameterDomainError(f"channel {name!r} must be 2-D, got shape {a.shape}")
        if shape is None:
            shape = a.shape
        elif a.shape != shape:
            raise ParameterDomainError(
                f"channel {name!r} shape {a.shape} != first channel shape {shape}"
            )
        if np.any(np.isinf(a)):
            raise ParameterDomainError(f"channel {name!r} contains non-finite, non-NaN values")
        arrays.append(a)
    height, width = shape
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, height, width, len(arrays), _ENCODING))
            for name in names:
                raw = name.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise ParameterDomainError(f"channel name too long: {name!r}")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
            for a in arrays:
                fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())
    except OSError as exc:
        raise OSError(f"failed writing map file {path}: {exc}") from exc


def read_map(path) -> MapData:
    """Read a MapFile; exact inverse of :func:`write_map`."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise OSError(f"failed reading map file {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise MalformedFileError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, height, width, n_channels, encoding = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise MalformedFileError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise MalformedFileError(f"{path}: unsupported version {version}")
    if encoding != _ENCODING:
        raise MalformedFileError(f"{path}: unknown value encoding {encoding!r}")
    if n_channels == 0:
        raise MalformedFileError(f"{path}: zero channels")
    offset = _HEADER.size
    names = []
    for _ in range(n_channels):
        if offset + 2 > len(blob):
            raise MalformedFileError(f"{path}: truncated channel name table")
        (n_bytes,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + n_bytes > len(blob):
            raise MalformedFileError(f"{path}: truncated channel name")
        names.append(blob[offset : offset + n_bytes].decode("utf-8"))
        offset += n_bytes
    if len(set(names)) != len(names):
        raise MalformedFileError(f"{path}: duplicate channel names {names}")
    expected = height * width * n_channels * 4
    payload = blob[offset:]
    if len(payload) != expected:
        raise MalformedFileError(
            f"{path}: payload length {len(payload)} != height*width*channels*4 = {expected}"
        )
    per = height * width * 4
    channels = {}
    for i, name in enumerate(names):
        a = np.frombuffer(payload[i * per : (i + 1) * per], dtype="<f4").reshape(height, width)
        channels[name] = a.copy()
    return MapData(height=int(height), width=int(width), channels=channels)


def render_pgm(values: np.ndarray, value_range: tuple[float, float], path) -> None:
    """Render a 2-D map to an 8-bit binary PGM.

    Values map affinely from ``value_range`` onto 0..255 with clamping;
    non-finite (invalid) pixels render as 0.
    """
    lo, hi = value_range
    if not lo < hi:
        raise ParameterDomainError(f"need lo < hi in render range, got {value_range}")
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise ParameterDomainError(f"render_pgm needs a 2-D map, got shape {a.shape}")
    scaled = (a - lo) / (hi - lo) * 255.0
    scaled = np.where(np.isfinite(scaled), np.clip(scaled, 0.0, 255.0), 0.0)
    pixels = np.round(scaled).astype(np.uint8)
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
            fh.write(pixels.tobytes())
    except OSError as exc:
        raise OSError(f"failed writing PGM {path}: {exc}") from exc


# --- dataset manifests --------------------------------------------------------

MANIFEST_NAME = "manifest.json"


@dataclass
class ImageRecord:
    index: int
    seed: int
    split: str
    envelope: str
    truth: str


@dataclass
class Manifest:
    """Dataset inventory: generation config echo plus one record per image."""

    config: dict
    images: list[ImageRecord] = field(default_factory=list)
    toolkit_version: str = ""
    format_version: int = FORMAT_VERSION

    def to_json(self) -> str:
        payload = {
            "format_version": self.format_version,
            "toolkit_version": self.toolkit_version,
            "config": self.config,
            "images": [vars(rec) for rec in self.images],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def save(self, directory) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(self.to_json())
        return path

    def split_records(self, split: str | None) -> list[ImageRecord]:
        if split is None:
            return list(self.images)
        return [rec for rec in self.images if rec.split == split]


def load_manifest(directory, validate: bool = True) -> Manifest:
    """Load and optionally validate a dataset manifest.

    Validation checks that referenced files exist and parse, and that no
    image index appears in two splits.
    """
    directory = Path(directory)
    path = directory / MANIFEST_NAME
    if not path.exists():
        raise MalformedFileError(f"no {MANIFEST_NAME} in {directory}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("config", "images"):
        if key not in payload:
            raise MalformedFileError(f"{path}: missing key {key!r}")
    try:
        images = [ImageRecord(**rec) for rec in payload["images"]]
    except TypeError as exc:
        raise MalformedFileError(f"{path}: malformed image record: {exc}") from exc
    manifest = Manifest(
        config=payload["config"],
        images=images,
        toolkit_version=payload.get("toolkit_version", ""),
        format_version=payload.get("format_version", FORMAT_VERSION),
    )
    if validate:
        seen = {}
        for rec in manifest.images:
            if rec.index in seen:
                raise MalformedFileError(
                    f"{path}: image index {rec.index} assigned to both "
                    f"{seen[rec.index]!r} and {rec.split!r}"
                )
            seen[rec.index] = rec.split
        for rec in manifest.images:
            for rel in (rec.envelope, rec.truth):
                fpath = directory / rel
                if not fpath.exists():
                    raise MalformedFileError(f"{path}: referenced file missing: {rel}")
                read_map(fpath)
    return manifest
