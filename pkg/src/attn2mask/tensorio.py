"""Bit-exact file I/O for attention stacks, masks, and feature images.

Attention stacks live in the "ATNS" container: a 16-byte header (magic
``ATNS``, u32 version=1, u32 token_count, u32 record_count) followed by one
ragged record per map: u32 step, layer, token, height, width, then
height*width little-endian float32 values in row-major order.  Ragged
records let 8x8 and 64x64 maps share a file without padding.

Masks are P5 binary greymaps (maxval 255, pixels >= 128 read as
foreground); feature images are P5 (grey) or P6 (RGB) with 8-bit samples.
Readers reject invalid files instead of repairing them, and every
container error names the byte offset at which it was detected.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDimensions,
    BadHeader,
    BadMagic,
    BadVersion,
    DuplicateRecordKey,
    IoFailure,
    NegativeValue,
    NonFiniteValue,
    TokenOutOfRange,
    TruncatedFile,
    TruncatedPixels,
)

ATNS_MAGIC = b"ATNS"
ATNS_VERSION = 1
MAX_MAP_DIM = 4096

_HEADER = struct.Struct("<4sIII")
_RECORD_HEADER = struct.Struct("<IIIII")


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class AttentionRecord:
    """One attention map for a (step, layer, token) triple."""

    step: int
    layer: int
    token: int
    values: np.ndarray  # (height, width) float32, finite, >= 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.ndim != 2:
            raise BadDimensions(f"attention map must be 2-D, got shape {vals.shape}")
        h, w = vals.shape
        if not (1 <= h <= MAX_MAP_DIM and 1 <= w <= MAX_MAP_DIM):
            raise BadDimensions(f"map dimensions {h}x{w} outside [1, {MAX_MAP_DIM}]")
        if min(self.step, self.layer, self.token) < 0:
            raise BadDimensions("step/layer/token indices must be non-negative")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue("attention map contains NaN or Inf")
        if np.any(vals < 0):
            raise NegativeValue("attention map contains negative values")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.step, self.layer, self.token)


@dataclass(frozen=True)
class AttentionStack:
    """An ordered collection of attention records plus the declared token count."""

    records: tuple[AttentionRecord, ...]
    token_count: int

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.token_count < 1:
            raise BadDimensions("token_count must be positive")
        seen = set()
        for rec in self.records:
            if rec.key in seen:
                raise DuplicateRecordKey(f"duplicate (step, layer, token) {rec.key}")
            seen.add(rec.key)
            if rec.token >= self.token_count:
                raise TokenOutOfRange(
                    f"token {rec.token} >= declared token_count {self.token_count}"
                )

    def records_for_token(self, token: int) -> list[AttentionRecord]:
        return [r for r in self.records if r.token == token]


@dataclass(frozen=True)
class BinaryMask:
    """Foreground/background mask; bits hold exactly 0 or 1."""

    bits: np.ndarray  # (height, width) uint8 in {0, 1}

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise BadDimensions(f"mask must be 2-D, got shape {bits.shape}")
        if np.any(bits > 1):
            raise BadHeader("mask values must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(bits))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def complement(self) -> "BinaryMask":
        return BinaryMask(1 - self.bits)


@dataclass(frozen=True)
class FeatureImage:
    """8-bit grey or RGB image carrying the color/position features."""

    samples: np.ndarray  # (height, width, channels) uint8, channels in {1, 3}

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.uint8)
        if s.ndim == 2:
            s = s[:, :, np.newaxis]
        if s.ndim != 3 or s.shape[2] not in (1, 3):
            raise BadDimensions(f"feature image must have 1 or 3 channels, got shape {s.shape}")
        object.__setattr__(self, "samples", _frozen(s))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]


# --------------------------------------------------------------------------
# ATNS container
# --------------------------------------------------------------------------

def read_attention_stack(path) -> AttentionStack:
    """Read and validate an ATNS file.

    Raises BadMagic, BadVersion, TruncatedFile, DuplicateRecordKey,
    NonFiniteValue, NegativeValue, BadDimensions, or TokenOutOfRange; each
    message names the byte offset of the offending data.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(data) < _HEADER.size:
        raise TruncatedFile(f"file ends at byte {len(data)}, header needs {_HEADER.size}")
    magic, version, token_count, record_count = _HEADER.unpack_from(data, 0)
    if magic != ATNS_MAGIC:
        raise BadMagic(f"bad magic {magic!r} at byte 0")
    if version != ATNS_VERSION:
        raise BadVersion(f"unsupported version {version} at byte 4")
    if token_count < 1:
        raise BadDimensions(f"token_count {token_count} at byte 8 must be positive")

    offset = _HEADER.size
    records = []
    seen: set[tuple[int, int, int]] = set()
    for idx in range(record_count):
        if offset + _RECORD_HEADER.size > len(data):
            raise TruncatedFile(
                f"record {idx} header at byte {offset} exceeds file size {len(data)}"
            )
        step, layer, token, height, width = _RECORD_HEADER.unpack_from(data, offset)
        if not (1 <= height <= MAX_MAP_DIM and 1 <= width <= MAX_MAP_DIM):
            raise BadDimensions(
                f"record {idx} at byte {offset}: dimensions {height}x{width} "
                f"outside [1, {MAX_MAP_DIM}]"
            )
        if token >= token_count:
            raise TokenOutOfRange(
                f"record {idx} at byte {offset}: token {token} >= token_count {token_count}"
            )
        key = (step, layer, token)
        if key in seen:
            raise DuplicateRecordKey(f"record {idx} at byte {offset}: duplicate key {key}")
        seen.add(key)
        offset += _RECORD_HEADER.size

        nbytes = height * width * 4
        if offset + nbytes > len(data):
            raise TruncatedFile(
                f"record {idx} values at byte {offset} need {nbytes} bytes, "
                f"file ends at {len(data)}"
            )
        vals = np.frombuffer(data, dtype="<f4", count=height * width, offset=offset)
        vals = vals.reshape(height, width)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue(f"record {idx} values at byte {offset} contain NaN or Inf")
        if np.any(vals < 0):
            raise NegativeValue(f"record {idx} values at byte {offset} contain negatives")
        records.append(AttentionRecord(step, layer, token, vals))
        offset += nbytes

    return AttentionStack(tuple(records), token_count)


def write_attention_stack(stack: AttentionStack, path) -> None:
    """Serialize a stack; read_attention_stack reproduces it bit-exactly."""
    chunks = [_HEADER.pack(ATNS_MAGIC, ATNS_VERSION, stack.token_count, len(stack.records))]
    for rec in stack.records:
        chunks.append(
            _RECORD_HEADER.pack(rec.step, rec.layer, rec.token, rec.height, rec.width)
        )
        chunks.append(rec.values.astype("<f4", copy=False).tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(chunks))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------
# P5 / P6 images
# --------------------------------------------------------------------------

def _parse_pnm_header(data: bytes, path, kinds: tuple[bytes, ...]):
    """Parse a binary PNM header; returns (kind, width, height, offset)."""
    if len(data) < 2 or data[:2] not in kinds:
        raise BadHeader(f"{path}: not a {'/'.join(k.decode() for k in kinds)} file")
    kind = data[:2]
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise BadHeader(f"{path}: truncated header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise BadHeader(f"{path}: non-numeric header token {tok!r}")
        fields.append(int(tok))
    if pos >= len(data):
        raise BadHeader(f"{path}: header not terminated")
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise BadHeader(f"{path}: maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise BadHeader(f"{path}: bad dimensions {width}x{height}")
    return kind, width, height, pos


def _read_pnm(path, kinds):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    kind, width, height, pos = _parse_pnm_header(data, path, kinds)
    channels = 3 if kind == b"P6" else 1
    need = width * height * channels
    if len(data) - pos < need:
        raise TruncatedPixels(
            f"{path}: need {need} pixel bytes at offset {pos}, have {len(data) - pos}"
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return pixels.reshape(height, width, channels)


def read_mask(path) -> BinaryMask:
    """Read a P5 greymap as a mask: pixels >= 128 map to foreground."""
    pixels = _read_pnm(path, (b"P5",))[:, :, 0]
    return BinaryMask((pixels >= 128).astype(np.uint8))


def write_mask(mask: BinaryMask, path) -> None:
    """Write a mask as P5 with 0 for background and 255 for foreground."""
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write((mask.bits * np.uint8(255)).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_feature_image(path) -> FeatureImage:
    """Read a P5 greymap or P6 pixmap as an 8-bit feature image."""
    return FeatureImage(_read_pnm(path, (b"P5", b"P6")))


def write_feature_image(image: FeatureImage, path) -> None:
    kind = "P6" if image.channels == 3 else "P5"
    header = f"{kind}\n{image.width} {image.height}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(image.samples.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
