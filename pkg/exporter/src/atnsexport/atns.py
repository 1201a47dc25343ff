"""Self-contained serializer for the ATNS attention-stack container.

Layout: 16-byte header (magic ``ATNS``, u32 version, u32 token_count,
u32 record_count), then per record five u32 fields (step, layer, token,
height, width) followed by height*width little-endian float32 values in
row-major order.  The validating reader applies the same rules the
consuming engine does, so a file passing here is accepted there.
"""

from __future__ import annotations

import struct
from typing import NamedTuple

import numpy as np

from .errors import (
    BadDimensions,
    BadMagic,
    BadVersion,
    DuplicateRecordKey,
    IoFailure,
    NegativeValue,
    NonFiniteValue,
    TokenOutOfRange,
    TruncatedFile,
)

MAGIC = b"ATNS"
VERSION = 1
DIM_LIMIT = 4096

_HEAD = struct.Struct("<4sIII")
_REC = struct.Struct("<IIIII")


class Record(NamedTuple):
    step: int
    layer: int
    token: int
    values: np.ndarray  # 2-D float32


def write_records(path, token_count: int, records) -> int:
    """Stream records to disk; returns the number written."""
    records = list(records)
    try:
        with open(path, "wb") as out:
            out.write(_HEAD.pack(MAGIC, VERSION, token_count, len(records)))
            for rec in records:
                h, w = rec.values.shape
                out.write(_REC.pack(rec.step, rec.layer, rec.token, h, w))
                out.write(np.ascontiguousarray(rec.values, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return len(records)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.at = 0

    def take(self, fmt: struct.Struct, what: str):
        if self.at + fmt.size > len(self.data):
            raise TruncatedFile(
                f"{what} at byte {self.at} needs {fmt.size} bytes, "
                f"file ends at {len(self.data)}"
            )
        fields = fmt.unpack_from(self.data, self.at)
        self.at += fmt.size
        return fields

    def take_values(self, count: int, what: str) -> np.ndarray:
        nbytes = count * 4
        if self.at + nbytes > len(self.data):
            raise TruncatedFile(
                f"{what} at byte {self.at} needs {nbytes} bytes, "
                f"file ends at {len(self.data)}"
            )
        vals = np.frombuffer(self.data, dtype="<f4", count=count, offset=self.at)
        self.at += nbytes
        return vals


def read_records(path) -> tuple[int, list[Record]]:
    """Parse and fully validate a file; trailing bytes are tolerated."""
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    cur = _Cursor(data)
    magic, version, token_count, record_count = cur.take(_HEAD, "header")
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version} at byte 4")
    if token_count < 1:
        raise BadDimensions(f"token_count {token_count} at byte 8 must be positive")

    seen = set()
    records = []
    for idx in range(record_count):
        step, layer, token, h, w = cur.take(_REC, f"record {idx} header")
        if not (1 <= h <= DIM_LIMIT and 1 <= w <= DIM_LIMIT):
            raise BadDimensions(f"record {idx}: dimensions {h}x{w} outside [1, {DIM_LIMIT}]")
        if token >= token_count:
            raise TokenOutOfRange(f"record {idx}: token {token} >= token_count {token_count}")
        if (step, layer, token) in seen:
            raise DuplicateRecordKey(f"record {idx}: duplicate key {(step, layer, token)}")
        seen.add((step, layer, token))
        vals = cur.take_values(h * w, f"record {idx} values").reshape(h, w)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue(f"record {idx}: values contain NaN or Inf")
        if np.any(vals < 0):
            raise NegativeValue(f"record {idx}: values contain negatives")
        records.append(Record(step, layer, token, vals))
    return token_count, records


def summarize(token_count: int, records: list[Record]) -> str:
    """Summary text for a stack, one line per record after two totals."""
    lines = [f"records={len(records)} token_count={token_count}"]
    sizes = sorted({rec.values.shape for rec in records})
    lines.append("resolutions=" + ",".join(f"{h}x{w}" for h, w in sizes))
    for rec in records:
        lines.append(
            f"record step={rec.step} layer={rec.layer} token={rec.token} "
            f"size={rec.values.shape[0]}x{rec.values.shape[1]} "
            f"min={float(rec.values.min()):.6f} max={float(rec.values.max()):.6f}"
        )
    return "\n".join(lines)
