"""Per-map max-normalization and averaging of attention records.

Each raw map is divided by its own maximum (zero maps stay zero), carried
to a common resolution with pixel-center bilinear sampling, and averaged
over every record present for the token.  The divisor is the number of
records actually present, so partial exports still average correctly.
Summation order is fixed (records sorted by (step, layer)) to keep the
result independent of record order in the file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDimensions, FieldOutOfRange, NoRecordsForToken
from .tensorio import (
    AttentionRecord,
    AttentionStack,
    _frozen,
    read_attention_stack,
    write_attention_stack,
)


@dataclass(frozen=True)
class ScalarField:
    """A single height x width map of values in [0, 1]."""

    values: np.ndarray  # (height, width) float64

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise BadDimensions(f"field must be 2-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise FieldOutOfRange("field contains NaN or Inf")
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise FieldOutOfRange(
                f"field values outside [0, 1]: min {vals.min()}, max {vals.max()}"
            )
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def normalize_map(record: AttentionRecord) -> ScalarField:
    """Divide a map by its maximum; an all-zero map stays all zero."""
    vals = record.values.astype(np.float64)
    peak = vals.max() if vals.size else 0.0
    if peak == 0.0:
        return ScalarField(np.zeros_like(vals))
    return ScalarField(vals / peak)


def _axis_samples(src: int, dst: int):
    # pixel-center alignment: source coord of output x is (x+0.5)*(src/dst)-0.5
    coords = (np.arange(dst, dtype=np.float64) + 0.5) * (src / dst) - 0.5
    coords = np.clip(coords, 0.0, float(src - 1))
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, src - 1)
    frac = coords - lo
    return lo, hi, frac


def upsample_bilinear(field: ScalarField, target_h: int, target_w: int) -> ScalarField:
    """Resample to (target_h, target_w) with pixel-center bilinear weights."""
    if target_h < 1 or target_w < 1:
        raise BadDimensions(f"target dimensions {target_h}x{target_w} must be >= 1")
    if (target_h, target_w) == (field.height, field.width):
        return field
    v = field.values
    ylo, yhi, fy = _axis_samples(field.height, target_h)
    xlo, xhi, fx = _axis_samples(field.width, target_w)
    top = v[ylo][:, xlo] * (1.0 - fx) + v[ylo][:, xhi] * fx
    bot = v[yhi][:, xlo] * (1.0 - fx) + v[yhi][:, xhi] * fx
    out = top * (1.0 - fy)[:, None] + bot * fy[:, None]
    return ScalarField(np.clip(out, 0.0, 1.0))


def aggregate_token(
    stack: AttentionStack, token: int, target_h: int, target_w: int
) -> ScalarField:
    """Average the token's normalized records at the target resolution."""
    records = sorted(stack.records_for_token(token), key=lambda r: (r.step, r.layer))
    if not records:
        raise NoRecordsForToken(f"stack has no records for token {token}")
    acc = np.zeros((target_h, target_w), dtype=np.float64)
    for rec in records:
        acc += upsample_bilinear(normalize_map(rec), target_h, target_w).values
    return ScalarField(np.clip(acc / len(records), 0.0, 1.0))


# --------------------------------------------------------------------------
# Field files: a ScalarField travels as a single-record ATNS file
# (step=0, layer=0, token=0), e.g. for externally computed affinity maps.
# --------------------------------------------------------------------------

def save_field(field: ScalarField, path) -> None:
    rec = AttentionRecord(0, 0, 0, field.values.astype(np.float32))
    write_attention_stack(AttentionStack((rec,), 1), path)


def load_field(path) -> ScalarField:
    stack = read_attention_stack(path)
    if len(stack.records) != 1:
        raise BadDimensions(
            f"{path}: field file must hold exactly 1 record, found {len(stack.records)}"
        )
    return ScalarField(stack.records[0].values.astype(np.float64))
