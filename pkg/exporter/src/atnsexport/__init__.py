"""Saved attention tensors to ATNS stacks for the segmentation engine."""

from .atns import Record, read_records, summarize, write_records
from .errors import (
    AxisMismatch,
    BadManifest,
    ExportError,
    NegativeValues,
    UnreadableSource,
)
from .export import canonical_tensor, export, load_source, resolve_token
from .manifest import ExportManifest, parse_manifest

__version__ = "1.0.0"

__all__ = [
    "AxisMismatch",
    "BadManifest",
    "ExportError",
    "ExportManifest",
    "NegativeValues",
    "Record",
    "UnreadableSource",
    "canonical_tensor",
    "export",
    "load_source",
    "parse_manifest",
    "read_records",
    "resolve_token",
    "summarize",
    "write_records",
]
