"""Reshape saved attention tensors into ATNS records.

The tool only transposes, slices, and casts: no normalization, no
softmax.  Values therefore reach the consuming engine exactly as the
capturing run saved them (bit-identical for float32 sources).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .atns import Record, write_records
from .errors import AxisMismatch, NegativeValues, UnreadableSource
from .manifest import AXIS_NAMES, ExportManifest

CANONICAL = AXIS_NAMES  # (step, layer, token, height, width)


def load_source(path: Path, array_key: str | None) -> np.ndarray:
    try:
        loaded = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise UnreadableSource(f"cannot load {path}: {exc}") from exc

    if isinstance(loaded, np.lib.npyio.NpzFile):
        with loaded:
            names = loaded.files
            if array_key is not None:
                if array_key not in names:
                    raise UnreadableSource(
                        f"{path} has no array named {array_key!r}; found {names}"
                    )
                arr = loaded[array_key]
            elif len(names) == 1:
                arr = loaded[names[0]]
            else:
                raise UnreadableSource(
                    f"{path} holds {len(names)} arrays; set [source] array to pick one"
                )
    else:
        arr = loaded

    if not (
        np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.integer)
    ):
        raise UnreadableSource(f"{path}: dtype {arr.dtype} is not convertible to float32")
    return arr


def canonical_tensor(arr: np.ndarray, axes: tuple[str, ...], origin) -> np.ndarray:
    """Transpose to (step, layer, token, height, width), padding absent axes."""
    if arr.ndim != len(axes):
        raise AxisMismatch(
            f"{origin}: layout names {len(axes)} axes but the array has rank {arr.ndim}"
        )
    order = [axes.index(name) for name in CANONICAL if name in axes]
    arranged = np.transpose(arr, order)
    for position, name in enumerate(CANONICAL):
        if name not in axes:
            arranged = np.expand_dims(arranged, position)
    return arranged


def resolve_token(manifest: ExportManifest, token_axis_size: int) -> int:
    raw = manifest.token
    try:
        index = int(raw)
    except ValueError:
        if raw not in manifest.token_strings:
            raise AxisMismatch(
                f"token {raw!r} is not one of token_strings {list(manifest.token_strings)}"
            ) from None
        index = manifest.token_strings.index(raw)
    if not 0 <= index < token_axis_size:
        raise AxisMismatch(
            f"token index {index} outside the token axis of size {token_axis_size}"
        )
    return index


def export(manifest: ExportManifest) -> tuple[Path, int]:
    """Write one record per (step, layer) slice of the selected token."""
    tensors = [
        canonical_tensor(load_source(path, manifest.array_key), manifest.axes, path)
        for path in manifest.sources
    ]
    trailing = {t.shape[1:] for t in tensors}
    if len(trailing) > 1:
        raise AxisMismatch(
            f"sources disagree beyond the step axis: {sorted(trailing)}"
        )
    tensor = tensors[0] if len(tensors) == 1 else np.concatenate(tensors, axis=0)

    if not np.all(np.isfinite(tensor)):
        raise NegativeValues("source values must be finite and non-negative")
    if tensor.min() < 0:
        raise NegativeValues("source contains negative values")

    steps, layers, token_count = tensor.shape[:3]
    token = resolve_token(manifest, token_count)

    records = []
    for step in range(steps):
        for layer in range(layers):
            values = np.ascontiguousarray(tensor[step, layer, token], dtype="<f4")
            records.append(Record(step, layer, token, values))
    manifest.output.parent.mkdir(parents=True, exist_ok=True)
    count = write_records(manifest.output, token_count, records)
    return manifest.output, count
