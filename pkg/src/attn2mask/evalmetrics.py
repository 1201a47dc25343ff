"""Foreground IoU and batch evaluation with deterministic reports.

Pairs are matched strictly by filename; a prediction without a same-named
ground-truth file is a hard error rather than a silent skip.  Reports are
byte-deterministic in both formats (CSV rows use 6 decimal places,
JSON-lines keeps full float precision and appends a summary object).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IoFailure, MissingGroundTruth
from .tensorio import BinaryMask, read_mask


def iou(pred: BinaryMask, gt: BinaryMask) -> float:
    """Intersection over union of the foregrounds; both empty counts as 1."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise DimensionMismatch(
            f"prediction is {pred.height}x{pred.width}, truth is {gt.height}x{gt.width}"
        )
    p = pred.bits == 1
    g = gt.bits == 1
    union = int(np.count_nonzero(p | g))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(p & g)) / union


@dataclass(frozen=True)
class EvalReport:
    entries: tuple[tuple[str, float], ...]
    mean_iou: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.count != len(self.entries):
            raise DimensionMismatch("count must equal the number of entries")
        expect = (
            sum(v for _, v in self.entries) / len(self.entries) if self.entries else 0.0
        )
        if abs(self.mean_iou - expect) > 1e-9:
            raise DimensionMismatch("mean_iou is not the arithmetic mean of the entries")

    @classmethod
    def from_entries(cls, entries) -> "EvalReport":
        entries = tuple(entries)
        mean = sum(v for _, v in entries) / len(entries) if entries else 0.0
        return cls(entries, mean, len(entries))


def batch_evaluate(pred_dir, gt_dir, threads: int | None = None) -> EvalReport:
    """Score every prediction mask against its same-named ground truth.

    threads caps the worker pool for reading pairs; the report is always
    assembled in sorted-name order, so the result does not depend on it.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    names = sorted(p.name for p in pred_dir.iterdir() if p.is_file())

    def score(name: str) -> tuple[str, float]:
        gt_path = gt_dir / name
        if not gt_path.is_file():
            raise MissingGroundTruth(f"no ground truth named {name} in {gt_dir}")
        pred = read_mask(pred_dir / name)
        gt = read_mask(gt_path)
        if (pred.height, pred.width) != (gt.height, gt.width):
            raise DimensionMismatch(
                f"{name}: prediction is {pred.height}x{pred.width}, "
                f"truth is {gt.height}x{gt.width}"
            )
        return name, iou(pred, gt)

    if threads is not None and threads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(score, names))
    else:
        entries = [score(name) for name in names]
    return EvalReport.from_entries(entries)


def format_report(report: EvalReport, fmt: str) -> str:
    if fmt == "csv":
        lines = ["id,iou"]
        lines += [f"{name},{value:.6f}" for name, value in report.entries]
        return "\n".join(lines) + "\n"
    if fmt == "jsonl":
        lines = [
            json.dumps({"id": name, "iou": value}) for name, value in report.entries
        ]
        lines.append(json.dumps({"mean_iou": report.mean_iou, "count": report.count}))
        return "\n".join(lines) + "\n"
    raise ValueError(f"format must be 'csv' or 'jsonl', got {fmt!r}")


def write_report(report: EvalReport, path, fmt: str = "csv") -> None:
    text = format_report(report, fmt)
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def parse_report_csv(path) -> EvalReport:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != "id,iou":
        raise IoFailure(f"{path}: missing id,iou header")
    entries = []
    for line in lines[1:]:
        name, _, value = line.rpartition(",")
        entries.append((name, float(value)))
    return EvalReport.from_entries(entries)
