"""Figure rendering for evaluation reports (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import IoFailure
from .evalmetrics import EvalReport


def render_report_figure(report: EvalReport, path) -> None:
    """Per-item IoU bars with the mean as a horizontal line.

    The output format follows the file extension (png/pdf/svg).
    """
    names = [name for name, _ in report.entries]
    values = [value for _, value in report.entries]
    width = max(4.0, 0.35 * len(names) + 2.0)
    fig, ax = plt.subplots(figsize=(min(width, 16.0), 4.0))
    if values:
        ax.bar(range(len(values)), values, color="#4878b0")
        ax.axhline(report.mean_iou, color="#b04848", linewidth=1.2,
                   label=f"mean = {report.mean_iou:.3f}")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
        ax.legend(loc="lower right", fontsize=8)
    else:
        ax.text(0.5, 0.5, "no entries", ha="center", va="center")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("IoU")
    fig.tight_layout()
    try:
        fig.savefig(path, dpi=120)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
