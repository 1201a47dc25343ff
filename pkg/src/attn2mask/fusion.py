"""Adaptive threshold fusion and the two end-to-end pipeline topologies.

The fusion step searches a fixed threshold grid for the gamma whose
binarized attention mask best matches the coarse affinity draft, scored
by foreground IoU.  Two pipelines consume the result:

* method 2: affinity draft -> threshold selection -> binarize -> CRF.
* method 1: additionally runs the reverse order (CRF first, then an
  affinity pass seeded from the CRF posterior) and keeps whichever
  stream's mask matches the affinity draft better (tie: the
  affinity-first stream).

Both are pure functions of their inputs: reruns produce byte-identical
masks regardless of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affinity import (
    AffinityParams,
    build_affinity_graph,
    random_walk_propagate,
    seed_from_field,
)
from .aggregate import ScalarField, aggregate_token, upsample_bilinear
from .binarize import threshold_binarize
from .densecrf import CrfParams, mean_field_refine, unary_from_mask
from .errors import DimensionMismatch, EmptyGrid, FieldOutOfRange
from .evalmetrics import iou
from .tensorio import AttentionStack, BinaryMask, FeatureImage


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly increasing candidate thresholds in (0, 1)."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        gammas = tuple(float(g) for g in self.gammas)
        if not gammas:
            raise EmptyGrid("threshold grid is empty")
        if any(not (0.0 < g < 1.0) for g in gammas):
            raise FieldOutOfRange(f"grid thresholds must lie in (0, 1): {gammas}")
        if any(b <= a for a, b in zip(gammas, gammas[1:])):
            raise FieldOutOfRange(f"grid thresholds must be strictly increasing: {gammas}")
        object.__setattr__(self, "gammas", gammas)

    @classmethod
    def uniform(cls, count: int = 19) -> "ThresholdGrid":
        """count thresholds i / (count + 1), i = 1..count."""
        return cls(tuple(i / (count + 1) for i in range(1, count + 1)))


@dataclass(frozen=True)
class PipelineConfig:
    method: int = 2
    crf: CrfParams = field(default_factory=CrfParams)
    affinity: AffinityParams = field(default_factory=AffinityParams)
    grid: ThresholdGrid = field(default_factory=ThresholdGrid.uniform)
    target_size: int = 512
    aggregate_size: int = 64
    token: int = 0
    crf_mode: str = "fast"

    def __post_init__(self):
        if self.method not in (1, 2):
            raise FieldOutOfRange(f"method must be 1 or 2, got {self.method}")
        if self.target_size < 1 or self.aggregate_size < 1:
            raise FieldOutOfRange("resolutions must be >= 1")
        if self.token < 0:
            raise FieldOutOfRange("token index must be >= 0")
        if self.crf_mode not in ("brute", "fast"):
            raise FieldOutOfRange(f"crf_mode must be 'brute' or 'fast', got {self.crf_mode}")


def match_score(b_hat: ScalarField, b_gamma: BinaryMask) -> float:
    """Foreground IoU between the 0.5-binarized draft and a mask."""
    if (b_hat.height, b_hat.width) != (b_gamma.height, b_gamma.width):
        raise DimensionMismatch(
            f"draft is {b_hat.height}x{b_hat.width}, mask is {b_gamma.height}x{b_gamma.width}"
        )
    draft_mask = BinaryMask((b_hat.values > 0.5).astype(np.uint8))
    return iou(draft_mask, b_gamma)


def select_threshold(
    field_map: ScalarField, b_hat: ScalarField, grid: ThresholdGrid
) -> tuple[float, float]:
    """Grid-search the gamma maximizing match_score; ties pick the smallest."""
    best_gamma, best_score = None, -1.0
    for gamma in grid.gammas:
        score = match_score(b_hat, threshold_binarize(field_map, gamma))
        if score > best_score:
            best_gamma, best_score = gamma, score
    return best_gamma, best_score


def select_threshold_batch(
    pairs: list[tuple[ScalarField, ScalarField]], grid: ThresholdGrid
) -> tuple[float, float]:
    """One gamma for a whole class: maximize the summed match over (field, draft) pairs."""
    if not pairs:
        raise EmptyGrid("need at least one (field, draft) pair")
    best_gamma, best_total = None, -1.0
    for gamma in grid.gammas:
        total = sum(
            match_score(b_hat, threshold_binarize(field_map, gamma))
            for field_map, b_hat in pairs
        )
        if total > best_total:
            best_gamma, best_total = gamma, total
    return best_gamma, best_total / len(pairs)


def _working_resolution(cfg: PipelineConfig, image: FeatureImage | None) -> tuple[int, int]:
    if image is not None:
        return image.height, image.width
    return cfg.target_size, cfg.target_size


def _attention_field(
    stack: AttentionStack, cfg: PipelineConfig, image: FeatureImage | None
) -> tuple[ScalarField, object]:
    """Aggregate at native scale, then lift to working resolution.

    Returns the lifted field and the feature source (the image when
    present, otherwise the field itself doubles as a one-channel feature).
    """
    agg = aggregate_token(stack, cfg.token, cfg.aggregate_size, cfg.aggregate_size)
    h, w = _working_resolution(cfg, image)
    lifted = upsample_bilinear(agg, h, w)
    return lifted, (image if image is not None else lifted)


def _affinity_draft(field_map: ScalarField, features, cfg: PipelineConfig) -> ScalarField:
    seeds = seed_from_field(field_map, cfg.affinity.tau_fg, cfg.affinity.tau_bg)
    graph = build_affinity_graph(features, cfg.affinity)
    return random_walk_propagate(graph, seeds, cfg.affinity.walk_iters)


def run_method2(
    stack: AttentionStack, cfg: PipelineConfig, image: FeatureImage | None = None
) -> BinaryMask:
    """Affinity draft first, DenseCRF second."""
    field_map, features = _attention_field(stack, cfg, image)
    b_hat = _affinity_draft(field_map, features, cfg)
    gamma_hat, _ = select_threshold(field_map, b_hat, cfg.grid)
    mask = threshold_binarize(field_map, gamma_hat)
    unary = unary_from_mask(mask, cfg.crf.mask_confidence)
    _, refined = mean_field_refine(unary, features, cfg.crf, mode=cfg.crf_mode)
    return refined


def run_method1(
    stack: AttentionStack, cfg: PipelineConfig, image: FeatureImage | None = None
) -> BinaryMask:
    """Cross-fusion: run both stream orders, keep the better match to the draft."""
    field_map, features = _attention_field(stack, cfg, image)
    b_hat = _affinity_draft(field_map, features, cfg)
    gamma_hat, _ = select_threshold(field_map, b_hat, cfg.grid)
    seed_mask = threshold_binarize(field_map, gamma_hat)

    # stream A: CRF refine, then an affinity pass seeded from its posterior
    unary_a = unary_from_mask(seed_mask, cfg.crf.mask_confidence)
    posterior_a, _ = mean_field_refine(unary_a, features, cfg.crf, mode=cfg.crf_mode)
    seeds_a = seed_from_field(
        posterior_a.foreground(), cfg.affinity.tau_fg, cfg.affinity.tau_bg
    )
    graph = build_affinity_graph(features, cfg.affinity)
    walked_a = random_walk_propagate(graph, seeds_a, cfg.affinity.walk_iters)
    mask_a = BinaryMask((walked_a.values > 0.5).astype(np.uint8))

    # stream B: affinity-selected threshold, then CRF refine
    unary_b = unary_from_mask(seed_mask, cfg.crf.mask_confidence)
    _, mask_b = mean_field_refine(unary_b, features, cfg.crf, mode=cfg.crf_mode)

    score_a = match_score(b_hat, mask_a)
    score_b = match_score(b_hat, mask_b)
    return mask_a if score_a > score_b else mask_b


def run_pipeline(
    stack: AttentionStack, cfg: PipelineConfig, image: FeatureImage | None = None
) -> BinaryMask:
    runner = run_method1 if cfg.method == 1 else run_method2
    return runner(stack, cfg, image)
