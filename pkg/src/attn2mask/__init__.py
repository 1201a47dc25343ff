"""Attention-map stacks to refined binary segmentation masks."""

from .affinity import (
    AffinityGraph,
    AffinityParams,
    SeedLabel,
    SeedMask,
    build_affinity_graph,
    random_walk_propagate,
    seed_from_field,
)
from .aggregate import (
    ScalarField,
    aggregate_token,
    load_field,
    normalize_map,
    save_field,
    upsample_bilinear,
)
from .binarize import Threshold, threshold_binarize
from .densecrf import (
    CrfParams,
    LabelPosterior,
    mean_field_refine,
    unary_from_field,
    unary_from_mask,
)
from .errors import DataError
from .evalmetrics import (
    EvalReport,
    batch_evaluate,
    format_report,
    iou,
    parse_report_csv,
    write_report,
)
from .fixtures import FixtureSpec, generate_fixture, write_fixture
from .fusion import (
    PipelineConfig,
    ThresholdGrid,
    match_score,
    run_method1,
    run_method2,
    run_pipeline,
    select_threshold,
    select_threshold_batch,
)
from .report import render_report_figure
from .tensorio import (
    AttentionRecord,
    AttentionStack,
    BinaryMask,
    FeatureImage,
    read_attention_stack,
    read_feature_image,
    read_mask,
    write_attention_stack,
    write_feature_image,
    write_mask,
)

__version__ = "1.0.0"

__all__ = [
    "AffinityGraph",
    "AffinityParams",
    "AttentionRecord",
    "AttentionStack",
    "BinaryMask",
    "CrfParams",
    "DataError",
    "EvalReport",
    "FeatureImage",
    "FixtureSpec",
    "LabelPosterior",
    "PipelineConfig",
    "ScalarField",
    "SeedLabel",
    "SeedMask",
    "Threshold",
    "ThresholdGrid",
    "aggregate_token",
    "batch_evaluate",
    "build_affinity_graph",
    "format_report",
    "generate_fixture",
    "iou",
    "load_field",
    "match_score",
    "mean_field_refine",
    "normalize_map",
    "parse_report_csv",
    "random_walk_propagate",
    "read_attention_stack",
    "read_feature_image",
    "read_mask",
    "render_report_figure",
    "run_method1",
    "run_method2",
    "run_pipeline",
    "save_field",
    "seed_from_field",
    "select_threshold",
    "select_threshold_batch",
    "threshold_binarize",
    "unary_from_field",
    "unary_from_mask",
    "upsample_bilinear",
    "write_attention_stack",
    "write_feature_image",
    "write_mask",
    "write_report",
]
