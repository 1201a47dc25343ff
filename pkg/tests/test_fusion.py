import numpy as np
import pytest

import attn2mask.fusion as fusion
from attn2mask.aggregate import ScalarField
from attn2mask.densecrf import LabelPosterior
from attn2mask.errors import EmptyGrid, FieldOutOfRange
from attn2mask.fixtures import FixtureSpec, generate_fixture
from attn2mask.fusion import (
    PipelineConfig,
    ThresholdGrid,
    match_score,
    run_method1,
    run_method2,
    run_pipeline,
    select_threshold,
    select_threshold_batch,
)
from attn2mask.tensorio import BinaryMask


def reference_select(field, draft, grid):
    """Exhaustive re-derivation: score every gamma, first index wins ties."""
    scores = []
    for gamma in grid.gammas:
        mask = (field.values > gamma).astype(np.uint8)
        scores.append(match_score(draft, BinaryMask(mask)))
    best = int(np.argmax(scores))  # argmax returns the first maximal index
    return grid.gammas[best], scores[best]


def test_uniform_grid_values():
    grid = ThresholdGrid.uniform()
    assert len(grid.gammas) == 19
    assert grid.gammas == tuple(i / 20 for i in range(1, 20))
    small = ThresholdGrid.uniform(3)
    assert small.gammas == (0.25, 0.5, 0.75)


def test_grid_validation():
    with pytest.raises(EmptyGrid):
        ThresholdGrid(())
    with pytest.raises(FieldOutOfRange):
        ThresholdGrid((0.0, 0.5))
    with pytest.raises(FieldOutOfRange):
        ThresholdGrid((0.5, 0.5))
    with pytest.raises(FieldOutOfRange):
        ThresholdGrid((0.6, 0.4))


def test_match_score_hand_counted():
    draft = ScalarField(
        np.array(
            [
                [0.9, 0.8, 0.7, 0.6],
                [0.9, 0.8, 0.2, 0.1],
                [0.1, 0.2, 0.3, 0.4],
                [0.0, 0.1, 0.2, 0.3],
            ]
        )
    )
    mask = BinaryMask(
        np.array(
            [[1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 0, 0]], dtype=np.uint8
        )
    )
    # draft foreground = 6 pixels (top row + two on second row); overlap = 4; union = 8
    assert match_score(draft, mask) == pytest.approx(0.5)


def test_match_score_both_empty_is_one():
    draft = ScalarField(np.full((3, 3), 0.2))
    empty = BinaryMask(np.zeros((3, 3), dtype=np.uint8))
    assert match_score(draft, empty) == 1.0


def test_select_threshold_matches_exhaustive_reference(rng):
    grid = ThresholdGrid.uniform()
    for _ in range(30):
        field = ScalarField(rng.uniform(0, 1, (6, 6)))
        draft = ScalarField(rng.uniform(0, 1, (6, 6)))
        got_gamma, got_score = select_threshold(field, draft, grid)
        want_gamma, want_score = reference_select(field, draft, grid)
        assert got_gamma == want_gamma
        assert got_score == pytest.approx(want_score, abs=1e-12)


def test_select_threshold_tie_takes_smallest_gamma():
    # empty draft and a field below every gamma: all gammas score 1.0
    field = ScalarField(np.full((4, 4), 0.01))
    draft = ScalarField(np.full((4, 4), 0.1))
    grid = ThresholdGrid.uniform()
    gamma, score = select_threshold(field, draft, grid)
    assert gamma == grid.gammas[0]
    assert score == 1.0


def test_select_threshold_batch_sums_matches(rng):
    grid = ThresholdGrid((0.25, 0.5, 0.75))
    pairs = []
    for _ in range(4):
        pairs.append(
            (ScalarField(rng.uniform(0, 1, (5, 5))), ScalarField(rng.uniform(0, 1, (5, 5))))
        )
    got_gamma, got_mean = select_threshold_batch(pairs, grid)

    totals = []
    for gamma in grid.gammas:
        total = 0.0
        for field, draft in pairs:
            total += match_score(draft, BinaryMask((field.values > gamma).astype(np.uint8)))
        totals.append(total)
    best = int(np.argmax(totals))
    assert got_gamma == grid.gammas[best]
    assert got_mean == pytest.approx(totals[best] / len(pairs), abs=1e-12)


def test_select_threshold_batch_rejects_empty():
    with pytest.raises(EmptyGrid):
        select_threshold_batch([], ThresholdGrid.uniform())


def test_pipeline_config_validation():
    with pytest.raises(FieldOutOfRange):
        PipelineConfig(method=3)
    with pytest.raises(FieldOutOfRange):
        PipelineConfig(target_size=0)
    with pytest.raises(FieldOutOfRange):
        PipelineConfig(token=-1)
    with pytest.raises(FieldOutOfRange):
        PipelineConfig(crf_mode="exact")


def test_method2_recovers_noiseless_rectangle_exactly():
    spec = FixtureSpec(shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0, seed=0)
    stack, image, truth = generate_fixture(spec)
    mask = run_method2(stack, PipelineConfig(), image)
    assert np.array_equal(mask.bits, truth.bits)


def test_method1_agrees_on_noiseless_rectangle():
    spec = FixtureSpec(shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0, seed=0)
    stack, image, truth = generate_fixture(spec)
    mask = run_method1(stack, PipelineConfig(), image)
    assert np.array_equal(mask.bits, truth.bits)


def test_run_pipeline_dispatches_on_method(monkeypatch):
    picked_1 = object()
    picked_2 = object()
    monkeypatch.setattr(fusion, "run_method1", lambda *a: picked_1)
    monkeypatch.setattr(fusion, "run_method2", lambda *a: picked_2)
    assert run_pipeline(None, PipelineConfig(method=1)) is picked_1
    assert run_pipeline(None, PipelineConfig(method=2)) is picked_2


def test_without_image_output_matches_target_size():
    spec = FixtureSpec(shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0, seed=0)
    stack, _, _ = generate_fixture(spec)
    cfg = PipelineConfig(target_size=32, aggregate_size=32)
    mask = run_method2(stack, cfg)
    assert mask.bits.shape == (32, 32)
    assert mask.bits.sum() > 0


def _scripted_method1(monkeypatch, mask_a_bits, mask_b_bits, draft_vals):
    """Run method 1 with the heavy stages replaced by scripted outputs."""
    from attn2mask.affinity import SeedLabel, SeedMask
    from attn2mask.fixtures import FixtureSpec, generate_fixture

    spec = FixtureSpec(shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0, seed=0)
    stack, image, _ = generate_fixture(spec)
    h, w = mask_a_bits.shape
    cfg = PipelineConfig(target_size=h, aggregate_size=h)

    soft = np.full((h, w, 2), 0.5)
    posterior = LabelPosterior(soft)
    crf_results = iter(
        [
            (posterior, BinaryMask(np.zeros((h, w), dtype=np.uint8))),
            (posterior, BinaryMask(mask_b_bits)),
        ]
    )
    seed_labels = np.full((h, w), SeedLabel.NEUTRAL, dtype=np.int8)
    seed_labels[0, 0] = SeedLabel.FG
    seed_labels[-1, -1] = SeedLabel.BG

    monkeypatch.setattr(fusion, "_affinity_draft", lambda *a: ScalarField(draft_vals))
    monkeypatch.setattr(fusion, "mean_field_refine", lambda *a, **k: next(crf_results))
    monkeypatch.setattr(fusion, "seed_from_field", lambda *a: SeedMask(seed_labels))
    monkeypatch.setattr(fusion, "build_affinity_graph", lambda *a: None)
    monkeypatch.setattr(
        fusion, "random_walk_propagate", lambda *a, **k: ScalarField(mask_a_bits.astype(np.float64))
    )
    return run_method1(stack, cfg), mask_a_bits, mask_b_bits


def test_method1_tie_prefers_crf_last_stream(monkeypatch):
    draft = np.zeros((4, 4))
    draft[0, 0] = draft[0, 1] = 0.9  # binarized draft has two pixels
    mask_a = np.zeros((4, 4), dtype=np.uint8)
    mask_a[0, 0] = 1  # overlap 1, union 2 -> score 0.5
    mask_b = np.zeros((4, 4), dtype=np.uint8)
    mask_b[0, 1] = 1  # same score by symmetry
    got, _, want_b = _scripted_method1(monkeypatch, mask_a, mask_b, draft)
    assert np.array_equal(got.bits, want_b)


def test_method1_takes_better_scoring_stream(monkeypatch):
    draft = np.zeros((4, 4))
    draft[0, 0] = draft[0, 1] = 0.9
    mask_a = np.zeros((4, 4), dtype=np.uint8)
    mask_a[0, 0] = mask_a[0, 1] = 1  # exact match -> score 1.0
    mask_b = np.zeros((4, 4), dtype=np.uint8)
    mask_b[0, 0] = 1  # score 0.5
    got, want_a, _ = _scripted_method1(monkeypatch, mask_a, mask_b, draft)
    assert np.array_equal(got.bits, want_a)
