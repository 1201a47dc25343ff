import numpy as np
import pytest

from attn2mask.errors import InvalidGeometry
from attn2mask.fixtures import FixtureSpec, generate_fixture, write_fixture
from attn2mask.tensorio import read_attention_stack, read_feature_image, read_mask


def reference_block_mean(truth, res):
    factor = truth.shape[0] // res
    out = np.zeros((res, res))
    for by in range(res):
        for bx in range(res):
            block = truth[by * factor : (by + 1) * factor, bx * factor : (bx + 1) * factor]
            out[by, bx] = block.astype(np.float64).mean()
    return out


def test_noiseless_records_are_block_means():
    spec = FixtureSpec(shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0, seed=3)
    stack, _, truth = generate_fixture(spec)
    for rec in stack.records:
        want = reference_block_mean(truth.bits, rec.height).astype(np.float32)
        assert np.array_equal(rec.values, want)


def test_noiseless_image_is_two_grey_levels():
    spec = FixtureSpec(noise=0.0, seed=1)
    _, image, truth = generate_fixture(spec)
    fg = image.samples[:, :, 0][truth.bits == 1]
    bg = image.samples[:, :, 0][truth.bits == 0]
    assert set(np.unique(fg)) == {200}
    assert set(np.unique(bg)) == {50}


def test_generation_is_deterministic():
    spec = FixtureSpec(noise=0.15, blur_radius=2, seed=9)
    first = generate_fixture(spec)
    second = generate_fixture(spec)
    for rec_a, rec_b in zip(first[0].records, second[0].records):
        assert np.array_equal(rec_a.values, rec_b.values)
    assert np.array_equal(first[1].samples, second[1].samples)
    assert np.array_equal(first[2].bits, second[2].bits)


def test_golden_disk_statistics_are_stable():
    spec = FixtureSpec(noise=0.1, blur_radius=1, seed=42)
    stack, image, truth = generate_fixture(spec)
    assert int(truth.bits.sum()) == 797
    assert int(image.samples.sum()) == 324369
    assert stack.records[0].key == (0, 0, 0)
    assert float(stack.records[0].values.sum()) == pytest.approx(13.294696, abs=1e-5)
    assert stack.records[-1].key == (1, 3, 0)
    assert float(stack.records[-1].values.sum()) == pytest.approx(878.655823, abs=1e-4)


def test_record_layout_covers_steps_and_layers():
    spec = FixtureSpec(steps=3, layer_resolutions=(8, 32))
    stack, _, _ = generate_fixture(spec)
    assert [rec.key for rec in stack.records] == [
        (s, t, 0) for s in range(3) for t in range(2)
    ]
    assert {rec.height for rec in stack.records} == {8, 32}


def test_noise_never_produces_negatives():
    spec = FixtureSpec(noise=0.5, seed=7)
    stack, _, _ = generate_fixture(spec)
    for rec in stack.records:
        assert rec.values.min() >= 0.0
        assert rec.values.max() <= 1.5 + 1e-6


def test_blur_spreads_mass_beyond_the_shape():
    sharp = FixtureSpec(shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0)
    soft = FixtureSpec(
        shape="rectangle", geometry=(16, 16, 32, 32), noise=0.0, blur_radius=2
    )
    rec_sharp = generate_fixture(sharp)[0].records[-1]
    rec_soft = generate_fixture(soft)[0].records[-1]
    assert np.count_nonzero(rec_soft.values) > np.count_nonzero(rec_sharp.values)


def test_two_blobs_renders_two_components():
    spec = FixtureSpec(shape="two_blobs", noise=0.0)
    _, _, truth = generate_fixture(spec)
    # the two default blobs are disjoint: their bounding boxes do not touch
    top_half = truth.bits[:32, :].sum()
    bottom_half = truth.bits[32:, :].sum()
    assert top_half > 0 and bottom_half > 0


def test_geometry_must_fit():
    with pytest.raises(InvalidGeometry):
        FixtureSpec(shape="disk", geometry=(2, 32, 10))
    with pytest.raises(InvalidGeometry):
        FixtureSpec(shape="rectangle", geometry=(40, 40, 30, 30))
    with pytest.raises(InvalidGeometry):
        FixtureSpec(shape="disk", geometry=(1, 2))


def test_resolutions_must_divide_size():
    with pytest.raises(InvalidGeometry):
        FixtureSpec(size=48, layer_resolutions=(64,))
    with pytest.raises(InvalidGeometry):
        FixtureSpec(layer_resolutions=(7,))
    with pytest.raises(InvalidGeometry):
        FixtureSpec(layer_resolutions=())


def test_bad_shape_and_amounts():
    with pytest.raises(InvalidGeometry):
        FixtureSpec(shape="triangle")
    with pytest.raises(InvalidGeometry):
        FixtureSpec(noise=-0.1)
    with pytest.raises(InvalidGeometry):
        FixtureSpec(steps=0)


def test_write_fixture_round_trips(tmp_path):
    spec = FixtureSpec(noise=0.1, blur_radius=1, seed=42)
    attn_path, image_path, truth_path = write_fixture(spec, tmp_path / "fx")
    stack, image, truth = generate_fixture(spec)
    loaded_stack = read_attention_stack(attn_path)
    for got, want in zip(loaded_stack.records, stack.records):
        assert got.key == want.key
        assert np.array_equal(got.values, want.values)
    assert np.array_equal(read_feature_image(image_path).samples, image.samples)
    assert np.array_equal(read_mask(truth_path).bits, truth.bits)
