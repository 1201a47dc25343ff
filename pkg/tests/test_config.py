import pytest

from attn2mask.config import build_pipeline_config, read_config_file
from attn2mask.errors import BadConfig, DataError
from attn2mask.fusion import PipelineConfig

FULL_CONFIG = """\
[pipeline]
method = 1
token = 2
target_size = 128
aggregate_size = 32
crf_mode = brute

[densecrf]
w_appearance = 5.0
theta_alpha = 40
theta_beta = 10
w_smooth = 2.0
theta_gamma = 2
iterations = 4
unary_epsilon = 1e-4
mask_confidence = 0.8

[affinity]
sigma_feature = 0.2
radius = 3
beta = 1.5
walk_iters = 8
tau_fg = 0.7
tau_bg = 0.2

[fusion]
gammas = 0.2,0.4,0.6
"""


def write_config(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text, encoding="utf-8")
    return path


def test_full_config_builds_pipeline(tmp_path):
    values = read_config_file(write_config(tmp_path, FULL_CONFIG))
    cfg = build_pipeline_config(values)
    assert cfg.method == 1
    assert cfg.token == 2
    assert cfg.target_size == 128
    assert cfg.aggregate_size == 32
    assert cfg.crf_mode == "brute"
    assert cfg.crf.w_appearance == 5.0
    assert cfg.crf.iterations == 4
    assert cfg.crf.unary_epsilon == 1e-4
    assert cfg.affinity.radius == 3
    assert cfg.affinity.tau_bg == 0.2
    assert cfg.grid.gammas == (0.2, 0.4, 0.6)


def test_empty_config_gives_defaults():
    assert build_pipeline_config({}) == PipelineConfig()


def test_overrides_beat_file_values(tmp_path):
    values = read_config_file(write_config(tmp_path, FULL_CONFIG))
    cfg = build_pipeline_config(values, method=2, densecrf_iterations=9)
    assert cfg.method == 2
    assert cfg.crf.iterations == 9
    assert cfg.crf.w_appearance == 5.0  # untouched file value survives


def test_none_overrides_are_ignored(tmp_path):
    values = read_config_file(write_config(tmp_path, FULL_CONFIG))
    cfg = build_pipeline_config(values, method=None)
    assert cfg.method == 1


def test_unknown_section_rejected(tmp_path):
    path = write_config(tmp_path, "[densecrff]\niterations = 3\n")
    with pytest.raises(BadConfig) as err:
        read_config_file(path)
    assert "densecrff" in str(err.value)


def test_unknown_key_rejected(tmp_path):
    path = write_config(tmp_path, "[densecrf]\niteration = 3\n")
    with pytest.raises(BadConfig) as err:
        read_config_file(path)
    assert "iteration" in str(err.value)


def test_bad_value_type_rejected(tmp_path):
    path = write_config(tmp_path, "[densecrf]\niterations = many\n")
    with pytest.raises(BadConfig):
        read_config_file(path)


def test_bad_gammas_rejected(tmp_path):
    path = write_config(tmp_path, "[fusion]\ngammas = 0.2;0.4\n")
    with pytest.raises(BadConfig):
        read_config_file(path)


def test_out_of_range_value_surfaces_as_data_error(tmp_path):
    path = write_config(tmp_path, "[densecrf]\nmask_confidence = 0.4\n")
    values = read_config_file(path)
    with pytest.raises(DataError):
        build_pipeline_config(values)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(BadConfig):
        read_config_file(tmp_path / "absent.ini")


def test_malformed_ini_rejected(tmp_path):
    path = write_config(tmp_path, "iterations = 3\n")  # key before any section
    with pytest.raises(BadConfig):
        read_config_file(path)


def test_inline_comments_are_stripped(tmp_path):
    path = write_config(tmp_path, "[pipeline]\nmethod = 2  # the default route\n")
    cfg = build_pipeline_config(read_config_file(path))
    assert cfg.method == 2


def test_unknown_override_rejected():
    with pytest.raises(BadConfig):
        build_pipeline_config({}, tokens=3)
