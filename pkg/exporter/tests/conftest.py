import numpy as np
import pytest

from atnsexport.manifest import ExportManifest


def save_array(path, arr):
    np.save(path, arr)
    return path.with_suffix(".npy") if path.suffix != ".npy" else path


def manifest_for(tmp_path, sources, axes, token="0", token_strings=(), array_key=None):
    return ExportManifest(
        sources=tuple(sources),
        array_key=array_key,
        axes=tuple(axes),
        token=token,
        token_strings=tuple(token_strings),
        output=tmp_path / "out.atns",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240818)
