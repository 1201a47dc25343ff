import numpy as np
import pytest

from attn2mask.tensorio import AttentionRecord, AttentionStack, FeatureImage


def random_stack(rng, steps=2, layers=2, tokens=1, sizes=((8, 8),)):
    """Build a stack with one record per (step, layer, token) from seeded noise."""
    records = []
    for step in range(steps):
        for layer in range(layers):
            size = sizes[(step * layers + layer) % len(sizes)]
            for token in range(tokens):
                vals = rng.uniform(0.0, 1.0, size=size).astype(np.float32)
                records.append(AttentionRecord(step, layer, token, vals))
    return AttentionStack(tuple(records), tokens)


def random_image(rng, height, width, channels=3):
    samples = rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8)
    return FeatureImage(samples)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
