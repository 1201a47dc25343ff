"""Threshold binarization: foreground where the field strictly exceeds gamma.

Ties (value == gamma) go to background, biasing toward precision; the
fusion threshold search downstream compensates for the stricter cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import ScalarField
from .errors import FieldOutOfRange
from .tensorio import BinaryMask


@dataclass(frozen=True)
class Threshold:
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise FieldOutOfRange(f"gamma must lie in (0, 1), got {self.gamma}")


def threshold_binarize(field: ScalarField, gamma: Threshold | float) -> BinaryMask:
    if not isinstance(gamma, Threshold):
        gamma = Threshold(float(gamma))
    return BinaryMask((field.values > gamma.gamma).astype(np.uint8))
