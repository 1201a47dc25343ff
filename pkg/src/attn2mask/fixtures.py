"""Deterministic synthetic fixtures: attention stack + image + ground truth.

Each attention record is the ground-truth shape block-averaged down to a
layer resolution, box-blurred, and perturbed with seeded uniform noise in
[-amplitude, +amplitude] (then clamped at zero).  The feature image
renders the shape as two grey levels (200 foreground / 50 background)
with the same noise stream scaled to 8-bit range.  Everything is a pure
function of the spec, so repeated generation is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidGeometry
from .tensorio import (
    AttentionRecord,
    AttentionStack,
    BinaryMask,
    FeatureImage,
    write_attention_stack,
    write_feature_image,
    write_mask,
)

SHAPES = ("disk", "rectangle", "two_blobs")
LAYER_RESOLUTIONS = (8, 16, 32, 64)

ATTN_FILENAME = "attn.atns"
IMAGE_FILENAME = "image.pgm"
TRUTH_FILENAME = "gt.pgm"

FG_GREY = 200
BG_GREY = 50


@dataclass(frozen=True)
class FixtureSpec:
    shape: str = "disk"
    size: int = 64
    geometry: tuple[int, ...] = ()  # () selects a centered default
    noise: float = 0.0
    blur_radius: int = 0
    seed: int = 0
    steps: int = 2
    layer_resolutions: tuple[int, ...] = LAYER_RESOLUTIONS

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidGeometry(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.size < 8:
            raise InvalidGeometry(f"image size must be >= 8, got {self.size}")
        if self.noise < 0:
            raise InvalidGeometry("noise amplitude must be >= 0")
        if self.blur_radius < 0:
            raise InvalidGeometry("blur radius must be >= 0")
        if self.steps < 1:
            raise InvalidGeometry("steps must be >= 1")
        if not self.layer_resolutions:
            raise InvalidGeometry("need at least one layer resolution")
        for res in self.layer_resolutions:
            if res not in LAYER_RESOLUTIONS:
                raise InvalidGeometry(f"layer resolution {res} not in {LAYER_RESOLUTIONS}")
            if self.size % res != 0:
                raise InvalidGeometry(f"image size {self.size} not divisible by {res}")
        geom = self.geometry or self._default_geometry()
        object.__setattr__(self, "geometry", tuple(int(g) for g in geom))
        object.__setattr__(self, "layer_resolutions", tuple(self.layer_resolutions))
        self._validate_geometry()

    def _default_geometry(self) -> tuple[int, ...]:
        half, quarter = self.size // 2, self.size // 4
        if self.shape == "disk":
            return (half, half, quarter)
        if self.shape == "rectangle":
            return (quarter, quarter, half, half)
        return (quarter, quarter, self.size // 8, 3 * quarter, 3 * quarter, self.size // 8)

    def _validate_geometry(self):
        g = self.geometry
        if self.shape == "disk":
            disks = [g] if len(g) == 3 else None
        elif self.shape == "two_blobs":
            disks = [g[:3], g[3:]] if len(g) == 6 else None
        else:
            disks = []
            if len(g) != 4:
                raise InvalidGeometry(f"rectangle geometry needs (top, left, height, width), got {g}")
            top, left, rh, rw = g
            if rh < 1 or rw < 1 or top < 0 or left < 0 or top + rh > self.size or left + rw > self.size:
                raise InvalidGeometry(f"rectangle {g} does not fit inside {self.size}x{self.size}")
        if disks is None:
            raise InvalidGeometry(f"{self.shape} geometry has wrong arity: {g}")
        for cy, cx, r in disks:
            if r < 1 or cy - r < 0 or cx - r < 0 or cy + r >= self.size or cx + r >= self.size:
                raise InvalidGeometry(
                    f"disk (cy={cy}, cx={cx}, r={r}) does not fit inside {self.size}x{self.size}"
                )


def _rasterize(spec: FixtureSpec) -> np.ndarray:
    yy, xx = np.mgrid[0 : spec.size, 0 : spec.size]
    g = spec.geometry
    if spec.shape == "disk":
        cy, cx, r = g
        return ((yy - cy) ** 2 + (xx - cx) ** 2 <= r * r).astype(np.uint8)
    if spec.shape == "rectangle":
        top, left, rh, rw = g
        return ((yy >= top) & (yy < top + rh) & (xx >= left) & (xx < left + rw)).astype(np.uint8)
    a = (yy - g[0]) ** 2 + (xx - g[1]) ** 2 <= g[2] * g[2]
    b = (yy - g[3]) ** 2 + (xx - g[4]) ** 2 <= g[5] * g[5]
    return (a | b).astype(np.uint8)


def _block_mean(img: np.ndarray, res: int) -> np.ndarray:
    factor = img.shape[0] // res
    return img.astype(np.float64).reshape(res, factor, res, factor).mean(axis=(1, 3))


def _box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the in-bounds window (divisor = actual pixel count)."""
    if radius == 0:
        return img
    h, w = img.shape
    prefix = np.zeros((h + 1, w + 1), dtype=np.float64)
    prefix[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    y0 = np.clip(np.arange(h) - radius, 0, None)
    y1 = np.clip(np.arange(h) + radius + 1, None, h)
    x0 = np.clip(np.arange(w) - radius, 0, None)
    x1 = np.clip(np.arange(w) + radius + 1, None, w)
    sums = prefix[y1][:, x1] - prefix[y0][:, x1] - prefix[y1][:, x0] + prefix[y0][:, x0]
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return sums / counts


def generate_fixture(spec: FixtureSpec) -> tuple[AttentionStack, FeatureImage, BinaryMask]:
    truth = _rasterize(spec)
    rng = np.random.default_rng(spec.seed)

    records = []
    for step in range(spec.steps):
        for layer, res in enumerate(spec.layer_resolutions):
            base = _box_blur(_block_mean(truth, res), spec.blur_radius)
            if spec.noise > 0:
                base = base + rng.uniform(-spec.noise, spec.noise, size=(res, res))
            records.append(
                AttentionRecord(step, layer, 0, np.maximum(base, 0.0).astype(np.float32))
            )
    stack = AttentionStack(tuple(records), 1)

    grey = np.where(truth == 1, float(FG_GREY), float(BG_GREY))
    if spec.noise > 0:
        grey = grey + 255.0 * rng.uniform(-spec.noise, spec.noise, size=grey.shape)
    image = FeatureImage(np.clip(np.rint(grey), 0, 255).astype(np.uint8))

    return stack, image, BinaryMask(truth)


def write_fixture(spec: FixtureSpec, out_dir) -> tuple[Path, Path, Path]:
    """Emit attn.atns, image.pgm, gt.pgm into out_dir; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stack, image, truth = generate_fixture(spec)
    attn_path = out_dir / ATTN_FILENAME
    image_path = out_dir / IMAGE_FILENAME
    truth_path = out_dir / TRUTH_FILENAME
    write_attention_stack(stack, attn_path)
    write_feature_image(image, image_path)
    write_mask(truth, truth_path)
    return attn_path, image_path, truth_path
