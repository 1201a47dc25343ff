"""Feature-similarity affinity graph with clamped random-walk propagation.

Confident pixels seed the walk (foreground 1, background 0), the middle
confidence band stays neutral at 0.5, and each synchronous step replaces
every pixel's value with the row-stochastic weighted mean of its
neighbors before re-clamping the seeds.  Seeds therefore act as absorbing
boundary values and the neutral band relaxes toward whichever side it is
better connected to in feature space.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy import sparse

from .aggregate import ScalarField
from .errors import BadDimensions, FieldOutOfRange, NoSeeds
from .tensorio import FeatureImage, _frozen


class SeedLabel(IntEnum):
    BG = 0
    FG = 1
    NEUTRAL = 2


@dataclass(frozen=True)
class SeedMask:
    """Per-pixel {FG, BG, NEUTRAL} labels driving the walk."""

    labels: np.ndarray  # (height, width) int8 of SeedLabel values

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 2:
            raise BadDimensions(f"seed mask must be 2-D, got shape {labels.shape}")
        if np.any((labels < 0) | (labels > 2)):
            raise FieldOutOfRange("seed labels must be BG (0), FG (1), or NEUTRAL (2)")
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class AffinityParams:
    sigma_feature: float = 0.1
    radius: int = 5
    beta: float = 2.0
    walk_iters: int = 16
    tau_fg: float = 0.6
    tau_bg: float = 0.3

    def __post_init__(self):
        if self.sigma_feature <= 0:
            raise FieldOutOfRange("sigma_feature must be > 0")
        if self.radius < 1:
            raise FieldOutOfRange("radius must be >= 1")
        if self.beta <= 0:
            raise FieldOutOfRange("beta must be > 0")
        if self.walk_iters < 1:
            raise FieldOutOfRange("walk_iters must be >= 1")
        if not (0.0 < self.tau_bg < self.tau_fg < 1.0):
            raise FieldOutOfRange(
                f"need 0 < tau_bg < tau_fg < 1, got {self.tau_bg}, {self.tau_fg}"
            )


@dataclass(frozen=True)
class AffinityGraph:
    """Row-stochastic pixel transition structure over a Chebyshev neighborhood."""

    height: int
    width: int
    radius: int
    transition: sparse.csr_matrix  # (n, n), rows sum to 1

    @property
    def size(self) -> int:
        return self.height * self.width

    def row_edges(self, pixel: int) -> list[tuple[int, float]]:
        """(neighbor index, normalized weight) pairs for one pixel."""
        start, stop = self.transition.indptr[pixel], self.transition.indptr[pixel + 1]
        return list(
            zip(self.transition.indices[start:stop].tolist(),
                self.transition.data[start:stop].tolist())
        )


def _feature_channels(features) -> np.ndarray:
    """Features as (h, w, c) float64 scaled to [0, 1] per channel."""
    if isinstance(features, ScalarField):
        return features.values[:, :, np.newaxis]
    if isinstance(features, FeatureImage):
        return features.samples.astype(np.float64) / 255.0
    raise TypeError(f"features must be FeatureImage or ScalarField, got {type(features)}")


def seed_from_field(field: ScalarField, tau_fg: float, tau_bg: float) -> SeedMask:
    """FG at >= tau_fg, BG at <= tau_bg, NEUTRAL between."""
    if not (0.0 < tau_bg < tau_fg < 1.0):
        raise FieldOutOfRange(f"need 0 < tau_bg < tau_fg < 1, got {tau_bg}, {tau_fg}")
    v = field.values
    labels = np.full(v.shape, SeedLabel.NEUTRAL, dtype=np.int8)
    labels[v >= tau_fg] = SeedLabel.FG
    labels[v <= tau_bg] = SeedLabel.BG
    if not np.any(labels == SeedLabel.FG):
        raise NoSeeds("no pixel reaches the foreground threshold")
    if not np.any(labels == SeedLabel.BG):
        raise NoSeeds("no pixel falls below the background threshold")
    return SeedMask(labels)


def build_affinity_graph(features, params: AffinityParams) -> AffinityGraph:
    """Row-normalized exp(-beta |f_i - f_j|^2 / (2 sigma^2)) over the neighborhood.

    Raw weights are symmetric by construction; self-edges are excluded.
    """
    f = _feature_channels(features)
    h, w = f.shape[:2]
    n = h * w
    if n < 2:
        raise BadDimensions("affinity graph needs at least 2 pixels")
    index = np.arange(n, dtype=np.int64).reshape(h, w)
    scale = params.beta / (2.0 * params.sigma_feature**2)
    r = params.radius

    rows, cols, vals = [], [], []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            ys = slice(max(0, -dy), h - max(0, dy))
            xs = slice(max(0, -dx), w - max(0, dx))
            nys = slice(max(0, dy), h - max(0, -dy))
            nxs = slice(max(0, dx), w - max(0, -dx))
            if ys.start >= ys.stop or xs.start >= xs.stop:
                continue
            d2 = ((f[ys, xs] - f[nys, nxs]) ** 2).sum(axis=2)
            rows.append(index[ys, xs].ravel())
            cols.append(index[nys, nxs].ravel())
            vals.append(np.exp(-scale * d2).ravel())

    raw = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    row_sums = np.asarray(raw.sum(axis=1)).reshape(-1)
    row_of_entry = np.repeat(np.arange(n), np.diff(raw.indptr))
    normalized = sparse.csr_matrix(
        (raw.data / row_sums[row_of_entry], raw.indices, raw.indptr), shape=(n, n)
    )
    return AffinityGraph(h, w, r, normalized)


def random_walk_propagate(
    graph: AffinityGraph, seeds: SeedMask, walk_iters: int, on_iteration=None
) -> ScalarField:
    """Diffuse seed values through the graph, re-clamping seeds every step."""
    if (seeds.height, seeds.width) != (graph.height, graph.width):
        raise BadDimensions(
            f"seeds are {seeds.height}x{seeds.width}, graph is {graph.height}x{graph.width}"
        )
    if walk_iters < 1:
        raise FieldOutOfRange("walk_iters must be >= 1")
    labels = seeds.labels.reshape(-1)
    fg = labels == SeedLabel.FG
    bg = labels == SeedLabel.BG
    if not fg.any() or not bg.any():
        raise NoSeeds("propagation needs at least one FG and one BG seed")

    p = np.full(graph.size, 0.5, dtype=np.float64)
    p[fg] = 1.0
    p[bg] = 0.0
    for it in range(walk_iters):
        p = graph.transition @ p
        p[fg] = 1.0
        p[bg] = 0.0
        if on_iteration is not None:
            on_iteration(it + 1, p.reshape(graph.height, graph.width))
    return ScalarField(np.clip(p.reshape(graph.height, graph.width), 0.0, 1.0))
