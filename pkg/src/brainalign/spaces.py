"""Feature-grid transforms between token layouts.

A FeatureGrid is an (H, W, D) float64 block. The transforms here
change the token layout without inventing information: 2x2 mean
pooling, 3x3-to-single-token pooling, the nested multi-resolution
pyramid, channel-wise aggregation of a layer stack, and token
interleaving of two equal-shape grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import FeatureGrid
from .errors import ShapeError


def avg_pool_2x2(grid: FeatureGrid) -> FeatureGrid:
    """Mean-pool each non-overlapping 2x2 token block into one token.

    Requires even height and width. The per-channel grand mean is
    preserved exactly up to float64 rounding.
    """
    h, w = grid.height, grid.width
    if h % 2 or w % 2:
        raise ShapeError(f"2x2 pooling needs even sides, got {h}x{w}")
    return FeatureGrid(kernels.pool2x2(grid.data))


def pool_3x3_to_one(grid: FeatureGrid) -> FeatureGrid:
    """Collapse a 3x3 grid into a single mean token."""
    if grid.height != 3 or grid.width != 3:
        raise ShapeError(f"expected a 3x3 grid, got {grid.height}x{grid.width}")
    return FeatureGrid(grid.data.mean(axis=(0, 1), keepdims=True))


@dataclass(frozen=True)
class NestedFeatures:
    """Pyramid of grids with strictly decreasing token counts ending
    in a single token; all levels share the channel dimension."""

    levels: tuple[FeatureGrid, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ShapeError("a pyramid needs at least one level")
        counts = [g.tokens for g in self.levels]
        if any(a <= b for a, b in zip(counts, counts[1:])):
            raise ShapeError(f"token counts must strictly decrease, got {counts}")
        if counts[-1] != 1:
            raise ShapeError(f"the coarsest level must be one token, got {counts[-1]}")
        dims = {g.dim for g in self.levels}
        if len(dims) != 1:
            raise ShapeError(f"levels disagree on channel dim: {sorted(dims)}")

    @property
    def token_counts(self) -> tuple[int, ...]:
        return tuple(g.tokens for g in self.levels)

    def level_for_count(self, count: int) -> FeatureGrid:
        for g in self.levels:
            if g.tokens == count:
                return g
        raise ShapeError(
            f"no level with {count} tokens; have {self.token_counts}"
        )


def nested_sequence(grid: FeatureGrid) -> NestedFeatures:
    """Build the full pooling pyramid down to one token.

    The side must be square and repeatedly halvable, optionally through
    a final 3x3 stage: 24 -> 12 -> 6 -> 3 -> 1 and 16 -> 8 -> 4 -> 2
    -> 1 both work. Each level is the 2x2 (or final 3x3) mean pool of
    the previous one, so every level preserves the grand mean.
    """
    if grid.height != grid.width:
        raise ShapeError(
            f"pyramid needs a square grid, got {grid.height}x{grid.width}"
        )
    side = grid.height
    probe = side
    while probe > 1:
        if probe == 3:
            probe = 1
        elif probe % 2 == 0:
            probe //= 2
        else:
            raise ShapeError(f"side {side} cannot pool down to one token")
    levels = [grid]
    current = grid
    while current.tokens > 1:
        if current.height == 3:
            current = pool_3x3_to_one(current)
        else:
            current = avg_pool_2x2(current)
        levels.append(current)
    return NestedFeatures(tuple(levels))


@dataclass(frozen=True)
class LayerStack:
    """Ordered stack of same-shape grids, e.g. successive network
    layers; the last entry is the final layer."""

    layers: tuple[FeatureGrid, ...]

    def __post_init__(self) -> None:
        if len(self.layers) < 2:
            raise ShapeError("a layer stack needs at least two layers")
        shapes = {g.data.shape for g in self.layers}
        if len(shapes) != 1:
            raise ShapeError(f"layers disagree on shape: {sorted(shapes)}")


def aggregate_layers(stack: LayerStack, n_groups: int) -> FeatureGrid:
    """Concatenate group means of the non-final layers with the final
    layer along channels.

    The non-final layers split into n_groups equal contiguous groups;
    each group is averaged elementwise, and the result is the channel
    concatenation [group_1_mean, ..., group_n_mean, final_layer] with
    (n_groups + 1) * D channels.
    """
    body = stack.layers[:-1]
    final = stack.layers[-1]
    if n_groups < 1:
        raise ShapeError(f"need at least one group, got {n_groups}")
    if len(body) % n_groups or len(body) < n_groups:
        raise ShapeError(
            f"{len(body)} non-final layers do not split into {n_groups} equal groups"
        )
    size = len(body) // n_groups
    parts = []
    for g in range(n_groups):
        block = np.stack([lay.data for lay in body[g * size:(g + 1) * size]])
        parts.append(block.mean(axis=0))
    parts.append(final.data)
    return FeatureGrid(np.concatenate(parts, axis=2))


def interleave(a: FeatureGrid, b: FeatureGrid) -> np.ndarray:
    """Alternate the flattened tokens of two equal-shape grids.

    Returns a (2 * tokens, D) array with out[2i] = a's token i and
    out[2i + 1] = b's token i.
    """
    if a.data.shape != b.data.shape:
        raise ShapeError(
            f"cannot interleave {a.data.shape} with {b.data.shape}"
        )
    fa = a.flat()
    fb = b.flat()
    out = np.empty((2 * fa.shape[0], fa.shape[1]))
    out[0::2] = fa
    out[1::2] = fb
    return out
