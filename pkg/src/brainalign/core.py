"""Shared domain types and the deterministic random-number contract.

Every randomized operation in the package takes an explicit
:class:`RandomStream`; there is no hidden global RNG state. Streams are
backed by the counter-based Philox generator, so the same seed yields
bit-identical draws across runs, and labeled substreams are independent
by construction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError

__all__ = ["Seed", "RandomStream", "rng_new", "FeatureGrid", "BrainSignal", "BBox"]


@dataclass(frozen=True)
class Seed:
    """64-bit unsigned seed; equal seeds give bit-identical streams."""

    value: int

    def __post_init__(self):
        if not 0 <= self.value < 2**64:
            raise ValidationError(f"seed must fit in 64 bits, got {self.value}")


def _philox_key(seed: int, path: tuple[str, ...]) -> int:
    """Derive a 128-bit Philox key from the seed and a substream path."""
    h = hashlib.sha256()
    h.update(seed.to_bytes(8, "little"))
    for label in path:
        h.update(b"\x00")
        h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest()[:16], "little")


class RandomStream:
    """Deterministic stream with independent substreams derivable by label.

    Substreams are keyed by the (seed, label path) pair through SHA-256,
    so ``stream.substream("mask")`` is stable across runs and disjoint
    from ``stream.substream("noise")``.
    """

    def __init__(self, seed: Seed | int, _path: tuple[str, ...] = ()):
        if isinstance(seed, int):
            seed = Seed(seed)
        self.seed = seed
        self.path = _path
        self.gen = np.random.Generator(np.random.Philox(key=_philox_key(seed.value, _path)))

    def substream(self, label: str) -> "RandomStream":
        return RandomStream(self.seed, self.path + (label,))

    def uniform(self, size=None) -> np.ndarray | float:
        return self.gen.uniform(size=size)

    def normal(self, size=None) -> np.ndarray | float:
        return self.gen.standard_normal(size=size)

    def integers(self, high: int, size=None):
        """Uniform integers in [0, high)."""
        return self.gen.integers(0, high, size=size)

    def subset(self, n: int, k: int) -> np.ndarray:
        """Sorted uniform k-subset of range(n), without replacement."""
        idx = self.gen.choice(n, size=k, replace=False)
        idx.sort()
        return idx

    def __repr__(self):
        return f"RandomStream(seed={self.seed.value}, path={self.path!r})"


def rng_new(seed: Seed | int) -> RandomStream:
    """Root stream for a run; all substreams derive from it by label."""
    return RandomStream(seed)


class FeatureGrid:
    """H×W token grid of D-dimensional feature vectors.

    Data is stored as a read-only float64 array of shape (height, width,
    dim). Construction rejects non-finite values.
    """

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeError(f"feature grid must be 3-d (H, W, D), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("feature grid contains NaN or Inf")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FeatureGrid is immutable")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    @property
    def tokens(self) -> int:
        return self.height * self.width

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def flat(self) -> np.ndarray:
        """(tokens, dim) view of the grid, row-major."""
        return self.data.reshape(self.tokens, self.dim)

    def __eq__(self, other):
        return isinstance(other, FeatureGrid) and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"FeatureGrid({self.height}x{self.width}x{self.dim})"


class BrainSignal:
    """Voxel activation vector for one recording of one subject."""

    __slots__ = ("values", "subject_id")

    def __init__(self, values: np.ndarray, subject_id: str):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("brain signal must be a nonempty 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("brain signal contains NaN or Inf")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "subject_id", subject_id)

    def __setattr__(self, name, value):
        raise AttributeError("BrainSignal is immutable")

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"BrainSignal(len={self.values.size}, subject={self.subject_id!r})"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, corner convention (x_min, y_min, x_max, y_max).

    Coordinates are 64-bit floats in a shared image frame; pixel or
    normalized units are both fine as long as one dataset is consistent.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not np.isfinite(v):
                raise ValidationError("box coordinates must be finite")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValidationError(
                f"box corners out of order: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_array(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.x_max, self.y_max])
