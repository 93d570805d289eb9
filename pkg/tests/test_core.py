"""Deterministic RNG contract and shared domain types."""

import numpy as np
import pytest

from brainalign.core import BBox, BrainSignal, FeatureGrid, RandomStream, Seed, rng_new
from brainalign.errors import ShapeError, ValidationError


def test_same_seed_same_draws():
    a = rng_new(42).normal(10)
    b = rng_new(42).normal(10)
    np.testing.assert_array_equal(a, b)


def test_substreams_are_labeled_and_disjoint():
    root = rng_new(1)
    x = root.substream("x").normal(100)
    y = root.substream("y").normal(100)
    x2 = rng_new(1).substream("x").normal(100)
    np.testing.assert_array_equal(x, x2)
    assert not np.array_equal(x, y)


def test_substream_path_is_hierarchical():
    # "a" then "b" differs from the flat label "ab" or "a.b"
    ab = rng_new(3).substream("a").substream("b").normal(8)
    flat = rng_new(3).substream("ab").normal(8)
    dotted = rng_new(3).substream("a.b").normal(8)
    assert not np.array_equal(ab, flat)
    assert not np.array_equal(ab, dotted)


def test_drawing_does_not_disturb_sibling_streams():
    root = rng_new(9)
    a = root.substream("left")
    a.normal(1000)  # consume a lot
    fresh = rng_new(9).substream("right").normal(5)
    used = root.substream("right").normal(5)
    np.testing.assert_array_equal(fresh, used)


def test_pinned_values_stable_across_runs():
    # frozen from a reference run; counter-based generator with a hashed
    # key, so these must never drift
    np.testing.assert_allclose(
        rng_new(0).substream("x").normal(3),
        [1.50862752, 2.57365935, 0.40040359],
        atol=1e-8,
    )
    np.testing.assert_allclose(
        rng_new(7).substream("a").substream("b").uniform(2),
        [0.55585847, 0.23774424],
        atol=1e-8,
    )
    np.testing.assert_array_equal(
        rng_new(0).integers(100, size=4), [29, 48, 71, 39]
    )


def test_subset_sorted_unique_sized():
    idx = rng_new(5).subset(50, 12)
    assert len(idx) == 12
    assert len(set(idx.tolist())) == 12
    assert np.all(np.diff(idx) > 0)
    assert idx.min() >= 0 and idx.max() < 50


def test_seed_range_validation():
    Seed(0)
    Seed(2**64 - 1)
    with pytest.raises(ValidationError):
        Seed(-1)
    with pytest.raises(ValidationError):
        Seed(2**64)


def test_stream_accepts_plain_int():
    s = RandomStream(11)
    assert s.seed == Seed(11)


# ------------------------------------------------------------ domain types

def test_feature_grid_shape_and_flat():
    g = FeatureGrid(np.arange(24, dtype=float).reshape(2, 3, 4))
    assert (g.height, g.width, g.dim, g.tokens) == (2, 3, 4, 6)
    assert g.flat().shape == (6, 4)
    np.testing.assert_array_equal(g.flat()[1], [4, 5, 6, 7])


def test_feature_grid_immutable_and_validated():
    g = FeatureGrid(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        g.data[0, 0, 0] = 1.0
    with pytest.raises(AttributeError):
        g.data = np.zeros((2, 2, 2))
    with pytest.raises(ShapeError):
        FeatureGrid(np.zeros((2, 2)))
    bad = np.zeros((2, 2, 2))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValidationError):
        FeatureGrid(bad)


def test_brain_signal_validation():
    s = BrainSignal(np.ones(5), "subj01")
    assert len(s) == 5
    with pytest.raises(ValidationError):
        BrainSignal(np.ones((2, 2)), "subj01")
    with pytest.raises(ValidationError):
        BrainSignal(np.array([1.0, np.inf]), "subj01")


def test_bbox_validation_and_area():
    b = BBox(0.0, 0.0, 2.0, 3.0)
    assert b.area == 6.0
    with pytest.raises(ValidationError):
        BBox(2.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        BBox(0.0, 0.0, np.nan, 1.0)
