"""Noise schedule, forward corruption, and token masking."""

import numpy as np
import pytest

from brainalign.core import FeatureGrid, rng_new
from brainalign.errors import ValidationError
from brainalign.schedule import (
    ALPHA_BAR_FLOOR,
    NoiseSchedule,
    TokenMask,
    corrupt,
    corrupt_grid,
    cosine_schedule,
    sample_mask,
)


def test_cosine_schedule_endpoints_and_monotone():
    ab = cosine_schedule(1000)
    assert ab.shape == (1001,)
    assert ab[0] == 1.0
    assert np.all(np.diff(ab) < 0), "alpha_bar must strictly decrease"
    assert np.all(ab >= ALPHA_BAR_FLOOR)
    assert np.all(ab <= 1.0)


def test_cosine_schedule_floor_keeps_strict_order():
    # long schedules push the raw tail under the floor; the tilt must
    # keep neighbouring entries distinct
    ab = cosine_schedule(5000)
    tail = ab[-50:]
    assert np.all(np.diff(tail) < 0)


def test_cosine_schedule_validation():
    with pytest.raises(ValidationError):
        cosine_schedule(0)


def test_coefficients_identity_at_zero():
    sched = NoiseSchedule.cosine(100)
    sa, sb = sched.coefficients(0)
    assert float(sa) == 1.0
    assert float(sb) == 0.0
    with pytest.raises(ValidationError):
        sched.coefficients(101)
    with pytest.raises(ValidationError):
        sched.coefficients(-1)


def test_corrupt_matches_closed_form():
    sched = NoiseSchedule.cosine(10)
    v = np.ones((3, 4))
    eps = np.full((3, 4), 2.0)
    t = np.array([1, 5, 10])
    out = corrupt(v, eps, t, sched)
    sa, sb = sched.coefficients(t)
    expected = np.broadcast_to((sa * 1.0 + sb * 2.0)[:, None], (3, 4))
    np.testing.assert_allclose(out, expected)


def test_corrupt_scalar_timestep_broadcasts():
    sched = NoiseSchedule.cosine(10)
    v = np.ones((2, 3, 4))
    eps = np.zeros_like(v)
    out = corrupt(v, eps, 0, sched)
    np.testing.assert_allclose(out, v)


def test_corrupt_second_moment_monte_carlo():
    # E[v_t^2] = ab * v^2 + (1 - ab) for unit-variance noise
    sched = NoiseSchedule.cosine(100)
    stream = rng_new(0).substream("mc")
    t = 40
    v = np.full((10_000, 1), 0.7)
    eps = stream.normal(v.shape)
    vt = corrupt(v, eps, t, sched)
    ab = sched.alpha_bar[t]
    expected = ab * 0.49 + (1.0 - ab)
    observed = float(np.mean(vt**2))
    # var of eps^2 is 2 per sample; 3 sigma over 10^4 draws
    sigma = np.sqrt(2.0 / len(v)) * (1.0 - ab)
    assert abs(observed - expected) < 3.0 * sigma + 1e-3


def test_corrupt_shape_mismatch_raises():
    sched = NoiseSchedule.cosine(10)
    with pytest.raises(ValidationError):
        corrupt(np.ones((2, 3)), np.ones((3, 2)), 1, sched)
    with pytest.raises(ValidationError):
        corrupt(np.ones((2, 3)), np.ones((2, 3)), [1, 2, 3], sched)


def test_corrupt_accepts_integer_arrays():
    sched = NoiseSchedule.cosine(10)
    out = corrupt(np.ones((2, 3), dtype=int), np.zeros((2, 3), dtype=int), 0, sched)
    np.testing.assert_allclose(out, np.ones((2, 3)))


def test_corrupt_grid_single_step():
    grid = FeatureGrid(np.ones((2, 2, 3)))
    sched = NoiseSchedule.cosine(10)
    eps = np.zeros((4, 3))
    out = corrupt_grid(grid, eps, 0, sched)
    assert out.shape == (4, 3)
    np.testing.assert_allclose(out, 1.0)


def test_token_mask_count_contract():
    TokenMask(np.array([True, False, True, False]), 0.5)
    with pytest.raises(ValidationError):
        TokenMask(np.array([True, True, True, False]), 0.5)


def test_sample_mask_exact_count_and_determinism():
    for n, ratio in ((16, 0.5), (10, 0.33), (7, 0.5)):
        mask = sample_mask(n, ratio, rng_new(3).substream("mask"))
        assert mask.n_masked == round(ratio * n)
        assert mask.n_tokens == n
    a = sample_mask(16, 0.5, rng_new(1).substream("m")).flags
    b = sample_mask(16, 0.5, rng_new(1).substream("m")).flags
    np.testing.assert_array_equal(a, b)


def test_sample_mask_validation():
    with pytest.raises(ValidationError):
        sample_mask(16, 0.0, rng_new(0))
    with pytest.raises(ValidationError):
        sample_mask(1, 0.5, rng_new(0))
