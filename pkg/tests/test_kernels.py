"""Numerical kernels against closed-form and brute-force oracles."""

import numpy as np
import pytest

from brainalign import _kernels_np as npk
from brainalign import kernels

try:
    from brainalign import _kernels as cyk
except ImportError:
    cyk = None

needs_ext = pytest.mark.skipif(cyk is None, reason="compiled backend not built")


def test_backend_is_exposed():
    assert kernels.BACKEND in ("numpy", "cython")


def test_silu_matches_formula():
    x = np.linspace(-6, 6, 101)
    expected = x / (1.0 + np.exp(-x))
    np.testing.assert_allclose(kernels.silu(x), expected, rtol=1e-12)


def test_silu_preserves_shape():
    x = np.zeros((3, 4, 5))
    assert kernels.silu(x).shape == (3, 4, 5)


def test_silu_grad_matches_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=40)
    g = rng.normal(size=40)
    h = 1e-6
    numeric = (npk.silu(x + h) - npk.silu(x - h)) / (2 * h) * g
    np.testing.assert_allclose(kernels.silu_grad(x, g), numeric, atol=1e-8)


def test_pool2x2_block_means():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 6, 3))
    out = kernels.pool2x2(x)
    assert out.shape == (2, 3, 3)
    for i in range(2):
        for j in range(3):
            block = x[2 * i:2 * i + 2, 2 * j:2 * j + 2]
            np.testing.assert_allclose(out[i, j], block.mean(axis=(0, 1)))


def test_corrupt_rows_is_row_affine():
    rng = np.random.default_rng(2)
    v = rng.normal(size=(5, 7))
    eps = rng.normal(size=(5, 7))
    sa = rng.uniform(size=5)
    sb = rng.uniform(size=5)
    out = kernels.corrupt_rows(v, eps, sa, sb)
    np.testing.assert_allclose(out, sa[:, None] * v + sb[:, None] * eps)


def test_masked_sq_err_reads_only_masked_rows():
    diff = np.arange(12, dtype=float).reshape(4, 3)
    mask = np.array([True, False, True, False])
    expected = float((diff[0] ** 2).sum() + (diff[2] ** 2).sum())
    assert kernels.masked_sq_err(diff, mask) == pytest.approx(expected)
    # rows outside the mask must not leak in
    diff2 = diff.copy()
    diff2[1] = 1e9
    assert kernels.masked_sq_err(diff2, mask) == pytest.approx(expected)


# --------------------------------------------------------------------- IoU

def _pixel_iou(a, b, size=32):
    """Count-cells oracle; exact for integer-corner boxes."""
    grid_a = np.zeros((size, size), dtype=bool)
    grid_b = np.zeros((size, size), dtype=bool)
    grid_a[int(a[1]):int(a[3]), int(a[0]):int(a[2])] = True
    grid_b[int(b[1]):int(b[3]), int(b[0]):int(b[2])] = True
    union = np.count_nonzero(grid_a | grid_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(grid_a & grid_b) / union


def test_iou_batch_against_pixel_oracle():
    rng = np.random.default_rng(3)
    lo = rng.integers(0, 20, size=(200, 2))
    hi = lo + rng.integers(1, 12, size=(200, 2))
    a = np.hstack([lo, hi]).astype(float)
    lo2 = rng.integers(0, 20, size=(200, 2))
    hi2 = lo2 + rng.integers(1, 12, size=(200, 2))
    b = np.hstack([lo2, hi2]).astype(float)
    got = kernels.iou_batch(a, b)
    expected = [_pixel_iou(a[i], b[i]) for i in range(len(a))]
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_iou_batch_symmetric_and_bounded():
    rng = np.random.default_rng(4)
    lo = rng.uniform(0, 1, size=(300, 2))
    hi = lo + rng.uniform(0, 1, size=(300, 2))
    a = np.hstack([lo, hi])
    lo2 = rng.uniform(0, 1, size=(300, 2))
    hi2 = lo2 + rng.uniform(0, 1, size=(300, 2))
    b = np.hstack([lo2, hi2])
    ab = kernels.iou_batch(a, b)
    ba = kernels.iou_batch(b, a)
    np.testing.assert_allclose(ab, ba)
    assert np.all(ab >= 0.0) and np.all(ab <= 1.0)


def test_iou_batch_degenerate_boxes_give_zero():
    z = np.array([[1.0, 1.0, 1.0, 1.0]])
    assert kernels.iou_batch(z, z)[0] == 0.0


# ------------------------------------------------------------------- AdamW

def test_adamw_update_single_step_hand_computed():
    # p=1, g=0.5, fresh moments, step 1, lr=0.1, betas (0.9, 0.95), wd=0.01:
    # m=0.05, v=0.0125, mhat=0.5, vhat=0.25,
    # p' = 0.999 - 0.1 * 0.5 / (0.5 + 1e-8) = 0.899000002
    p = np.array([1.0])
    g = np.array([0.5])
    m = np.zeros(1)
    v = np.zeros(1)
    kernels.adamw_update(p, g, m, v, 1, 0.1, 0.9, 0.95, 1e-8, 0.01)
    assert m[0] == pytest.approx(0.05, abs=1e-15)
    assert v[0] == pytest.approx(0.0125, abs=1e-15)
    assert p[0] == pytest.approx(0.899000002, abs=1e-9)


def test_adamw_decay_is_decoupled():
    # zero gradient must still shrink the parameter by lr * wd
    p = np.array([2.0])
    m = np.zeros(1)
    v = np.zeros(1)
    kernels.adamw_update(p, np.zeros(1), m, v, 1, 0.1, 0.9, 0.95, 1e-8, 0.01)
    assert p[0] == pytest.approx(2.0 * (1.0 - 0.1 * 0.01))


@needs_ext
def test_backends_agree():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(6, 8, 4))
    g = rng.normal(size=(6, 8, 4))
    np.testing.assert_allclose(cyk.silu(x), npk.silu(x), rtol=1e-14)
    np.testing.assert_allclose(cyk.silu_grad(x, g), npk.silu_grad(x, g), rtol=1e-14)
    grid = rng.normal(size=(8, 10, 5))
    np.testing.assert_allclose(cyk.pool2x2(grid), npk.pool2x2(grid), rtol=1e-14)
    v = rng.normal(size=(10, 7))
    eps = rng.normal(size=(10, 7))
    sa = rng.uniform(size=10)
    sb = rng.uniform(size=10)
    np.testing.assert_allclose(
        cyk.corrupt_rows(v, eps, sa, sb), npk.corrupt_rows(v, eps, sa, sb), rtol=1e-14
    )
    mask = rng.uniform(size=10) > 0.5
    assert cyk.masked_sq_err(v, mask) == pytest.approx(npk.masked_sq_err(v, mask))
    lo = rng.uniform(0, 1, size=(50, 2))
    hi = lo + rng.uniform(0, 1, size=(50, 2))
    a = np.hstack([lo, hi])
    b = a + 0.1
    np.testing.assert_allclose(cyk.iou_batch(a, b), npk.iou_batch(a, b), rtol=1e-14)
    p1 = rng.normal(size=30)
    g1 = rng.normal(size=30)
    p2, m1, v1 = p1.copy(), np.zeros(30), np.zeros(30)
    m2, v2 = np.zeros(30), np.zeros(30)
    cyk.adamw_update(p1, g1, m1, v1, 4, 1e-3, 0.9, 0.95, 1e-8, 0.01)
    npk.adamw_update(p2, g1, m2, v2, 4, 1e-3, 0.9, 0.95, 1e-8, 0.01)
    np.testing.assert_allclose(p1, p2, rtol=1e-14)
    np.testing.assert_allclose(m1, m2, rtol=1e-14)
    np.testing.assert_allclose(v1, v2, rtol=1e-14)
