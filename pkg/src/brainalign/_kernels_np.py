"""Pure-NumPy kernel backend.

Reference implementations of the hot numerical kernels. The compiled
Cython backend (``brainalign._kernels``) exposes the same signatures;
``brainalign.kernels`` picks whichever is available at import time.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def pool2x2(x: np.ndarray) -> np.ndarray:
    """Mean-pool an (H, W, D) grid to (H/2, W/2, D). H and W must be even."""
    h, w, d = x.shape
    return x.reshape(h // 2, 2, w // 2, 2, d).mean(axis=(1, 3))


def silu(x: np.ndarray) -> np.ndarray:
    """x * sigmoid(x), elementwise."""
    return x / (1.0 + np.exp(-x))


def silu_grad(x: np.ndarray, gout: np.ndarray) -> np.ndarray:
    """Backward of silu: gout * sigmoid(x) * (1 + x * (1 - sigmoid(x)))."""
    s = 1.0 / (1.0 + np.exp(-x))
    return gout * s * (1.0 + x * (1.0 - s))


def corrupt_rows(v: np.ndarray, eps: np.ndarray, sa: np.ndarray, sb: np.ndarray) -> np.ndarray:
    """Per-row affine mix sa[i]*v[i] + sb[i]*eps[i] for (R, C) arrays."""
    return sa[:, None] * v + sb[:, None] * eps


def masked_sq_err(diff: np.ndarray, mask: np.ndarray) -> float:
    """Sum of squared entries of diff over rows where mask is true."""
    return float(np.sum(diff[mask.astype(bool)] ** 2))


def adamw_update(
    p: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    wd: float,
) -> None:
    """One decoupled-weight-decay Adam update, in place on p, m, v."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    p *= 1.0 - lr * wd
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def iou_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU per row for (N, 4) corner boxes; 0 where the union is empty."""
    ix = np.maximum(
        0.0, np.minimum(a[:, 2], b[:, 2]) - np.maximum(a[:, 0], b[:, 0])
    )
    iy = np.maximum(
        0.0, np.minimum(a[:, 3], b[:, 3]) - np.maximum(a[:, 1], b[:, 1])
    )
    inter = ix * iy
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a + area_b - inter
    out = np.zeros(len(a))
    nz = union > 0.0
    out[nz] = inter[nz] / union[nz]
    return out
