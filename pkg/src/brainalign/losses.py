"""Training losses: full-grid regression and masked-only denoising.

Both return (value, gradient) pairs so callers can chain the analytic
backward passes. The combined objective is regression + beta *
denoising; by linearity its gradient is the same combination of the
two gradients.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DegenerateMask, ShapeError


def loss_regression(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over every element, with d(loss)/d(pred)."""
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    value = float(np.mean(diff**2))
    grad = (2.0 / diff.size) * diff
    return value, grad


def loss_denoise(
    eps_hat: np.ndarray,
    eps: np.ndarray,
    mask: np.ndarray,
) -> tuple[float, np.ndarray]:
    """MSE restricted to masked token rows, with d(loss)/d(eps_hat).

    eps_hat and eps are (B, n_tokens, dim); mask is an (n_tokens,)
    boolean vector. Unmasked positions contribute nothing to the value
    and receive zero gradient. An all-false mask raises.
    """
    if eps_hat.shape != eps.shape or eps_hat.ndim != 3:
        raise ShapeError(f"shape mismatch: {eps_hat.shape} vs {eps.shape}")
    mask = np.asarray(mask, dtype=bool)
    batch, n_tokens, dim = eps_hat.shape
    if mask.shape != (n_tokens,):
        raise ShapeError(f"mask shape {mask.shape} does not cover {n_tokens} tokens")
    n_masked = int(np.count_nonzero(mask))
    if n_masked == 0:
        raise DegenerateMask("denoising loss over an empty mask")
    diff = eps_hat - eps
    denom = batch * n_masked * dim
    value = kernels.masked_sq_err(
        diff.reshape(-1, dim), np.tile(mask, batch)
    ) / denom
    grad = np.zeros_like(diff)
    grad[:, mask, :] = (2.0 / denom) * diff[:, mask, :]
    return float(value), grad


def total_loss(l_regression: float, l_denoise: float, beta: float) -> float:
    """Combined objective l_regression + beta * l_denoise."""
    return l_regression + beta * l_denoise
