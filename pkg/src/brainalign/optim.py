"""AdamW with bias correction and a one-cycle learning-rate shape.

The optimizer owns first/second moment buffers keyed by parameter
name and updates parameter arrays in place. Decoupled weight decay
multiplies parameters by (1 - lr * wd) each step, so with a zero
gradient they shrink geometrically and never flip sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .errors import ValidationError


@dataclass
class AdamConfig:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.95
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class AdamState:
    """Moment buffers and step counter for one parameter collection."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adamw_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    config: AdamConfig,
    lr: float | None = None,
) -> None:
    """One update over every named parameter, in place.

    lr overrides config.lr for schedules that change it per step.
    Buffers are created lazily on first sight of a name; a gradient
    whose shape disagrees with its parameter raises.
    """
    state.step += 1
    rate = config.lr if lr is None else lr
    for name in params:
        p = params[name]
        g = grads[name]
        if g.shape != p.shape:
            raise ValidationError(
                f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}"
            )
        if not p.flags.c_contiguous:
            raise ValidationError(f"parameter {name!r} must be C-contiguous")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        kernels.adamw_update(
            p.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            state.m[name].reshape(-1),
            state.v[name].reshape(-1),
            state.step,
            rate,
            config.beta1,
            config.beta2,
            config.eps,
            config.weight_decay,
        )


def one_cycle_lr(step: int, total_steps: int, lr_max: float) -> float:
    """One-cycle rate: linear warmup from lr_max / 25 at step 0 up to
    lr_max at 30% of the run, then cosine anneal back to lr_max / 25.

    Defined for 0 <= step <= total_steps; the two branches agree at the
    junction, and the value never leaves [lr_max / 25, lr_max].
    """
    if total_steps < 1:
        raise ValidationError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside 0..{total_steps}")
    floor = lr_max / 25.0
    warmup = max(1, int(round(0.3 * total_steps)))
    if step <= warmup:
        return floor + (lr_max - floor) * (step / warmup)
    frac = (step - warmup) / (total_steps - warmup)
    return floor + (lr_max - floor) * 0.5 * (1.0 + np.cos(np.pi * frac))
