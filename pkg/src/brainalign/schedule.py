"""Cosine noise schedule, feature corruption, and token masking.

The schedule follows the squared-cosine form with offset s = 0.008:
f(t) = cos(((t/T + s) / (1 + s)) * pi/2)^2, alpha_bar(t) = f(t)/f(0).
Values are clipped into [1e-5, 1]; where the raw curve would sit flat
at the floor, a vanishing tilt keeps the sequence strictly decreasing
so that every timestep still injects more noise than the last.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import FeatureGrid, RandomStream
from .errors import ValidationError

ALPHA_BAR_FLOOR = 1e-5
_FLOOR_TILT = 1e-9


def cosine_schedule(n_steps: int, s: float = 0.008) -> np.ndarray:
    """alpha_bar values for t = 0..n_steps inclusive.

    alpha_bar[0] is exactly 1, the sequence is strictly decreasing,
    and every entry stays within [1e-5, 1].
    """
    if n_steps < 1:
        raise ValidationError(f"schedule needs at least one step, got {n_steps}")
    t = np.arange(n_steps + 1, dtype=np.float64)
    f = np.cos(((t / n_steps + s) / (1.0 + s)) * (np.pi / 2.0)) ** 2
    alpha_bar = f / f[0]
    alpha_bar = np.minimum(alpha_bar, 1.0)
    # Raw values below the floor would tie; tilt the floor by a strictly
    # decreasing hair so monotonicity survives the clip.
    floor = ALPHA_BAR_FLOOR * (1.0 + (n_steps - t) * _FLOOR_TILT)
    alpha_bar = np.maximum(alpha_bar, floor)
    alpha_bar[0] = 1.0
    return alpha_bar


@dataclass(frozen=True)
class NoiseSchedule:
    """Precomputed alpha_bar table for t = 0..n_steps."""

    n_steps: int
    alpha_bar: np.ndarray

    @classmethod
    def cosine(cls, n_steps: int = 1000, s: float = 0.008) -> "NoiseSchedule":
        return cls(n_steps, cosine_schedule(n_steps, s))

    def coefficients(self, t: np.ndarray | int) -> tuple[np.ndarray, np.ndarray]:
        """(sqrt(alpha_bar_t), sqrt(1 - alpha_bar_t)) for timesteps t."""
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t > self.n_steps):
            raise ValidationError(f"timestep outside 0..{self.n_steps}")
        ab = self.alpha_bar[t]
        return np.sqrt(ab), np.sqrt(1.0 - ab)


def corrupt(
    v: np.ndarray,
    eps: np.ndarray,
    t: np.ndarray | int,
    schedule: NoiseSchedule,
) -> np.ndarray:
    """Forward corruption sqrt(ab_t) * v + sqrt(1 - ab_t) * eps.

    v and eps must agree in shape. t is either a scalar applied to the
    whole array or a vector with one timestep per leading-axis row.
    """
    v = np.asarray(v, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if v.shape != eps.shape:
        raise ValidationError(f"shape mismatch: {v.shape} vs {eps.shape}")
    sa, sb = schedule.coefficients(t)
    if np.ndim(sa) == 0:
        n_rows = v.shape[0] if v.ndim > 1 else 1
        sa = np.full(n_rows, float(sa))
        sb = np.full(n_rows, float(sb))
    elif v.ndim < 2 or len(sa) != v.shape[0]:
        raise ValidationError("need one timestep per leading-axis row")
    rows = v.reshape(len(sa), -1)
    noise = eps.reshape(len(sa), -1)
    return kernels.corrupt_rows(rows, noise, sa, sb).reshape(v.shape)


def corrupt_grid(
    grid: FeatureGrid,
    eps: np.ndarray,
    t: int,
    schedule: NoiseSchedule,
) -> np.ndarray:
    """Corrupt one grid at a single timestep; returns (tokens, D)."""
    flat = grid.flat()
    return corrupt(flat[None], eps.reshape(flat.shape)[None], [t], schedule)[0]


@dataclass(frozen=True)
class TokenMask:
    """Boolean mask over token positions with its target ratio.

    The number of true flags is exactly round(ratio * n_tokens).
    """

    flags: np.ndarray
    ratio: float

    def __post_init__(self) -> None:
        flags = np.asarray(self.flags, dtype=bool)
        object.__setattr__(self, "flags", flags)
        if flags.ndim != 1 or flags.size == 0:
            raise ValidationError("mask flags must be a nonempty vector")
        want = int(round(self.ratio * flags.size))
        have = int(np.count_nonzero(flags))
        if have != want:
            raise ValidationError(
                f"mask has {have} set flags, expected round({self.ratio} * {flags.size}) = {want}"
            )

    @property
    def n_tokens(self) -> int:
        return int(self.flags.size)

    @property
    def n_masked(self) -> int:
        return int(np.count_nonzero(self.flags))


def sample_mask(n_tokens: int, ratio: float, stream: RandomStream) -> TokenMask:
    """Uniformly choose round(ratio * n_tokens) positions to mask."""
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"mask ratio must be inside (0, 1), got {ratio}")
    if n_tokens < 2:
        raise ValidationError(f"need at least two tokens to mask, got {n_tokens}")
    k = int(round(ratio * n_tokens))
    flags = np.zeros(n_tokens, dtype=bool)
    if k > 0:
        flags[stream.subset(n_tokens, k)] = True
    return TokenMask(flags, ratio)
