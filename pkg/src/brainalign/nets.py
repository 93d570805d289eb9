"""Brain encoder and masked denoiser with hand-written backward passes.

The encoder maps a per-subject signal through a subject-specific
linear adapter, a shared two-layer tanh trunk, and a linear head onto
a token grid. The denoiser is a stack of residual blocks (layer norm,
two linear maps with a SiLU between, residual add) whose layer-norm
output is modulated by a per-token scale/shift pair: the timestep
embedding is broadcast across tokens and added to a projection of
that token's encoder output, so denoising gradients reach the encoder
at every conditioned token rather than only through a pooled summary.
Masked token rows stay visible to the denoiser; a fixed sinusoidal
positional code is added to exactly those rows to mark which
positions the loss will read. Keeping the corrupted row in the input
is what lets the denoiser combine it with the conditioning signal to
estimate the injected noise — replacing masked rows wholesale would
make the target statistically independent of every input and pin the
denoising loss to a constant.

Everything is float64 NumPy. Each forward returns a cache that the
matching backward consumes; gradients come back as a flat name ->
array dict aligned with ``named_arrays`` of the parameter object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .core import RandomStream
from .errors import ShapeError, UnknownSubject

_LN_EPS = 1e-5


def sinusoidal_embedding(values: np.ndarray, dim: int) -> np.ndarray:
    """(N,) scalars -> (N, dim) interleaved sin/cos features."""
    if dim % 2:
        raise ShapeError(f"sinusoidal embedding dim must be even, got {dim}")
    values = np.asarray(values, dtype=np.float64)
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    ang = values[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


# ------------------------------------------------------------------ encoder

@dataclass
class BrainEncoderParams:
    """Per-subject adapters plus the shared trunk and head."""

    adapter_w: dict[str, np.ndarray]
    adapter_b: dict[str, np.ndarray]
    trunk_w1: np.ndarray
    trunk_b1: np.ndarray
    trunk_w2: np.ndarray
    trunk_b2: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray
    tokens: int
    dim: int

    def named_arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        for subject in sorted(self.adapter_w):
            yield f"adapter.{subject}.w", self.adapter_w[subject]
            yield f"adapter.{subject}.b", self.adapter_b[subject]
        yield "trunk_w1", self.trunk_w1
        yield "trunk_b1", self.trunk_b1
        yield "trunk_w2", self.trunk_w2
        yield "trunk_b2", self.trunk_b2
        yield "head_w", self.head_w
        yield "head_b", self.head_b

    @property
    def hidden(self) -> int:
        return self.trunk_w1.shape[0]

    @property
    def subjects(self) -> tuple[str, ...]:
        return tuple(sorted(self.adapter_w))


def init_encoder(
    subject_dims: Mapping[str, int],
    hidden: int,
    tokens: int,
    dim: int,
    stream: RandomStream,
) -> BrainEncoderParams:
    """Scaled-normal init, one adapter per subject, shared trunk/head."""
    if not subject_dims:
        raise ShapeError("need at least one subject")
    adapter_w = {}
    adapter_b = {}
    for subject in sorted(subject_dims):
        length = subject_dims[subject]
        sub = stream.substream(f"adapter.{subject}")
        adapter_w[subject] = sub.normal((length, hidden)) / np.sqrt(length)
        adapter_b[subject] = np.zeros(hidden)
    trunk = stream.substream("trunk")
    head = stream.substream("head")
    return BrainEncoderParams(
        adapter_w=adapter_w,
        adapter_b=adapter_b,
        trunk_w1=trunk.normal((hidden, hidden)) / np.sqrt(hidden),
        trunk_b1=np.zeros(hidden),
        trunk_w2=trunk.normal((hidden, hidden)) / np.sqrt(hidden),
        trunk_b2=np.zeros(hidden),
        head_w=head.normal((hidden, tokens * dim)) / np.sqrt(hidden),
        head_b=np.zeros(tokens * dim),
        tokens=tokens,
        dim=dim,
    )


@dataclass
class _EncoderCache:
    order: list[tuple[str, np.ndarray]]   # subject -> row indices
    signals: dict[str, np.ndarray]
    a0: dict[str, np.ndarray]
    a1: np.ndarray
    a2: np.ndarray
    batch: int


def encoder_forward(
    params: BrainEncoderParams,
    signals: Sequence[np.ndarray],
    subjects: Sequence[str],
) -> tuple[np.ndarray, _EncoderCache]:
    """Batch forward; signals may mix subjects with different lengths.

    Returns (B, tokens, dim) predictions and the backward cache.
    """
    if len(signals) != len(subjects):
        raise ShapeError("one subject label per signal required")
    batch = len(signals)
    if batch == 0:
        raise ShapeError("empty batch")
    hidden = params.hidden
    a0_full = np.empty((batch, hidden))
    order: list[tuple[str, np.ndarray]] = []
    sig_groups: dict[str, np.ndarray] = {}
    a0_groups: dict[str, np.ndarray] = {}
    for subject in sorted(set(subjects)):
        if subject not in params.adapter_w:
            raise UnknownSubject(f"no adapter for subject {subject!r}")
        rows = np.array([i for i, s in enumerate(subjects) if s == subject])
        mat = np.stack([np.asarray(signals[i], dtype=np.float64) for i in rows])
        if mat.shape[1] != params.adapter_w[subject].shape[0]:
            raise ShapeError(
                f"signal length {mat.shape[1]} does not match adapter for {subject!r}"
            )
        a0 = mat @ params.adapter_w[subject] + params.adapter_b[subject]
        a0_full[rows] = a0
        order.append((subject, rows))
        sig_groups[subject] = mat
        a0_groups[subject] = a0
    a1 = np.tanh(a0_full @ params.trunk_w1 + params.trunk_b1)
    a2 = np.tanh(a1 @ params.trunk_w2 + params.trunk_b2)
    out = a2 @ params.head_w + params.head_b
    cache = _EncoderCache(order, sig_groups, a0_groups, a1, a2, batch)
    return out.reshape(batch, params.tokens, params.dim), cache


def encoder_backward(
    params: BrainEncoderParams,
    cache: _EncoderCache,
    d_out: np.ndarray,
) -> dict[str, np.ndarray]:
    """Gradients for every encoder parameter given d(loss)/d(output)."""
    batch = cache.batch
    flat = d_out.reshape(batch, -1)
    grads: dict[str, np.ndarray] = {}
    grads["head_w"] = cache.a2.T @ flat
    grads["head_b"] = flat.sum(axis=0)
    d_a2 = flat @ params.head_w.T
    d_z2 = d_a2 * (1.0 - cache.a2**2)
    grads["trunk_w2"] = cache.a1.T @ d_z2
    grads["trunk_b2"] = d_z2.sum(axis=0)
    d_a1 = d_z2 @ params.trunk_w2.T
    d_z1 = d_a1 * (1.0 - cache.a1**2)
    # a0 feeds trunk layer 1; recover it groupwise for the adapters.
    d_a0 = d_z1 @ params.trunk_w1.T
    a0_full = np.empty((batch, params.hidden))
    for subject, rows in cache.order:
        a0_full[rows] = cache.a0[subject]
    grads["trunk_w1"] = a0_full.T @ d_z1
    grads["trunk_b1"] = d_z1.sum(axis=0)
    for subject, rows in cache.order:
        d_rows = d_a0[rows]
        grads[f"adapter.{subject}.w"] = cache.signals[subject].T @ d_rows
        grads[f"adapter.{subject}.b"] = d_rows.sum(axis=0)
    for subject in params.adapter_w:
        if f"adapter.{subject}.w" not in grads:
            grads[f"adapter.{subject}.w"] = np.zeros_like(params.adapter_w[subject])
            grads[f"adapter.{subject}.b"] = np.zeros_like(params.adapter_b[subject])
    return grads


# ----------------------------------------------------------------- denoiser

@dataclass
class DenoiserBlock:
    ln_gain: np.ndarray
    ln_bias: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class DenoiserParams:
    """Residual MLP stack with adaptive layer-norm conditioning."""

    time_w: np.ndarray
    time_b: np.ndarray
    cond_w: np.ndarray
    cond_b: np.ndarray
    blocks: list[DenoiserBlock] = field(default_factory=list)

    def named_arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        yield "time_w", self.time_w
        yield "time_b", self.time_b
        yield "cond_w", self.cond_w
        yield "cond_b", self.cond_b
        for i, block in enumerate(self.blocks):
            yield f"block{i}.ln_gain", block.ln_gain
            yield f"block{i}.ln_bias", block.ln_bias
            yield f"block{i}.w1", block.w1
            yield f"block{i}.b1", block.b1
            yield f"block{i}.w2", block.w2
            yield f"block{i}.b2", block.b2

    @property
    def dim(self) -> int:
        return self.cond_w.shape[0]

    @property
    def time_embed_dim(self) -> int:
        return self.time_w.shape[0]


def init_denoiser(
    dim: int,
    width: int,
    depth: int,
    stream: RandomStream,
    time_embed_dim: int = 64,
) -> DenoiserParams:
    """Init with zeroed block outputs so the stack starts as identity."""
    if dim % 2:
        raise ShapeError(f"denoiser needs an even channel dim, got {dim}")
    if depth < 1 or width < 1:
        raise ShapeError(f"depth and width must be positive, got {depth}, {width}")
    cond = stream.substream("cond")
    blocks = []
    for i in range(depth):
        bs = stream.substream(f"block{i}")
        blocks.append(
            DenoiserBlock(
                ln_gain=np.ones(dim),
                ln_bias=np.zeros(dim),
                w1=bs.normal((dim, width)) / np.sqrt(dim),
                b1=np.zeros(width),
                w2=np.zeros((width, dim)),
                b2=np.zeros(dim),
            )
        )
    return DenoiserParams(
        time_w=cond.normal((time_embed_dim, 2 * dim)) / np.sqrt(time_embed_dim),
        time_b=np.zeros(2 * dim),
        cond_w=cond.normal((dim, 2 * dim)) / np.sqrt(dim),
        cond_b=np.zeros(2 * dim),
        blocks=blocks,
    )


@dataclass
class _BlockCache:
    xhat: np.ndarray
    rstd: np.ndarray
    h: np.ndarray
    hm: np.ndarray
    q: np.ndarray
    u: np.ndarray


@dataclass
class _DenoiserCache:
    mask: np.ndarray
    b: np.ndarray
    temb: np.ndarray
    scale: np.ndarray
    shift: np.ndarray
    blocks: list[_BlockCache]
    n_tokens: int


def token_positions(n_tokens: int, dim: int) -> np.ndarray:
    """Fixed sinusoidal code for each flattened token position."""
    return sinusoidal_embedding(np.arange(n_tokens, dtype=np.float64), dim)


def denoiser_forward(
    params: DenoiserParams,
    v_t: np.ndarray,
    b: np.ndarray,
    t: np.ndarray,
    mask: np.ndarray,
) -> tuple[np.ndarray, _DenoiserCache]:
    """Predict the injected noise from corrupted features.

    v_t and b are (B, n_tokens, dim); t is (B,) integer timesteps;
    mask is an (n_tokens,) boolean vector shared across the batch.
    The positional code is added to the masked rows of v_t before the
    first block; every row stays visible.
    """
    if v_t.shape != b.shape or v_t.ndim != 3:
        raise ShapeError(f"v_t {v_t.shape} and condition {b.shape} must both be (B, n, D)")
    batch, n_tokens, dim = v_t.shape
    if dim != params.dim:
        raise ShapeError(f"channel dim {dim} does not match parameters ({params.dim})")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n_tokens,):
        raise ShapeError(f"mask shape {mask.shape} does not cover {n_tokens} tokens")

    pos = token_positions(n_tokens, dim)
    x = np.array(v_t, dtype=np.float64)
    x[:, mask, :] += pos[mask]

    temb = sinusoidal_embedding(np.asarray(t, dtype=np.float64), params.time_embed_dim)
    tcond = temb @ params.time_w + params.time_b
    cond = tcond[:, None, :] + b @ params.cond_w + params.cond_b
    scale = cond[..., :dim]
    shift = cond[..., dim:]

    caches: list[_BlockCache] = []
    for block in params.blocks:
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = np.mean(xc**2, axis=-1, keepdims=True)
        rstd = 1.0 / np.sqrt(var + _LN_EPS)
        xhat = xc * rstd
        h = xhat * block.ln_gain + block.ln_bias
        hm = h * (1.0 + scale) + shift
        q = hm.reshape(-1, dim) @ block.w1 + block.b1
        u = kernels.silu(q)
        r = (u @ block.w2 + block.b2).reshape(batch, n_tokens, dim)
        caches.append(_BlockCache(xhat, rstd, h, hm, q, u))
        x = x + r
    cache = _DenoiserCache(mask, b, temb, scale, shift, caches, n_tokens)
    return x, cache


def denoiser_backward(
    params: DenoiserParams,
    cache: _DenoiserCache,
    d_eps: np.ndarray,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients for denoiser parameters and for the conditioning b.

    Returns (grads, d_b) where d_b is (B, n_tokens, dim); no gradient
    is propagated into v_t, which is data.
    """
    batch, n_tokens, dim = d_eps.shape
    g = np.array(d_eps, dtype=np.float64)
    grads: dict[str, np.ndarray] = {}
    d_scale = np.zeros_like(cache.scale)
    d_shift = np.zeros_like(cache.shift)
    for i in range(len(params.blocks) - 1, -1, -1):
        block = params.blocks[i]
        bc = cache.blocks[i]
        g2d = g.reshape(-1, dim)
        grads[f"block{i}.w2"] = bc.u.T @ g2d
        grads[f"block{i}.b2"] = g2d.sum(axis=0)
        d_u = g2d @ block.w2.T
        d_q = kernels.silu_grad(bc.q, d_u)
        grads[f"block{i}.w1"] = bc.hm.reshape(-1, dim).T @ d_q
        grads[f"block{i}.b1"] = d_q.sum(axis=0)
        d_hm = (d_q @ block.w1.T).reshape(batch, n_tokens, dim)
        d_h = d_hm * (1.0 + cache.scale)
        d_scale += d_hm * bc.h
        d_shift += d_hm
        d_xhat = d_h * block.ln_gain
        grads[f"block{i}.ln_gain"] = np.sum(d_h * bc.xhat, axis=(0, 1))
        grads[f"block{i}.ln_bias"] = np.sum(d_h, axis=(0, 1))
        mean1 = d_xhat.mean(axis=-1, keepdims=True)
        mean2 = np.mean(d_xhat * bc.xhat, axis=-1, keepdims=True)
        g = g + bc.rstd * (d_xhat - mean1 - bc.xhat * mean2)
    d_cond = np.concatenate([d_scale, d_shift], axis=2)
    d_cond2d = d_cond.reshape(-1, 2 * dim)
    grads["time_w"] = cache.temb.T @ d_cond.sum(axis=1)
    grads["time_b"] = d_cond2d.sum(axis=0)
    grads["cond_w"] = cache.b.reshape(-1, dim).T @ d_cond2d
    grads["cond_b"] = d_cond2d.sum(axis=0)
    d_b = d_cond @ params.cond_w.T
    return grads, d_b
