"""Training loop for the masked-denoising alignment objective.

One run draws every random quantity from labeled substreams of a
single seed: encoder init, denoiser init, batch order, timesteps,
noise, and masks each get their own stream. A run with beta = 0 reads
only the encoder and batch streams and never builds the denoiser, so
paired runs at beta = 0 and beta > 0 see identical data order and
identical encoder initialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import RandomStream, rng_new
from .errors import DivergenceError, ValidationError
from .losses import loss_denoise, loss_regression, total_loss
from .nets import (
    BrainEncoderParams,
    DenoiserParams,
    denoiser_backward,
    denoiser_forward,
    encoder_backward,
    encoder_forward,
    init_denoiser,
    init_encoder,
)
from .optim import AdamConfig, AdamState, adamw_step, one_cycle_lr
from .schedule import NoiseSchedule, corrupt, sample_mask
from .task import SyntheticTask, make_synthetic_task


@dataclass
class TrainConfig:
    """Hyperparameters; defaults are the paired-objective baseline.

    Each step draws a single token mask. Averaging the denoising term
    over several masks per step is a legitimate variant (lower-variance
    estimate at proportionally higher cost); it is deliberately not
    implemented, so that one config row maps to one gradient evaluation.
    """

    beta: float = 1.0
    steps: int = 2000
    batch_size: int = 16
    lr_max: float = 3e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.95
    weight_decay: float = 0.01
    mask_ratio: float = 0.5
    n_timesteps: int = 1000
    depth: int = 1
    width: int = 1024
    hidden: int = 128
    time_embed_dim: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValidationError(f"beta must be nonnegative, got {self.beta}")
        if self.steps < 0 or self.batch_size < 1:
            raise ValidationError("steps must be nonnegative, batch_size positive")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ValidationError(
                f"mask_ratio must be inside (0, 1), got {self.mask_ratio}"
            )

    @classmethod
    def from_mapping(cls, data: Mapping) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _stratified_timesteps(
    n_timesteps: int, batch: int, stream: RandomStream
) -> np.ndarray:
    """One timestep per batch row, jittered over equal strata of [0, 1).

    Each row's marginal law is exactly uniform over {1..n_timesteps}
    (a random permutation assigns strata to rows), but every batch
    covers the noise-level range evenly, which removes the batch-to-
    batch lottery over timesteps that iid draws would inject into the
    denoising-loss estimate.
    """
    u = (np.arange(batch) + stream.uniform(batch)) / batch
    t = np.minimum((u * n_timesteps).astype(np.int64), n_timesteps - 1) + 1
    perm = np.argsort(stream.uniform(batch), kind="stable")
    return t[perm]


@dataclass
class TrainHistory:
    """Per-step loss curves; every entry is a plain float."""

    l_regression: list[float] = field(default_factory=list)
    l_denoise: list[float] = field(default_factory=list)
    total: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)

    def append(self, l_r: float, l_d: float, tot: float, rate: float) -> None:
        self.l_regression.append(l_r)
        self.l_denoise.append(l_d)
        self.total.append(tot)
        self.lr.append(rate)

    def __len__(self) -> int:
        return len(self.total)

    def to_dict(self) -> dict:
        return {
            "l_regression": self.l_regression,
            "l_denoise": self.l_denoise,
            "total": self.total,
            "lr": self.lr,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def tail_window(self, fraction: float = 0.2) -> dict[str, list[float]]:
        """The last `fraction` of the run, for settled-phase statistics."""
        n = max(1, int(round(fraction * len(self.total))))
        return {
            "l_regression": self.l_regression[-n:],
            "l_denoise": self.l_denoise[-n:],
            "total": self.total[-n:],
        }


@dataclass
class TrainResult:
    encoder: BrainEncoderParams
    denoiser: DenoiserParams | None
    history: TrainHistory
    config: TrainConfig


def _merge_params(
    encoder: BrainEncoderParams, denoiser: DenoiserParams | None
) -> dict[str, np.ndarray]:
    merged = {f"enc.{name}": arr for name, arr in encoder.named_arrays()}
    if denoiser is not None:
        merged.update({f"dn.{name}": arr for name, arr in denoiser.named_arrays()})
    return merged


def train(task: SyntheticTask, config: TrainConfig) -> TrainResult:
    """Run the loop; raises DivergenceError if losses leave float range."""
    root = rng_new(config.seed)
    encoder = init_encoder(
        task.subject_dims,
        config.hidden,
        task.tokens,
        task.dim,
        root.substream("encoder-init"),
    )
    use_denoiser = config.beta > 0.0
    denoiser = None
    schedule = None
    if use_denoiser:
        denoiser = init_denoiser(
            task.dim,
            config.width,
            config.depth,
            root.substream("denoiser-init"),
            config.time_embed_dim,
        )
        schedule = NoiseSchedule.cosine(config.n_timesteps)
    data_stream = root.substream("data")
    time_stream = root.substream("timesteps")
    noise_stream = root.substream("noise")
    mask_stream = root.substream("mask")

    params = _merge_params(encoder, denoiser)
    state = AdamState()
    adam = AdamConfig(
        lr=config.lr_max,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        weight_decay=config.weight_decay,
    )
    history = TrainHistory()

    signals = [s.signal for s in task.samples]
    subjects = [s.subject for s in task.samples]
    targets = np.stack([s.target for s in task.samples])
    n_tokens = task.tokens

    for step in range(config.steps):
        idx = data_stream.integers(task.n_samples, size=config.batch_size)
        batch_signals = [signals[i] for i in idx]
        batch_subjects = [subjects[i] for i in idx]
        v = targets[idx]

        b_pred, enc_cache = encoder_forward(encoder, batch_signals, batch_subjects)
        l_r, d_pred = loss_regression(b_pred, v)

        grads: dict[str, np.ndarray]
        if use_denoiser:
            t = _stratified_timesteps(
                config.n_timesteps, config.batch_size, time_stream
            )
            eps = noise_stream.normal(v.shape)
            mask = sample_mask(n_tokens, config.mask_ratio, mask_stream)
            v_t = corrupt(v, eps, t, schedule)
            eps_hat, dn_cache = denoiser_forward(
                denoiser, v_t, b_pred, t, mask.flags
            )
            l_d, d_eps = loss_denoise(eps_hat, eps, mask.flags)
            dn_grads, d_b = denoiser_backward(denoiser, dn_cache, d_eps)
            enc_grads = encoder_backward(
                encoder, enc_cache, d_pred + config.beta * d_b
            )
            grads = {f"enc.{k}": g for k, g in enc_grads.items()}
            grads.update({f"dn.{k}": config.beta * g for k, g in dn_grads.items()})
        else:
            l_d = 0.0
            enc_grads = encoder_backward(encoder, enc_cache, d_pred)
            grads = {f"enc.{k}": g for k, g in enc_grads.items()}

        tot = total_loss(l_r, l_d, config.beta)
        if not np.isfinite(tot):
            raise DivergenceError(step)
        rate = one_cycle_lr(step, config.steps, config.lr_max)
        adamw_step(params, grads, state, adam, lr=rate)
        history.append(l_r, l_d, tot, rate)

    return TrainResult(encoder, denoiser, history, config)


# ----------------------------------------------------------- gradient check

@dataclass(frozen=True)
class GradCheckResult:
    max_rel_err: float
    worst_name: str
    n_coordinates: int

    @property
    def passed(self) -> bool:
        return self.max_rel_err < 1e-4


def finite_difference_check(
    compute: Callable[[], float],
    params: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    h: float = 1e-5,
) -> GradCheckResult:
    """Central-difference check of every coordinate of every array.

    compute() must re-evaluate the loss with the current (mutated)
    parameter values. Relative error uses max(|analytic|, |numeric|,
    1e-8) as the scale so exact zeros compare cleanly.
    """
    worst = 0.0
    worst_name = ""
    count = 0
    for name in sorted(params):
        arr = params[name]
        grad = analytic[name]
        flat = arr.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = compute()
            flat[j] = orig - h
            down = compute()
            flat[j] = orig
            numeric = (up - down) / (2.0 * h)
            rel = abs(numeric - gflat[j]) / max(abs(numeric), abs(gflat[j]), 1e-8)
            count += 1
            if rel > worst:
                worst = rel
                worst_name = f"{name}[{j}]"
    # plain float so downstream comparisons yield Python bools, not np.bool_
    return GradCheckResult(float(worst), worst_name, count)


def gradcheck_alignment(
    seed: int = 7,
    h: float = 1e-5,
    depth: int = 1,
    width: int = 32,
) -> GradCheckResult:
    """Full-objective gradient check on a small fixed problem.

    Builds a two-subject toy task (16 tokens, 8 channels), randomizes
    every parameter away from its init point, computes analytic
    gradients of regression + denoising at beta = 1, and compares each
    coordinate against central finite differences.
    """
    from .task import make_synthetic_task

    task = make_synthetic_task(
        seed, n_subjects=2, signal_length=10, tokens=16, dim=8,
        samples_per_subject=4, noise_std=0.05,
    )
    root = rng_new(seed)
    encoder = init_encoder(
        task.subject_dims, 12, task.tokens, task.dim, root.substream("encoder-init")
    )
    denoiser = init_denoiser(
        task.dim, width, depth, root.substream("denoiser-init"), time_embed_dim=16
    )
    jitter = root.substream("gradcheck-jitter")
    params = _merge_params(encoder, denoiser)
    for name in sorted(params):
        arr = params[name]
        arr += 0.3 * jitter.normal(arr.shape)

    batch = task.samples[:4]
    signals = [s.signal for s in batch]
    subjects = [s.subject for s in batch]
    v = np.stack([s.target for s in batch])
    schedule = NoiseSchedule.cosine(50)
    t = root.substream("gradcheck-time").integers(50, size=len(batch)) + 1
    eps = root.substream("gradcheck-noise").normal(v.shape)
    mask = sample_mask(task.tokens, 0.5, root.substream("gradcheck-mask"))
    v_t = corrupt(v, eps, t, schedule)
    beta = 1.0

    def compute() -> float:
        b_pred, _ = encoder_forward(encoder, signals, subjects)
        l_r, _ = loss_regression(b_pred, v)
        eps_hat, _ = denoiser_forward(denoiser, v_t, b_pred, t, mask.flags)
        l_d, _ = loss_denoise(eps_hat, eps, mask.flags)
        return total_loss(l_r, l_d, beta)

    b_pred, enc_cache = encoder_forward(encoder, signals, subjects)
    l_r, d_pred = loss_regression(b_pred, v)
    eps_hat, dn_cache = denoiser_forward(denoiser, v_t, b_pred, t, mask.flags)
    l_d, d_eps = loss_denoise(eps_hat, eps, mask.flags)
    dn_grads, d_b = denoiser_backward(denoiser, dn_cache, d_eps)
    enc_grads = encoder_backward(encoder, enc_cache, d_pred + beta * d_b)
    analytic = {f"enc.{k}": g for k, g in enc_grads.items()}
    analytic.update({f"dn.{k}": beta * g for k, g in dn_grads.items()})

    return finite_difference_check(compute, params, analytic, h=h)


# ------------------------------------------------- paired-seed comparison

@dataclass(frozen=True)
class StabilizerSeedResult:
    seed: int
    var_total_beta0: float
    var_total_beta1: float
    lr_ratio_beta0: float  # final L_R / initial L_R for the beta=0 run

    @property
    def beta1_wins(self) -> bool:
        return self.var_total_beta1 < self.var_total_beta0


@dataclass(frozen=True)
class StabilizerReport:
    per_seed: tuple[StabilizerSeedResult, ...]
    window_fraction: float

    @property
    def n_wins(self) -> int:
        return sum(r.beta1_wins for r in self.per_seed)

    @property
    def worst_lr_ratio(self) -> float:
        return max(r.lr_ratio_beta0 for r in self.per_seed)

    def to_dict(self) -> dict:
        return {
            "window_fraction": self.window_fraction,
            "n_wins": self.n_wins,
            "n_seeds": len(self.per_seed),
            "worst_lr_ratio_beta0": self.worst_lr_ratio,
            "per_seed": [
                {
                    "seed": r.seed,
                    "var_total_beta0": r.var_total_beta0,
                    "var_total_beta1": r.var_total_beta1,
                    "beta1_wins": r.beta1_wins,
                    "lr_ratio_beta0": r.lr_ratio_beta0,
                }
                for r in self.per_seed
            ],
        }


def stabilizer_experiment(
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    *,
    steps: int = 2000,
    window_fraction: float = 0.2,
    task_seed_base: int = 100,
    lr_max: float = 5e-3,
    batch_size: int = 32,
    width: int = 256,
    tokens: int = 16,
    dim: int = 16,
) -> StabilizerReport:
    """Paired beta=0 / beta=1 runs over several seeds.

    For each seed, both runs share the task, the data order, and the
    encoder init; only the denoising term differs. Reports the settled-
    window variance of the trained total loss for each arm plus how far
    the beta=0 run drove L_R below its starting value.
    """
    results = []
    for seed in seeds:
        task = make_synthetic_task(
            task_seed_base + seed,
            n_subjects=3,
            signal_length=96,
            tokens=tokens,
            dim=dim,
            samples_per_subject=256,
            noise_std=0.05,
        )
        variances = {}
        ratio0 = float("nan")
        for beta in (0.0, 1.0):
            config = TrainConfig(
                beta=beta,
                steps=steps,
                batch_size=batch_size,
                lr_max=lr_max,
                width=width,
                seed=seed,
            )
            history = train(task, config).history
            tail = history.tail_window(window_fraction)
            variances[beta] = float(np.var(tail["total"]))
            if beta == 0.0:
                ratio0 = history.l_regression[-1] / history.l_regression[0]
        results.append(
            StabilizerSeedResult(
                seed=seed,
                var_total_beta0=variances[0.0],
                var_total_beta1=variances[1.0],
                lr_ratio_beta0=ratio0,
            )
        )
    return StabilizerReport(tuple(results), window_fraction)
