"""Acceptance suite: one test per shipped guarantee, each printing a
single PASS/FAIL line with its measured numbers and pinned tolerance.

Run `pytest tests/test_acceptance.py -v -s` to see every line; plain
runs still show the lines for any failing guarantee. The stabilizer
test trains ten small networks and dominates the wall-clock time.
"""

import json
import time

import numpy as np
import pytest

from brainalign.cli import run_cli
from brainalign.core import BBox, FeatureGrid, rng_new
from brainalign.formats import load_jsonl, load_lexicon
from brainalign.grounding import GroundingItem, acc_at, iou
from brainalign.losses import loss_denoise
from brainalign.matching import match_tuplesets
from brainalign.schedule import NoiseSchedule, corrupt
from brainalign.spaces import LayerStack, aggregate_layers, nested_sequence
from brainalign.sqa import QAItem, score
from brainalign.textparse import parse_caption
from brainalign.train import gradcheck_alignment, stabilizer_experiment
from brainalign.task import make_synthetic_task  # noqa: F401 - keeps import surface honest

from conftest import DATA_DIR

SCORE_TOL = 1e-4
MEAN_TOL = 1e-12
ALPHA_ENDPOINT_TOL = 1e-9
GRAD_TOL = 1e-4
SQA_BAND = 1.5  # percentage points around the chance rate


def verdict(name: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line)
    return line


def test_worked_example_match_scores():
    started = time.monotonic()
    pairs = load_jsonl(DATA_DIR / "worked_example.jsonl", "caption-pair")
    lexicon = load_lexicon(DATA_DIR / "lexicon.json")
    report = match_tuplesets(pairs[0].candidate, pairs[0].reference, lexicon)
    elapsed = time.monotonic() - started
    obj = report.object
    ok = (
        abs(obj.precision - 1.0) <= SCORE_TOL
        and abs(obj.recall - 5.0 / 7.0) <= SCORE_TOL
        and abs(obj.f1 - 0.8333) <= SCORE_TOL
        and elapsed < 1.0
    )
    line = verdict(
        "worked-example-scores", ok,
        f"P={obj.precision:.4f} R={obj.recall:.4f} F1={obj.f1:.4f} "
        f"(tol {SCORE_TOL}), {elapsed:.3f}s < 1s",
    )
    assert ok, line


def test_parser_recovers_object_set():
    caption = (DATA_DIR / "captions.txt").read_text(encoding="utf-8").strip()
    objects = set(parse_caption(caption).objects)
    expected = {"building", "city street", "truck", "tree", "car"}
    ok = objects == expected
    line = verdict("parser-object-set", ok, f"objects={sorted(objects)}")
    assert ok, line


def test_box_overlap_metric_suite():
    # pixel-counting oracle on the unit-cell rasterization of corner boxes
    def pixel_iou(a: BBox, b: BBox) -> float:
        lo_x = int(min(a.x_min, b.x_min))
        lo_y = int(min(a.y_min, b.y_min))
        hi_x = int(max(a.x_max, b.x_max))
        hi_y = int(max(a.y_max, b.y_max))
        cover_a = cover_b = both = 0
        for x in range(lo_x, hi_x):
            for y in range(lo_y, hi_y):
                in_a = a.x_min <= x < a.x_max and a.y_min <= y < a.y_max
                in_b = b.x_min <= x < b.x_max and b.y_min <= y < b.y_max
                cover_a += in_a
                cover_b += in_b
                both += in_a and in_b
        union = cover_a + cover_b - both
        return both / union if union else 0.0

    golden_a, golden_b = BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)
    golden = iou(golden_a, golden_b)
    golden_ok = (
        abs(golden - 1.0 / 7.0) <= 1e-12
        and abs(golden - pixel_iou(golden_a, golden_b)) <= 1e-12
    )

    stream = rng_new(5).substream("boxes")
    sym_ok = range_ok = True
    for _ in range(1000):
        c = stream.integers(12, size=8)
        a = BBox(c[0], c[1], c[0] + c[2] + 1, c[1] + c[3] + 1)
        b = BBox(c[4], c[5], c[4] + c[6] + 1, c[5] + c[7] + 1)
        v, w = iou(a, b), iou(b, a)
        sym_ok &= v == w
        range_ok &= 0.0 <= v <= 1.0

    items = []
    cat_stream = rng_new(6).substream("cats")
    names = ("salient_creature", "salient_object", "inconspicuous")
    for k in range(1000):
        c = cat_stream.integers(12, size=8)
        items.append(GroundingItem(
            expression=f"box {k}",
            predicted=BBox(c[0], c[1], c[0] + c[2] + 1, c[1] + c[3] + 1),
            reference=BBox(c[4], c[5], c[4] + c[6] + 1, c[5] + c[7] + 1),
            category=names[int(cat_stream.integers(3))],
        ))
    curve = [acc_at(items, m) for m in (0.1, 0.3, 0.5, 0.7, 0.9)]
    monotone_ok = all(hi >= lo for hi, lo in zip(curve, curve[1:]))

    ok = golden_ok and sym_ok and range_ok and monotone_ok
    line = verdict(
        "box-overlap-suite", ok,
        f"golden={golden:.6f} (1/7 vs pixel oracle), symmetric={sym_ok}, "
        f"in-range={range_ok}, acc curve {['%.1f' % c for c in curve]} nonincreasing={monotone_ok}",
    )
    assert ok, line


def test_nested_pyramid_counts_and_mean():
    grid = FeatureGrid(rng_new(9).substream("nf").normal((24, 24, 7)))
    nested = nested_sequence(grid)
    counts = nested.token_counts
    grand = grid.data.mean()
    drift = max(abs(level.data.mean() - grand) for level in nested.levels)
    ok = counts == (576, 144, 36, 9, 1) and drift <= MEAN_TOL
    line = verdict(
        "nested-pyramid", ok,
        f"counts={counts}, grand-mean drift={drift:.2e} <= {MEAN_TOL}",
    )
    assert ok, line


def test_layer_aggregation_shape():
    # 4 non-final layers split into 2 groups; plus the final layer -> 3 x 1152
    stream = rng_new(10).substream("af")
    layers = tuple(
        FeatureGrid(stream.normal((27, 27, 1152))) for _ in range(5)
    )
    out = aggregate_layers(LayerStack(layers), 2)
    ok = out.tokens == 729 and out.dim == 3456
    line = verdict(
        "layer-aggregation", ok,
        f"tokens={out.tokens}, dim={out.dim} (want 729 x 3456)",
    )
    assert ok, line


def test_noise_schedule_and_masked_loss():
    sched = NoiseSchedule.cosine(1000)
    endpoint = abs(sched.alpha_bar[0] - 1.0)
    monotone = bool(np.all(np.diff(sched.alpha_bar) < 0))

    # second moment of the corrupted signal: ab*c^2 + (1 - ab)
    t, c, n = 400, 0.7, 10_000
    ab = sched.alpha_bar[t]
    eps = rng_new(12).substream("mc").normal((n, 1))
    x = corrupt(np.full((n, 1), c), eps, t, sched)
    sample = float(np.mean(x**2))
    expected = ab * c * c + (1.0 - ab)
    # x is Gaussian: Var[x^2] = 2 sigma^4 + 4 sigma^2 mu^2
    sigma2 = 1.0 - ab
    mu = np.sqrt(ab) * c
    sd_of_mean = np.sqrt((2 * sigma2**2 + 4 * sigma2 * mu * mu) / n)
    mc_dev = abs(sample - expected)
    mc_ok = mc_dev <= 3 * sd_of_mean

    # perturbing unmasked rows must leave the masked loss untouched
    stream = rng_new(13).substream("maskloss")
    mask = np.zeros(6, dtype=bool)
    mask[(0, 2, 5),] = True
    eps_hat = stream.normal((3, 6, 4))
    target = stream.normal((3, 6, 4))
    base, _ = loss_denoise(eps_hat, target, mask)
    jitter = eps_hat.copy()
    jitter[:, ~mask, :] += stream.normal((3, 3, 4)) * 100.0
    perturbed, _ = loss_denoise(jitter, target, mask)
    leak = abs(perturbed - base)

    ok = endpoint <= ALPHA_ENDPOINT_TOL and monotone and mc_ok and leak == 0.0
    line = verdict(
        "noise-schedule-and-masked-loss", ok,
        f"|ab_0 - 1|={endpoint:.1e} <= {ALPHA_ENDPOINT_TOL}, strictly-decreasing={monotone}, "
        f"MC dev={mc_dev:.2e} <= 3sd={3 * sd_of_mean:.2e} (n={n}), unmasked leak={leak}",
    )
    assert ok, line


def test_gradient_oracle():
    started = time.monotonic()
    result = gradcheck_alignment(seed=7, h=1e-5, depth=1, width=32)
    elapsed = time.monotonic() - started
    ok = result.max_rel_err < GRAD_TOL and elapsed < 30.0
    line = verdict(
        "gradient-oracle", ok,
        f"max rel err={result.max_rel_err:.3e} < {GRAD_TOL} over "
        f"{result.n_coordinates} coordinates (worst {result.worst_name}), "
        f"{elapsed:.1f}s < 30s",
    )
    assert ok, line


def test_denoising_term_stabilizes_training():
    """Paired-seed property: beta=1 should settle with lower total-loss
    variance than beta=0 while beta=0 still converges.

    The variance half does not hold on this synthetic task at desk
    scale: wherever beta=0 meets the convergence bar its settled window
    is already at the minibatch evaluation-noise floor, while the
    beta=1 total carries the denoising term's own Monte-Carlo noise on
    top. The assertion stays strict and the measured numbers are
    printed; the failure is a real property of this scale, not a bug.
    """
    started = time.monotonic()
    report = stabilizer_experiment()
    elapsed = time.monotonic() - started

    for r in report.per_seed:
        print(
            f"  seed {r.seed}: var(total) beta0={r.var_total_beta0:.3e} "
            f"beta1={r.var_total_beta1:.3e} win={r.beta1_wins} "
            f"conv ratio beta0={r.lr_ratio_beta0:.4f}"
        )
    conv_ok = report.worst_lr_ratio <= 0.10
    time_ok = elapsed < 300.0
    var_ok = report.n_wins >= 4
    ok = conv_ok and time_ok and var_ok
    line = verdict(
        "denoising-stabilizer", ok,
        f"variance wins {report.n_wins}/5 (need >=4), worst beta0 "
        f"convergence ratio {report.worst_lr_ratio:.4f} <= 0.10, {elapsed:.0f}s < 300s",
    )
    assert conv_ok and time_ok, line
    assert var_ok, line


def test_choice_scoring_statistics():
    n = 10_000
    options = ("alpha", "bravo", "charlie")
    items = [
        QAItem(
            question=f"q{i}",
            options=tuple(f"{o} {i}" for o in options),
            correct_index=i % 3,
        )
        for i in range(n)
    ]
    letters = "ABC"
    picks = rng_new(14).substream("sqa").integers(3, size=n)
    random_acc = score(items, [letters[int(p)] for p in picks]).accuracy
    perfect_acc = score(items, [letters[it.correct_index] for it in items]).accuracy
    ok = abs(random_acc - 100.0 / 3.0) <= SQA_BAND and perfect_acc == 100.0
    line = verdict(
        "choice-scoring-statistics", ok,
        f"random={random_acc:.2f}% within {SQA_BAND} of 33.33%, perfect={perfect_acc:.1f}%",
    )
    assert ok, line


def test_cli_reports_are_byte_identical(tmp_path, capsys):
    pair_argv = [
        "eval-caption",
        "--pairs", str(DATA_DIR / "worked_example.jsonl"),
        "--lexicon", str(DATA_DIR / "lexicon.json"),
        "--seed", "0",
    ]
    config = {"steps": 40, "batch_size": 4, "width": 32, "hidden": 16,
              "time_embed_dim": 16, "n_timesteps": 100}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config), encoding="utf-8")
    train_argv = [
        "train-align", "--config", str(cfg), "--seed", "0",
        "--task-tokens", "4", "--task-dim", "4", "--task-signal-length", "16",
        "--task-samples", "8", "--task-subjects", "2",
    ]
    outputs = []
    for name, argv in (("caption", pair_argv), ("train", train_argv)):
        a, b = tmp_path / f"{name}_a.json", tmp_path / f"{name}_b.json"
        assert run_cli(argv + ["--output", str(a)]) == 0
        assert run_cli(argv + ["--output", str(b)]) == 0
        outputs.append((name, a.read_bytes(), b.read_bytes()))
    capsys.readouterr()
    ok = all(x == y for _, x, y in outputs)
    sizes = {name: len(x) for name, x, _ in outputs}
    line = verdict(
        "cli-byte-determinism", ok,
        f"identical reruns for {sorted(sizes)} (sizes {sizes})",
    )
    assert ok, line
