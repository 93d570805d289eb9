"""Command-line surface tying loaders, metrics, and training together.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure. Reports go to stdout unless --output names a file. Seed
precedence: --seed flag, then VINDEX_SEED in the environment, then the
config file, then the built-in default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import FeatureGrid, rng_new
from .errors import (
    BrainAlignError,
    DataError,
    NumericalError,
    UsageError,
    ValidationError,
)
from .formats import (
    load_config,
    load_embedding_table,
    load_jsonl,
    load_lexicon,
    read_feature_tensor,
    write_feature_tensor,
)
from .matching import EmbeddingTable, SynonymLexicon, corpus_report
from .grounding import acc_at, category_report
from .report import EvalReport
from .spaces import aggregate_layers, interleave, nested_sequence, LayerStack
from .sqa import score, validate_qa_set
from .textparse import parse_caption
from .train import TrainConfig, gradcheck_alignment, train
from .task import make_synthetic_task

NF_LEVELS = (1, 9, 36, 144, 576)


class _Parser(argparse.ArgumentParser):
    """argparse normally exits 2 on bad flags; the contract wants 1."""

    def error(self, message):  # noqa: D102 - argparse override
        raise UsageError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None, help="override every other seed source")
    sub.add_argument("--threshold", type=float, default=0.5,
                     help="semantic cosine match threshold")
    sub.add_argument("--output", type=Path, default=None,
                     help="write the report here instead of stdout")
    sub.add_argument("--format", choices=("json", "csv"), default="json",
                     dest="form", help="report form")
    sub.add_argument("--runtime", action="store_true",
                     help="include wall-clock runtime in the report "
                          "(off by default so reruns are byte-identical)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="brainalign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"brainalign {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = subs.add_parser("parse",
                        help="captions (one per line) -> tuple records JSONL")
    p.add_argument("captions", type=Path)
    _add_common(p)

    p = subs.add_parser("eval-caption",
                        help="caption pairs + lexicon + embeddings -> match report")
    p.add_argument("--pairs", type=Path, required=True, help="caption-pair JSONL")
    p.add_argument("--lexicon", type=Path, default=None, help="synonym JSON")
    p.add_argument("--embeddings", type=Path, default=None, help="word-vector text table")
    p.add_argument("--macro", action="store_true", help="average per-pair scores "
                   "instead of pooling counts")
    _add_common(p)

    p = subs.add_parser("eval-grounding",
                        help="grounding items -> per-salience accuracy table")
    p.add_argument("--items", type=Path, required=True, help="grounding-item JSONL")
    p.add_argument("--inclusive", action="store_true",
                   help="count IoU == m as a hit (default strictly greater)")
    _add_common(p)

    p = subs.add_parser("eval-sqa",
                        help="question items + responses -> accuracies")
    p.add_argument("--items", type=Path, required=True, help="qa-item JSONL")
    p.add_argument("--responses", type=Path, required=True, help="qa-response JSONL")
    _add_common(p)

    p = subs.add_parser("transform",
                        help="feature tensor -> se/me/af/nf output tensor")
    p.add_argument("--input", type=Path, action="append", required=True,
                   help="binary feature tensor; repeat for me/af inputs")
    p.add_argument("--space", choices=("se", "me", "af", "nf"), required=True)
    p.add_argument("--nf-level", type=int, choices=NF_LEVELS, default=None,
                   help="token count of the nested level to emit")
    p.add_argument("--groups", type=int, default=2,
                   help="layer groups for --space af")
    _add_common(p)

    p = subs.add_parser("train-align",
                        help="train the alignment objective on the synthetic task")
    p.add_argument("--config", type=Path, default=None, help="JSON TrainConfig mapping")
    p.add_argument("--task-seed", type=int, default=100)
    p.add_argument("--task-tokens", type=int, default=16)
    p.add_argument("--task-dim", type=int, default=16)
    p.add_argument("--task-subjects", type=int, default=3)
    p.add_argument("--task-signal-length", type=int, default=96)
    p.add_argument("--task-samples", type=int, default=256,
                   help="samples per subject")
    _add_common(p)

    p = subs.add_parser("gradcheck",
                        help="finite-difference check of every analytic gradient")
    p.add_argument("--step", type=float, default=1e-5, dest="h",
                   help="central-difference step")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--width", type=int, default=32)
    _add_common(p)

    return parser


def _resolve_seed(flag: int | None, config_seed: int | None, default: int = 0) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("VINDEX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"VINDEX_SEED must be an integer, got {env!r}") from None
    if config_seed is not None:
        return config_seed
    return default


def _emit(report: EvalReport, args) -> None:
    text = report.render(args.form)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")


def _new_report(started: float, runtime: bool) -> EvalReport:
    rep = EvalReport(tool="brainalign", version=__version__)
    if runtime:
        rep.runtime_seconds = round(time.monotonic() - started, 3)
    return rep


def _tupleset_of(side):
    if isinstance(side, str):
        return parse_caption(side)
    return side


def _cmd_parse(args) -> int:
    lines = args.captions.read_text(encoding="utf-8").splitlines()
    records = [
        parse_caption(line).to_record() for line in lines if line.strip()
    ]
    text = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in records)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")
    return 0


def _cmd_eval_caption(args) -> int:
    started = time.monotonic()
    pairs = load_jsonl(args.pairs, "caption-pair")
    lexicon = load_lexicon(args.lexicon) if args.lexicon else SynonymLexicon()
    table = load_embedding_table(args.embeddings) if args.embeddings else EmbeddingTable({})
    resolved = [
        (_tupleset_of(p.candidate), _tupleset_of(p.reference))
        for p in pairs
    ]
    match = corpus_report(resolved, lexicon, table, args.threshold, macro=args.macro)
    report = _new_report(started, args.runtime)
    report.add_input("pairs", args.pairs)
    if args.lexicon:
        report.add_input("lexicon", args.lexicon)
    if args.embeddings:
        report.add_input("embeddings", args.embeddings)
    report.add_section("caption", {
        "n_pairs": len(pairs),
        "threshold": args.threshold,
        "mode": "macro" if args.macro else "micro",
        "scores": match.to_dict(),
    })
    _emit(report, args)
    return 0


def _cmd_eval_grounding(args) -> int:
    started = time.monotonic()
    items = load_jsonl(args.items, "grounding-item")
    rows = category_report(items, inclusive=args.inclusive)
    curve = {}
    if items:
        curve = {
            f"{m:.1f}": acc_at(items, m, inclusive=args.inclusive)
            for m in (0.1, 0.3, 0.5, 0.7, 0.9)
        }
    report = _new_report(started, args.runtime)
    report.add_input("items", args.items)
    report.add_section("grounding", {
        "n_items": len(items),
        "inclusive": args.inclusive,
        "rows": {name: row.to_dict() for name, row in rows.items()},
        "acc_curve": curve,
    })
    _emit(report, args)
    return 0


def _cmd_eval_sqa(args) -> int:
    started = time.monotonic()
    items = load_jsonl(args.items, "qa-item")
    responses = load_jsonl(args.responses, "qa-response")
    validate_qa_set(items)
    result = score(items, [r.text for r in responses])
    report = _new_report(started, args.runtime)
    report.add_input("items", args.items)
    report.add_input("responses", args.responses)
    report.add_section("sqa", result.to_dict())
    _emit(report, args)
    return 0


def _cmd_transform(args) -> int:
    started = time.monotonic()
    if args.output is None:
        raise UsageError("transform writes a binary tensor; --output is required")
    grids = [read_feature_tensor(path) for path in args.input]

    def need(n: int) -> None:
        if len(grids) != n:
            raise UsageError(
                f"--space {args.space} takes exactly {n} --input tensor(s), got {len(grids)}"
            )

    if args.space == "se":
        need(1)
        out = grids[0]
        detail = {"space": "se", "shape": list(out.shape)}
    elif args.space == "me":
        need(2)
        seq = interleave(grids[0], grids[1])
        out = FeatureGrid(seq[:, None, :])
        detail = {"space": "me", "tokens": int(seq.shape[0]), "dim": int(seq.shape[1])}
    elif args.space == "af":
        if len(grids) < 2:
            raise UsageError("--space af needs at least 2 --input tensors")
        out = aggregate_layers(LayerStack(tuple(grids)), args.groups)
        detail = {"space": "af", "groups": args.groups, "shape": list(out.shape)}
    else:
        need(1)
        if args.nf_level is None:
            raise UsageError("--space nf requires --nf-level")
        nested = nested_sequence(grids[0])
        out = nested.level_for_count(args.nf_level)
        detail = {
            "space": "nf",
            "level": args.nf_level,
            "counts": list(nested.token_counts),
            "shape": list(out.shape),
        }
    write_feature_tensor(args.output, out)
    summary = {"inputs": [str(p) for p in args.input], "output": str(args.output)}
    summary.update(detail)
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def _cmd_train_align(args) -> int:
    started = time.monotonic()
    mapping = dict(load_config(args.config)) if args.config else {}
    config_seed = mapping.pop("seed", None)
    if config_seed is not None and not isinstance(config_seed, int):
        raise ValidationError("config seed must be an integer")
    mapping["seed"] = _resolve_seed(args.seed, config_seed)
    config = TrainConfig.from_mapping(mapping)
    task = make_synthetic_task(
        args.task_seed,
        n_subjects=args.task_subjects,
        signal_length=args.task_signal_length,
        tokens=args.task_tokens,
        dim=args.task_dim,
        samples_per_subject=args.task_samples,
    )
    result = train(task, config)
    history = result.history
    summary: dict[str, object] = {
        "config": config.to_dict(),
        "task": {
            "seed": args.task_seed,
            "tokens": args.task_tokens,
            "dim": args.task_dim,
            "subjects": args.task_subjects,
            "signal_length": args.task_signal_length,
            "samples_per_subject": args.task_samples,
        },
        "steps_run": len(history),
        "history": history.to_dict(),
    }
    if len(history):
        tail = history.tail_window()
        summary["final"] = {
            "l_regression": history.l_regression[-1],
            "l_denoise": history.l_denoise[-1],
            "total": history.total[-1],
            "lr_ratio": history.l_regression[-1] / history.l_regression[0],
        }
        summary["tail"] = {
            "total_var": float(np.var(tail["total"])),
            "l_regression_mean": float(np.mean(tail["l_regression"])),
        }
    report = _new_report(started, args.runtime)
    if args.config:
        report.add_input("config", args.config)
    report.add_section("train", summary)
    _emit(report, args)
    return 0


def _cmd_gradcheck(args) -> int:
    started = time.monotonic()
    seed = _resolve_seed(args.seed, None, default=7)
    result = gradcheck_alignment(seed=seed, h=args.h, depth=args.depth, width=args.width)
    report = _new_report(started, args.runtime)
    report.add_section("gradcheck", {
        "max_rel_err": result.max_rel_err,
        "worst_coordinate": result.worst_name,
        "n_coordinates": result.n_coordinates,
        "step": args.h,
        "passed": result.passed,
    })
    _emit(report, args)
    if not result.passed:
        raise NumericalError(
            f"gradient check failed: max relative error {result.max_rel_err:.3e}"
        )
    return 0


_COMMANDS = {
    "parse": _cmd_parse,
    "eval-caption": _cmd_eval_caption,
    "eval-grounding": _cmd_eval_grounding,
    "eval-sqa": _cmd_eval_sqa,
    "transform": _cmd_transform,
    "train-align": _cmd_train_align,
    "gradcheck": _cmd_gradcheck,
}


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except BrainAlignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
