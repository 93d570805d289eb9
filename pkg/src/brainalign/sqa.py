"""Three-option multiple-choice scoring with hallucination probes.

Items pair a question with exactly three options and one correct
index. Probe items ask about things absent from the scene; a balanced
set has as many probes as present-item questions. Free-text responses
are mapped to an option letter or matched by containment; anything
unparseable scores as incorrect, never as an error.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyCorpus, ShapeError, ValidationError

N_OPTIONS = 3
_LETTERS = "ABC"

_LEADING_LETTER = re.compile(r"^\s*\(?([A-Ca-c])[\s).:,]")
_LEADING_LETTER_ONLY = re.compile(r"^\s*\(?([A-Ca-c])\)?\s*$")
_ISOLATED_UPPER = re.compile(r"\b([A-C])\b")


@dataclass(frozen=True)
class QAItem:
    """One question with three options and one correct answer."""

    question: str
    options: tuple[str, str, str]
    correct_index: int
    is_hallucination_probe: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.question, str) or not self.question.strip():
            raise ValidationError("question must be a nonempty string")
        if len(self.options) != N_OPTIONS:
            raise ValidationError(
                f"expected {N_OPTIONS} options, got {len(self.options)}"
            )
        norm = []
        for opt in self.options:
            if not isinstance(opt, str) or not opt.strip():
                raise ValidationError("options must be nonempty strings")
            norm.append(_normalize_text(opt))
        if len(set(norm)) != N_OPTIONS:
            raise ValidationError("options must be distinct; duplicate found")
        if (
            isinstance(self.correct_index, bool)
            or not isinstance(self.correct_index, int)
            or not 0 <= self.correct_index < N_OPTIONS
        ):
            raise ValidationError(
                f"correct_index {self.correct_index!r} outside 0..{N_OPTIONS - 1}"
            )


def validate_qa_set(items: Sequence[QAItem]) -> tuple[int, int]:
    """Check probe/present balance; returns (n_probes, n_present).

    Imbalance is legal but suspicious, so it warns rather than raises.
    """
    n_probe = sum(1 for it in items if it.is_hallucination_probe)
    n_present = len(items) - n_probe
    if n_probe != n_present:
        warnings.warn(
            f"unbalanced question set: {n_probe} probes vs {n_present} present items",
            stacklevel=2,
        )
    return n_probe, n_present


def _normalize_text(text: str) -> str:
    return " ".join(re.sub(r"[^a-z0-9]+", " ", text.lower()).split())


def parse_choice(response: str, options: Sequence[str]) -> int | None:
    """Map a free-text response to an option index, or None.

    Tried in order: a leading option letter (any case), a single
    isolated uppercase letter anywhere (lowercase elsewhere is skipped
    because of the article "a"), then normalized containment of an
    option's text, longest option first. Ambiguity at any stage falls
    through; if nothing identifies an option the result is None.
    """
    if not isinstance(response, str):
        return None
    m = _LEADING_LETTER.match(response) or _LEADING_LETTER_ONLY.match(response)
    if m:
        return _LETTERS.index(m.group(1).upper())
    letters = set(_ISOLATED_UPPER.findall(response))
    if len(letters) == 1:
        return _LETTERS.index(letters.pop())
    norm_resp = _normalize_text(response)
    if norm_resp:
        hits = []
        for idx, opt in enumerate(options):
            norm_opt = _normalize_text(opt)
            if norm_opt and norm_opt in norm_resp:
                hits.append((len(norm_opt), idx))
        if hits:
            hits.sort(key=lambda t: (-t[0], t[1]))
            if len(hits) == 1 or hits[0][0] > hits[1][0]:
                return hits[0][1]
    return None


@dataclass(frozen=True)
class SqaScore:
    """Accuracy summary, split by probe vs present items."""

    n_items: int
    n_correct: int
    n_unparsed: int
    accuracy: float
    n_probe: int
    probe_accuracy: float | None
    n_present: int
    present_accuracy: float | None

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_correct": self.n_correct,
            "n_unparsed": self.n_unparsed,
            "accuracy": self.accuracy,
            "n_probe": self.n_probe,
            "probe_accuracy": self.probe_accuracy,
            "n_present": self.n_present,
            "present_accuracy": self.present_accuracy,
        }


def score(items: Sequence[QAItem], responses: Sequence[str]) -> SqaScore:
    """Score responses against items, one response per item, in order.

    Unparseable responses count as incorrect. Accuracies are
    percentages; the probe or present split is None when that split
    has no items.
    """
    if len(items) != len(responses):
        raise ShapeError(
            f"{len(items)} items but {len(responses)} responses"
        )
    if not items:
        raise EmptyCorpus("scoring zero questions")
    n_correct = 0
    n_unparsed = 0
    probe_total = probe_correct = 0
    present_total = present_correct = 0
    for item, response in zip(items, responses):
        idx = parse_choice(response, item.options)
        if idx is None:
            n_unparsed += 1
        correct = idx == item.correct_index
        n_correct += correct
        if item.is_hallucination_probe:
            probe_total += 1
            probe_correct += correct
        else:
            present_total += 1
            present_correct += correct
    return SqaScore(
        n_items=len(items),
        n_correct=n_correct,
        n_unparsed=n_unparsed,
        accuracy=100.0 * n_correct / len(items),
        n_probe=probe_total,
        probe_accuracy=(
            100.0 * probe_correct / probe_total if probe_total else None
        ),
        n_present=present_total,
        present_accuracy=(
            100.0 * present_correct / present_total if present_total else None
        ),
    )
