"""File formats: feature tensors, embedding tables, lexicons, JSONL records.

Every loader rejects malformed input outright — no repair, no partial
results. Decode errors carry the offending line number when one exists.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import BBox, FeatureGrid
from .errors import FormatError, ValidationError
from .grounding import CATEGORIES, GroundingItem
from .matching import EmbeddingTable, SynonymLexicon
from .sqa import QAItem
from .textparse import TupleSet, ingest_tuples

# Binary feature-tensor layout: 4 magic bytes, three little-endian u32
# dims (H, W, D), then H*W*D little-endian float64 values, row-major.
TENSOR_MAGIC = b"BAF1"

JSONL_SCHEMAS = (
    "caption-pair",
    "tuple-record",
    "grounding-item",
    "qa-item",
    "qa-response",
    "feature-tensor",
)


def write_feature_tensor(path: str | Path, grid: FeatureGrid) -> None:
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<III", grid.height, grid.width, grid.dim))
        fh.write(np.ascontiguousarray(grid.data, dtype="<f8").tobytes())


def read_feature_tensor(path: str | Path) -> FeatureGrid:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != TENSOR_MAGIC:
        raise FormatError(f"{path}: not a feature-tensor file (bad magic)")
    h, w, d = struct.unpack("<III", raw[4:16])
    expected = 16 + 8 * h * w * d
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload is {len(raw)} bytes, header implies {expected}"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=16).reshape(h, w, d)
    return FeatureGrid(values.astype(np.float64))


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Read a plain-text word-vector table: `term v1 v2 … vd`, one per line.

    The dimension is inferred from the first line and enforced thereafter.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) < 2:
                raise FormatError("expected `term v1 v2 …`", line=lineno)
            term, comps = parts[0], parts[1:]
            try:
                vec = np.array([float(c) for c in comps])
            except ValueError:
                raise FormatError(
                    f"non-numeric vector component for {term!r}", line=lineno
                ) from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FormatError(
                    f"dimension {len(vec)} does not match established {dim}",
                    line=lineno,
                )
            vectors[term] = vec
    if dim is None:
        raise FormatError(f"{path}: empty embedding table")
    return EmbeddingTable(vectors)


def save_embedding_table(path: str | Path, table: EmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for term in sorted(table.terms):
            comps = " ".join(repr(float(c)) for c in table.lookup(term))
            fh.write(f"{term} {comps}\n")


def _detect_duplicates(pairs: list[tuple[str, object]]) -> dict:
    seen: dict[str, object] = {}
    for key, value in pairs:
        if key in seen:
            warnings.warn(f"duplicate lexicon key {key!r}: last entry wins", stacklevel=4)
        seen[key] = value
    return seen


def load_lexicon(path: str | Path) -> SynonymLexicon:
    """Read a JSON object mapping term → list of synonyms.

    The symmetric closure is applied; duplicate keys are last-wins with a
    warning.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh, object_pairs_hook=_detect_duplicates)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be a JSON object")
    for key, value in data.items():
        if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
            raise FormatError(
                f"{path}: entry {key!r} must map to an array of strings"
            )
    return SynonymLexicon(data)


# ---------------------------------------------------------------------------
# JSONL record schemas. These are original, versioned layouts — a converter
# can bridge any external release to them.

@dataclass(frozen=True)
class CaptionPair:
    """One evaluation pair: candidate and reference tuple sets.

    Either side may arrive as a raw caption string (parsed downstream) or
    as an explicit tuple record.
    """

    pair_id: str
    candidate: str | TupleSet
    reference: str | TupleSet


@dataclass(frozen=True)
class QAResponse:
    response_id: str
    text: str


def _require(record: Mapping, key: str, lineno: int) -> object:
    if key not in record:
        raise FormatError(f"missing key {key!r}", line=lineno)
    return record[key]


def _side(record: Mapping, key: str, lineno: int) -> str | TupleSet:
    value = _require(record, key, lineno)
    if isinstance(value, str):
        return value
    if isinstance(value, Mapping):
        try:
            return ingest_tuples(value)
        except ValidationError as exc:
            raise FormatError(f"{key}: {exc}", line=lineno) from None
    raise FormatError(f"{key} must be a caption string or tuple record", line=lineno)


def _parse_caption_pair(record: Mapping, lineno: int) -> CaptionPair:
    pair_id = _require(record, "id", lineno)
    if not isinstance(pair_id, str):
        raise FormatError("id must be a string", line=lineno)
    return CaptionPair(
        pair_id=pair_id,
        candidate=_side(record, "candidate", lineno),
        reference=_side(record, "reference", lineno),
    )


def _parse_tuple_record(record: Mapping, lineno: int) -> TupleSet:
    try:
        return ingest_tuples(record)
    except ValidationError as exc:
        raise FormatError(str(exc), line=lineno) from None


def _box(value: object, key: str, lineno: int) -> BBox:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 4
        or not all(isinstance(c, (int, float)) for c in value)
    ):
        raise FormatError(f"{key} must be [x0, y0, x1, y1]", line=lineno)
    try:
        return BBox(*[float(c) for c in value])
    except ValidationError as exc:
        raise FormatError(f"{key}: {exc}", line=lineno) from None


def _parse_grounding_item(record: Mapping, lineno: int) -> GroundingItem:
    expression = _require(record, "expression", lineno)
    category = _require(record, "category", lineno)
    if not isinstance(expression, str):
        raise FormatError("expression must be a string", line=lineno)
    if category not in CATEGORIES:
        raise FormatError(
            f"category {category!r} not one of {sorted(CATEGORIES)}", line=lineno
        )
    return GroundingItem(
        expression=expression,
        predicted=_box(_require(record, "predicted", lineno), "predicted", lineno),
        reference=_box(_require(record, "reference", lineno), "reference", lineno),
        category=category,
    )


def _parse_qa_item(record: Mapping, lineno: int) -> QAItem:
    question = _require(record, "question", lineno)
    options = _require(record, "options", lineno)
    answer = _require(record, "answer", lineno)
    probe = record.get("hallucination_probe", False)
    if not isinstance(options, list) or len(options) != 3:
        raise FormatError("options must be an array of 3 strings", line=lineno)
    if not isinstance(answer, int) or isinstance(answer, bool):
        raise FormatError("answer must be an option index", line=lineno)
    if not isinstance(probe, bool):
        raise FormatError("hallucination_probe must be a boolean", line=lineno)
    try:
        return QAItem(
            question=question,
            options=tuple(options),
            correct_index=answer,
            is_hallucination_probe=probe,
        )
    except ValidationError as exc:
        raise FormatError(str(exc), line=lineno) from None


def _parse_qa_response(record: Mapping, lineno: int) -> QAResponse:
    rid = _require(record, "id", lineno)
    text = _require(record, "response", lineno)
    if not isinstance(rid, str) or not isinstance(text, str):
        raise FormatError("id and response must be strings", line=lineno)
    return QAResponse(response_id=rid, text=text)


def _parse_feature_tensor(record: Mapping, lineno: int) -> FeatureGrid:
    shape = _require(record, "shape", lineno)
    data = _require(record, "data", lineno)
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(isinstance(s, int) and s > 0 for s in shape)
    ):
        raise FormatError("shape must be [H, W, D] positive integers", line=lineno)
    h, w, d = shape
    if not isinstance(data, list) or len(data) != h * w * d:
        raise FormatError(
            f"data must hold exactly {h * w * d} numbers", line=lineno
        )
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
        raise FormatError("data entries must be numbers", line=lineno)
    return FeatureGrid(np.array(data, dtype=np.float64).reshape(h, w, d))


_SCHEMA_PARSERS = {
    "caption-pair": _parse_caption_pair,
    "tuple-record": _parse_tuple_record,
    "grounding-item": _parse_grounding_item,
    "qa-item": _parse_qa_item,
    "qa-response": _parse_qa_response,
    "feature-tensor": _parse_feature_tensor,
}


def load_jsonl(path: str | Path, schema: str) -> list:
    """Read one schema-validated JSON object per line.

    Any parse or validation failure aborts the whole load with the line
    number — never a partial silent success. An empty file is a valid
    empty list.
    """
    if schema not in _SCHEMA_PARSERS:
        raise ValueError(f"unknown schema {schema!r}; expected one of {JSONL_SCHEMAS}")
    parse = _SCHEMA_PARSERS[schema]
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(obj, dict):
                raise FormatError("each line must be a JSON object", line=lineno)
            records.append(parse(obj, lineno))
    return records


def load_config(path: str | Path) -> dict:
    """Read a JSON config object (flat key → value mapping)."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return data
