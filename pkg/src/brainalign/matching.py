"""Three-stage tuple matching and precision/recall/F1 scoring.

Candidate terms match reference terms in three stages: exact string
equality, synonym-table membership, then cosine similarity of word
embeddings above a threshold. Matching is one-to-one and greedy within
each stage, with ties broken lexicographically, so a given input always
produces the same assignment. Relations match when all three parts
match; the triple's stage is the weakest stage among its parts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateVector, EmptyCorpus, ShapeError
from .textparse import TupleSet, normalize_predicate, normalize_term

STAGE_EXACT = "exact"
STAGE_SYNONYM = "synonym"
STAGE_SEMANTIC = "semantic"
_STAGE_RANK = {STAGE_EXACT: 0, STAGE_SYNONYM: 1, STAGE_SEMANTIC: 2}

CATEGORIES = ("object", "attribute", "relation")


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors; zero-norm input raises."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"expected equal-length vectors, got {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVector("cosine similarity of a zero vector is undefined")
    return float(np.dot(u, v) / (nu * nv))


class SynonymLexicon:
    """Symmetric term -> synonyms table.

    The table is closed under symmetry at construction: if b is listed
    for a, then a is also a synonym of b. Terms are normalized.
    """

    def __init__(self, entries: Mapping[str, Iterable[str]] | None = None) -> None:
        table: dict[str, set[str]] = {}
        for key, values in (entries or {}).items():
            norm_key = normalize_term(key)
            if not norm_key:
                continue
            bucket = table.setdefault(norm_key, set())
            for val in values:
                norm_val = normalize_term(val)
                if not norm_val or norm_val == norm_key:
                    continue
                bucket.add(norm_val)
                table.setdefault(norm_val, set()).add(norm_key)
        self._table = {k: frozenset(v) for k, v in table.items()}

    def synonyms(self, term: str) -> frozenset[str]:
        return self._table.get(term, frozenset())

    def are_synonyms(self, a: str, b: str) -> bool:
        return b in self._table.get(a, frozenset())

    def multiword_terms(self) -> frozenset[str]:
        """Terms containing spaces; useful as extra known compounds."""
        return frozenset(t for t in self._table if " " in t)

    def __len__(self) -> int:
        return len(self._table)


class EmbeddingTable:
    """Term -> float64 vector lookup with a phrase fallback.

    A multiword term absent from the table falls back to the mean of
    its member-word vectors; words absent from the table are skipped,
    and a phrase with no known words has no embedding.
    """

    def __init__(self, vectors: Mapping[str, np.ndarray]) -> None:
        self.dim = 0
        self._vectors: dict[str, np.ndarray] = {}
        for term, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ShapeError(f"embedding for {term!r} is not a vector")
            if self.dim == 0:
                self.dim = arr.shape[0]
            elif arr.shape[0] != self.dim:
                raise ShapeError(
                    f"embedding for {term!r} has dim {arr.shape[0]}, expected {self.dim}"
                )
            self._vectors[term] = arr

    def __contains__(self, term: str) -> bool:
        return term in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(self._vectors)

    def lookup(self, term: str) -> np.ndarray | None:
        hit = self._vectors.get(term)
        if hit is not None:
            return hit
        words = term.split()
        if len(words) > 1:
            parts = [self._vectors[w] for w in words if w in self._vectors]
            if parts:
                return np.mean(parts, axis=0)
        return None


_EMPTY_TABLE = EmbeddingTable({})


@dataclass(frozen=True)
class MatchPair:
    candidate: str
    reference: str
    stage: str
    similarity: float


@dataclass(frozen=True)
class CategoryScore:
    """Counts, scores, and the match trace for one tuple category."""

    n_matched: int
    n_candidate: int
    n_reference: int
    precision: float
    recall: float
    f1: float
    pairs: tuple[MatchPair, ...] = ()
    missing_embeddings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n_matched": self.n_matched,
            "n_candidate": self.n_candidate,
            "n_reference": self.n_reference,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class MatchReport:
    """Per-category scores for one candidate/reference comparison."""

    object: CategoryScore
    attribute: CategoryScore
    relation: CategoryScore

    def category(self, name: str) -> CategoryScore:
        if name not in CATEGORIES:
            raise KeyError(name)
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {name: self.category(name).to_dict() for name in CATEGORIES}


def prf(n_matched: int, n_candidate: int, n_reference: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with the zero conventions.

    Precision is 0 when the candidate is empty, recall is 0 when the
    reference is empty, and F1 is 0 when precision + recall is 0.
    """
    if n_matched < 0 or n_matched > n_candidate or n_matched > n_reference:
        raise ValueError(
            f"impossible counts: matched={n_matched}, "
            f"candidate={n_candidate}, reference={n_reference}"
        )
    precision = n_matched / n_candidate if n_candidate else 0.0
    recall = n_matched / n_reference if n_reference else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0.0
        else 0.0
    )
    return precision, recall, f1


def _term_match(
    cand: str,
    ref: str,
    lexicon: SynonymLexicon,
    table: EmbeddingTable,
    threshold: float,
) -> tuple[str, float] | None:
    """Stage and similarity for one candidate/reference term pair."""
    if cand == ref:
        return STAGE_EXACT, 1.0
    if lexicon.are_synonyms(cand, ref):
        return STAGE_SYNONYM, 1.0
    cu = table.lookup(cand)
    rv = table.lookup(ref)
    if cu is not None and rv is not None:
        sim = cosine_similarity(cu, rv)
        if sim > threshold:
            return STAGE_SEMANTIC, sim
    return None


def match_terms(
    candidates: Sequence[str],
    references: Sequence[str],
    lexicon: SynonymLexicon | None = None,
    table: EmbeddingTable | None = None,
    threshold: float = 0.5,
) -> tuple[list[MatchPair], list[str]]:
    """One-to-one staged assignment between two term lists.

    All exact matches are made first, then synonym matches, then
    semantic matches in descending similarity order. Ties break on the
    sorted term pair. Returns the chosen pairs and the terms that could
    not enter the semantic stage for lack of an embedding.
    """
    lexicon = lexicon or SynonymLexicon()
    table = table or _EMPTY_TABLE
    cand = sorted(candidates)
    refs = sorted(references)
    used_c = [False] * len(cand)
    used_r = [False] * len(refs)
    pairs: list[MatchPair] = []

    for ci, c in enumerate(cand):
        for ri, r in enumerate(refs):
            if not used_r[ri] and c == r:
                used_c[ci] = True
                used_r[ri] = True
                pairs.append(MatchPair(c, r, STAGE_EXACT, 1.0))
                break

    for ci, c in enumerate(cand):
        if used_c[ci]:
            continue
        for ri, r in enumerate(refs):
            if not used_r[ri] and lexicon.are_synonyms(c, r):
                used_c[ci] = True
                used_r[ri] = True
                pairs.append(MatchPair(c, r, STAGE_SYNONYM, 1.0))
                break

    missing: list[str] = []
    scored: list[tuple[float, str, str, int, int]] = []
    seen_missing: set[str] = set()
    for ci, c in enumerate(cand):
        if used_c[ci]:
            continue
        cu = table.lookup(c)
        if cu is None:
            if c not in seen_missing:
                missing.append(c)
                seen_missing.add(c)
            continue
        for ri, r in enumerate(refs):
            if used_r[ri]:
                continue
            rv = table.lookup(r)
            if rv is None:
                if r not in seen_missing:
                    missing.append(r)
                    seen_missing.add(r)
                continue
            sim = cosine_similarity(cu, rv)
            if sim > threshold:
                scored.append((sim, c, r, ci, ri))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    for sim, c, r, ci, ri in scored:
        if not used_c[ci] and not used_r[ri]:
            used_c[ci] = True
            used_r[ri] = True
            pairs.append(MatchPair(c, r, STAGE_SEMANTIC, sim))
    return pairs, missing


def _category_score(
    pairs: list[MatchPair],
    missing: list[str],
    n_candidate: int,
    n_reference: int,
) -> CategoryScore:
    p, r, f1 = prf(len(pairs), n_candidate, n_reference)
    return CategoryScore(
        len(pairs), n_candidate, n_reference, p, r, f1,
        tuple(pairs), tuple(missing),
    )


def _match_relations(
    cand_rels: Sequence[tuple[str, str, str]],
    ref_rels: Sequence[tuple[str, str, str]],
    lexicon: SynonymLexicon,
    table: EmbeddingTable,
    threshold: float,
) -> list[MatchPair]:
    """One-to-one relation matching; every part must match, the triple
    takes its weakest part's stage, and stronger stages assign first."""
    cand = sorted(cand_rels)
    refs = sorted(ref_rels)
    scored: list[tuple[int, float, int, int]] = []
    for ci, c in enumerate(cand):
        for ri, r in enumerate(refs):
            parts = [
                _term_match(c[0], r[0], lexicon, table, threshold),
                _term_match(c[1], r[1], lexicon, table, threshold),
                _term_match(c[2], r[2], lexicon, table, threshold),
            ]
            if all(p is not None for p in parts):
                rank = max(_STAGE_RANK[p[0]] for p in parts)  # type: ignore[index]
                sim = min(p[1] for p in parts)  # type: ignore[index]
                scored.append((rank, sim, ci, ri))
    scored.sort(key=lambda t: (t[0], -t[1], cand[t[2]], refs[t[3]]))
    used_c = [False] * len(cand)
    used_r = [False] * len(refs)
    stage_names = {v: k for k, v in _STAGE_RANK.items()}
    pairs: list[MatchPair] = []
    for rank, sim, ci, ri in scored:
        if not used_c[ci] and not used_r[ri]:
            used_c[ci] = True
            used_r[ri] = True
            pairs.append(
                MatchPair(
                    " ".join(cand[ci]), " ".join(refs[ri]), stage_names[rank], sim
                )
            )
    return pairs


def match_tuplesets(
    candidate: TupleSet,
    reference: TupleSet,
    lexicon: SynonymLexicon | None = None,
    table: EmbeddingTable | None = None,
    threshold: float = 0.5,
) -> MatchReport:
    """Score one candidate TupleSet against one reference TupleSet.

    Objects match first; attributes are compared only between matched
    object pairs (unmatched objects still contribute their attribute
    counts to the denominators); relations match part-wise. When both
    sides are completely empty the comparison is vacuous and every
    score is 1.0.
    """
    lexicon = lexicon or SynonymLexicon()
    table = table or _EMPTY_TABLE

    if candidate.is_empty and reference.is_empty:
        perfect = CategoryScore(0, 0, 0, 1.0, 1.0, 1.0)
        return MatchReport(perfect, perfect, perfect)

    obj_pairs, obj_missing = match_terms(
        sorted(candidate.objects), sorted(reference.objects),
        lexicon, table, threshold,
    )
    obj_score = _category_score(
        obj_pairs, obj_missing, candidate.n_objects, reference.n_objects
    )

    attr_pairs: list[MatchPair] = []
    attr_missing: list[str] = []
    for pair in obj_pairs:
        c_attrs = sorted(candidate.attributes.get(pair.candidate, ()))
        r_attrs = sorted(reference.attributes.get(pair.reference, ()))
        if not c_attrs or not r_attrs:
            continue
        sub_pairs, sub_missing = match_terms(
            c_attrs, r_attrs, lexicon, table, threshold
        )
        attr_pairs.extend(
            MatchPair(
                f"{pair.candidate}: {p.candidate}",
                f"{pair.reference}: {p.reference}",
                p.stage, p.similarity,
            )
            for p in sub_pairs
        )
        attr_missing.extend(sub_missing)
    attr_score = _category_score(
        attr_pairs, attr_missing, candidate.n_attributes, reference.n_attributes
    )

    rel_pairs = _match_relations(
        sorted(candidate.relations), sorted(reference.relations),
        lexicon, table, threshold,
    )
    rel_score = _category_score(
        rel_pairs, [], candidate.n_relations, reference.n_relations
    )
    return MatchReport(obj_score, attr_score, rel_score)


def corpus_report(
    pairs: Sequence[tuple[TupleSet, TupleSet]],
    lexicon: SynonymLexicon | None = None,
    table: EmbeddingTable | None = None,
    threshold: float = 0.5,
    macro: bool = False,
) -> MatchReport:
    """Aggregate scores over (candidate, reference) TupleSet pairs.

    Micro mode (the default) pools matched/candidate/reference counts
    across the corpus before computing precision, recall, and F1. Macro
    mode averages the per-pair scores instead. Pairs are processed in
    order, so the aggregate is deterministic. An empty corpus raises.
    """
    if not pairs:
        raise EmptyCorpus("cannot aggregate over zero caption pairs")
    reports = [
        match_tuplesets(c, r, lexicon, table, threshold) for c, r in pairs
    ]
    categories: dict[str, CategoryScore] = {}
    for name in CATEGORIES:
        scores = [rep.category(name) for rep in reports]
        matched = sum(s.n_matched for s in scores)
        n_cand = sum(s.n_candidate for s in scores)
        n_ref = sum(s.n_reference for s in scores)
        if macro:
            p = float(np.mean([s.precision for s in scores]))
            r = float(np.mean([s.recall for s in scores]))
            f1 = float(np.mean([s.f1 for s in scores]))
        else:
            p, r, f1 = prf(matched, n_cand, n_ref)
        traces = tuple(p2 for s in scores for p2 in s.pairs)
        missing = tuple(dict.fromkeys(m for s in scores for m in s.missing_embeddings))
        categories[name] = CategoryScore(
            matched, n_cand, n_ref, p, r, f1, traces, missing
        )
    return MatchReport(
        categories["object"], categories["attribute"], categories["relation"]
    )
