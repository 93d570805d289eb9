"""Rule-based caption parsing into object/attribute/relation tuples.

The extractor is deliberately deterministic: a fixed vocabulary drives
token classification, three surface patterns produce tuples (adjective
premodifiers, noun coordination, subject-verb-object clauses with an
optional preposition folded into the predicate), and every term passes
through one normalizer. No statistical tagger is involved, so the same
text always yields the same tuples.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Collection, Iterable, Mapping, Sequence

from .errors import ValidationError

# --------------------------------------------------------------- vocabulary

_ARTICLES = ("a", "an", "the")

DETERMINERS = frozenset(_ARTICLES) | {
    "this", "that", "these", "those", "some", "any", "each", "every",
    "several", "many", "few", "both", "all", "no", "another", "other",
    "its", "his", "her", "their", "our", "my", "your",
    "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten",
}

# Dropped wherever they occur; they carry no tuple content.
ADVERBS = frozenset({
    "very", "quite", "really", "extremely", "fairly", "rather", "too",
    "so", "just", "also", "partially", "partly", "mostly", "mainly",
    "slightly", "neatly", "quietly", "gently", "peacefully", "together",
    "nearby", "here", "away", "while", "as", "where", "when",
})

PRONOUNS = frozenset({
    "there", "it", "he", "she", "they", "we", "you", "i", "him", "them",
    "us", "me", "someone", "something", "anyone", "everyone",
    "everything", "nothing", "who", "which", "what", "others",
})

AUXILIARIES = frozenset({
    "is", "are", "was", "were", "be", "been", "being", "am",
    "has", "have", "had", "do", "does", "did",
    "can", "could", "will", "would", "may", "might", "shall", "should",
    "must", "appears", "appear", "seems", "seem",
})

CONJUNCTIONS = frozenset({"and", "or"})

PREPOSITIONS = frozenset({
    "in", "on", "at", "by", "with", "under", "over", "above", "below",
    "near", "beside", "behind", "between", "among", "along", "across",
    "through", "down", "up", "into", "onto", "toward", "towards",
    "against", "around", "atop", "upon", "inside", "outside", "within",
    "beneath", "alongside", "amid", "past", "beyond", "off", "to",
    "from", "of",
})

# Checked longest-first before single-word prepositions.
MULTIWORD_PREPOSITIONS = (
    ("in", "front", "of"),
    ("on", "top", "of"),
    ("out", "of"),
    ("next", "to"),
    ("close", "to"),
)

# Noun phrases headed by these name picture regions rather than things
# in the picture. They yield no object, and relations whose endpoint
# would be such a phrase are dropped.
SCENE_REGIONS = frozenset({
    "background", "foreground", "scene", "image", "picture", "photo",
    "photograph", "view", "distance", "middle", "center", "side",
    "corner", "front", "back", "left", "right", "top", "bottom", "edge",
    "air",
})

VERB_BASES = frozenset({
    "drive", "ride", "walk", "run", "sit", "stand", "hold", "wear",
    "play", "eat", "drink", "fly", "jump", "lie", "hang", "park",
    "line", "surround", "stretch", "roll", "watch", "look", "face",
    "carry", "pull", "push", "lean", "rest", "graze", "swim", "climb",
    "chase", "race", "point", "cover", "fill", "contain", "feature",
    "perch", "stroll", "gather", "wait", "talk", "smile", "read",
    "serve", "cook", "jog", "sunbathe", "overlook", "throw", "catch",
    "kick", "swing", "slide", "skate", "ski", "surf", "sail", "float",
    "stare", "gaze", "reach", "pass", "cross", "enter", "leave",
})

_IRREGULAR_VERB_FORMS: Mapping[str, tuple[str, ...]] = {
    "stand": ("stood",),
    "sit": ("sat",),
    "run": ("ran",),
    "ride": ("rode", "ridden"),
    "drive": ("drove", "driven"),
    "eat": ("ate", "eaten"),
    "fly": ("flew", "flown"),
    "lie": ("lay", "lain", "lying"),
    "hold": ("held",),
    "wear": ("wore", "worn"),
    "hang": ("hung",),
    "swim": ("swam", "swum"),
    "catch": ("caught",),
    "throw": ("threw", "thrown"),
    "leave": ("left",),
}

_IRREGULAR_SINGULARS: Mapping[str, str] = {
    "people": "person", "men": "man", "women": "woman",
    "children": "child", "feet": "foot", "teeth": "tooth",
    "geese": "goose", "mice": "mouse", "oxen": "ox",
    "leaves": "leaf", "knives": "knife", "wolves": "wolf",
    "shelves": "shelf", "loaves": "loaf", "lives": "life",
    "wives": "wife", "calves": "calf",
}

# Copula and its inflections; predicates built from them canonicalize
# to the bare form so both sides of a comparison agree.
_COPULA_FORMS = frozenset({"be", "is", "are", "was", "were", "am", "been", "being"})

DEFAULT_COMPOUNDS = frozenset({
    "city street", "city bus", "city skyline", "clock tower",
    "traffic light", "traffic sign", "stop sign", "street light",
    "street sign", "fire truck", "fire hydrant", "baseball bat",
    "baseball player", "baseball field", "baseball glove",
    "tennis court", "tennis racket", "tennis player", "home plate",
    "hot dog", "train track", "train station", "parking lot",
    "parking meter", "living room", "dining room", "dining table",
    "coffee table", "teddy bear", "polar bear", "wine glass",
    "cell phone", "remote control", "swimming pool", "soccer ball",
    "soccer field", "picnic table", "park bench", "flower pot",
    "palm tree", "pine tree", "double decker",
})

_VOWELS = "aeiou"

_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "no", "etc", "eg", "ie",
    "vs", "fig", "al", "inc", "jr", "sr",
})

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:[-'][a-z0-9]+)*")


# --------------------------------------------------------- verb morphology

def _regular_inflections(base: str) -> set[str]:
    forms = {base}
    if base.endswith(("s", "x", "z", "ch", "sh", "o")):
        forms.add(base + "es")
    elif base.endswith("y") and base[-2] not in _VOWELS:
        forms.add(base[:-1] + "ies")
    else:
        forms.add(base + "s")
    if base.endswith("e") and not base.endswith("ee"):
        forms.add(base[:-1] + "ing")
        forms.add(base + "d")
    elif base.endswith("y") and base[-2] not in _VOWELS:
        forms.add(base + "ing")
        forms.add(base[:-1] + "ied")
    else:
        stem = base
        if (
            len(base) >= 3
            and base[-1] not in _VOWELS + "wxy"
            and base[-2] in _VOWELS
            and base[-3] not in _VOWELS
        ):
            stem = base + base[-1]
        forms.add(stem + "ing")
        forms.add(stem + "ed")
    return forms


def _build_verb_table() -> dict[str, str]:
    table: dict[str, str] = {}
    for base in sorted(VERB_BASES):
        for form in sorted(_regular_inflections(base)):
            table.setdefault(form, base)
        for form in _IRREGULAR_VERB_FORMS.get(base, ()):
            table[form] = base
    return table


_VERB_FORMS = _build_verb_table()


def verb_lemma(token: str) -> str | None:
    """Base form of a known caption verb, or None for anything else."""
    return _VERB_FORMS.get(token)


# ------------------------------------------------------------ normalization

def _singularize_word(word: str) -> str:
    if word in _IRREGULAR_SINGULARS:
        return _IRREGULAR_SINGULARS[word]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(("s", "x", "z", "ch", "sh")):
        return word[:-2]
    if (
        word.endswith("s")
        and len(word) > 3
        and not word.endswith(("ss", "us", "is"))
    ):
        return word[:-1]
    return word


def normalize_term(term: str) -> str:
    """Lowercase, strip a leading article, singularize the head word.

    Multiword terms keep their non-final words as-is (lowercased); only
    the final word is singularized. The result is a fixpoint, so
    normalizing twice changes nothing.
    """
    words = term.strip().lower().split()
    if words and words[0] in _ARTICLES:
        words = words[1:]
    if not words:
        return ""
    head = words[-1]
    for _ in range(3):
        new = _singularize_word(head)
        if new == head:
            break
        head = new
    return " ".join(words[:-1] + [head])


def normalize_predicate(pred: str) -> str:
    """Canonicalize a relation predicate.

    The first word maps to its verb base form when known (copula forms
    map to "be"); remaining words pass through lowercased.
    """
    words = pred.strip().lower().split()
    if not words:
        return ""
    first = words[0]
    if first in _COPULA_FORMS:
        first = "be"
    else:
        first = _VERB_FORMS.get(first, first)
    return " ".join([first] + words[1:])


# -------------------------------------------------------- sentence splitting

def split_sentences(text: str) -> list[str]:
    """Split text into sentences on ., ! and ? delimiters.

    Periods inside decimal numbers and after common abbreviations or
    single-letter initials do not end a sentence. Delimiters stay with
    their sentence; no non-whitespace character is ever dropped.
    """
    pieces: list[str] = []
    buf: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        buf.append(ch)
        if ch in ".!?":
            j = i + 1
            while j < n and text[j] in ".!?\"')]":
                buf.append(text[j])
                j += 1
            boundary = True
            if ch == ".":
                if 0 < i < n - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
                    boundary = False
                else:
                    k = i - 1
                    while k >= 0 and text[k].isalpha():
                        k -= 1
                    prev_word = text[k + 1:i].lower()
                    if prev_word in _ABBREVIATIONS or len(prev_word) == 1:
                        boundary = False
            if boundary:
                pieces.append("".join(buf))
                buf = []
            i = j
        else:
            i += 1
    if buf:
        pieces.append("".join(buf))
    return [p.strip() for p in pieces if p.strip()]


# ----------------------------------------------------------------- TupleSet

def _check_term(term: object, what: str) -> str:
    if not isinstance(term, str):
        raise ValidationError(f"{what} must be a string, got {type(term).__name__}")
    if not term or term != term.strip() or term != term.lower():
        raise ValidationError(f"{what} {term!r} is not a trimmed lowercase term")
    return term


@dataclass(frozen=True)
class TupleSet:
    """Objects, per-object attributes, and subject-predicate-object
    relations extracted from one caption.

    Structural guarantees, enforced at construction: every attribute key
    and every relation endpoint is a member of objects, and all terms
    are trimmed and lowercase.
    """

    objects: frozenset[str]
    attributes: Mapping[str, frozenset[str]]
    relations: frozenset[tuple[str, str, str]]

    def __init__(
        self,
        objects: Iterable[str] = (),
        attributes: Mapping[str, Iterable[str]] | None = None,
        relations: Iterable[Sequence[str]] = (),
    ) -> None:
        objs = frozenset(_check_term(o, "object") for o in objects)
        attrs: dict[str, frozenset[str]] = {}
        for key, values in sorted((attributes or {}).items()):
            _check_term(key, "attribute key")
            if key not in objs:
                raise ValidationError(f"attribute key {key!r} is not an object")
            vals = frozenset(_check_term(v, "attribute") for v in values)
            if vals:
                attrs[key] = vals
        rels = set()
        for rel in relations:
            if len(rel) != 3:
                raise ValidationError(f"relation {rel!r} does not have three parts")
            subj, pred, obj = (_check_term(t, "relation part") for t in rel)
            if subj not in objs:
                raise ValidationError(f"relation subject {subj!r} is not an object")
            if obj not in objs:
                raise ValidationError(f"relation object {obj!r} is not an object")
            rels.add((subj, pred, obj))
        object.__setattr__(self, "objects", objs)
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "relations", frozenset(rels))

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_attributes(self) -> int:
        return sum(len(v) for v in self.attributes.values())

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def is_empty(self) -> bool:
        return not self.objects and not self.relations and not self.attributes

    def attribute_pairs(self) -> list[tuple[str, str]]:
        """Sorted (object, attribute) pairs."""
        return sorted(
            (key, val) for key, vals in self.attributes.items() for val in vals
        )

    def to_record(self) -> dict:
        """Plain-data form, keys sorted, suitable for JSON output."""
        return {
            "objects": sorted(self.objects),
            "attributes": {k: sorted(v) for k, v in sorted(self.attributes.items())},
            "relations": [list(r) for r in sorted(self.relations)],
        }


def ingest_tuples(record: Mapping) -> TupleSet:
    """Build a TupleSet from a plain mapping, normalizing every term.

    The mapping may carry "objects" (list of strings), "attributes"
    (object -> list of strings), and "relations" (list of 3-element
    lists). Missing keys default to empty. Malformed structure or an
    attribute key / relation endpoint that is not an object raises
    ValidationError; nothing is repaired silently.
    """
    if not isinstance(record, Mapping):
        raise ValidationError("tuple record must be a mapping")
    unknown = set(record) - {"objects", "attributes", "relations"}
    if unknown:
        raise ValidationError(f"unknown tuple record keys: {sorted(unknown)}")

    raw_objects = record.get("objects", [])
    if not isinstance(raw_objects, (list, tuple)):
        raise ValidationError("objects must be a list of strings")
    objects = []
    for obj in raw_objects:
        if not isinstance(obj, str):
            raise ValidationError(f"object {obj!r} is not a string")
        norm = normalize_term(obj)
        if not norm:
            raise ValidationError(f"object {obj!r} normalizes to nothing")
        objects.append(norm)

    raw_attrs = record.get("attributes", {})
    if not isinstance(raw_attrs, Mapping):
        raise ValidationError("attributes must be a mapping")
    attributes: dict[str, set[str]] = {}
    for key, values in raw_attrs.items():
        if not isinstance(key, str):
            raise ValidationError(f"attribute key {key!r} is not a string")
        if not isinstance(values, (list, tuple)):
            raise ValidationError(f"attribute values for {key!r} must be a list")
        norm_key = normalize_term(key)
        bucket = attributes.setdefault(norm_key, set())
        for val in values:
            if not isinstance(val, str):
                raise ValidationError(f"attribute {val!r} is not a string")
            norm_val = normalize_term(val)
            if norm_val:
                bucket.add(norm_val)

    raw_rels = record.get("relations", [])
    if not isinstance(raw_rels, (list, tuple)):
        raise ValidationError("relations must be a list")
    relations = []
    for rel in raw_rels:
        if not isinstance(rel, (list, tuple)) or len(rel) != 3:
            raise ValidationError(f"relation {rel!r} is not a 3-element list")
        subj, pred, obj = rel
        for part in rel:
            if not isinstance(part, str):
                raise ValidationError(f"relation part {part!r} is not a string")
        relations.append(
            (normalize_term(subj), normalize_predicate(pred), normalize_term(obj))
        )

    return TupleSet(objects, attributes, relations)


# ------------------------------------------------------------- tokenization

def _tokenize(sentence: str) -> list[str]:
    tokens = []
    for tok in _TOKEN_RE.findall(sentence.lower()):
        tok = tok.replace("'", "")
        if not tok or tok.isdigit():
            continue
        if tok in ADVERBS or tok in PRONOUNS:
            continue
        tokens.append(tok)
    return tokens


@dataclass
class _Unit:
    kind: str                       # "np", "verb", "prep", "aux", "conj"
    tokens: list[str] = field(default_factory=list)
    had_det: bool = False
    surface: str = ""               # verb units: surface form


def _segment(tokens: list[str]) -> list[_Unit]:
    units: list[_Unit] = []
    np_tokens: list[str] = []
    np_det = False

    def flush() -> None:
        nonlocal np_tokens, np_det
        if np_tokens:
            units.append(_Unit("np", np_tokens, np_det))
        np_tokens = []
        np_det = False

    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        prev = tokens[i - 1] if i > 0 else None
        matched_mw = None
        for mw in MULTIWORD_PREPOSITIONS:
            if tuple(tokens[i:i + len(mw)]) == mw:
                matched_mw = mw
                break
        if matched_mw is not None:
            flush()
            units.append(_Unit("prep", [" ".join(matched_mw)]))
            i += len(matched_mw)
            continue
        if tok in DETERMINERS:
            flush()
            np_det = True
        elif tok in CONJUNCTIONS:
            flush()
            units.append(_Unit("conj"))
        elif tok in AUXILIARIES:
            flush()
            units.append(_Unit("aux"))
        elif tok in PREPOSITIONS:
            flush()
            units.append(_Unit("prep", [tok]))
        elif tok in _VERB_FORMS and prev not in DETERMINERS:
            flush()
            units.append(_Unit("verb", [_VERB_FORMS[tok]], surface=tok))
        else:
            np_tokens.append(tok)
        i += 1
    flush()
    return units


# ----------------------------------------------------------- tuple assembly

class _Builder:
    def __init__(self, compounds: Collection[str]) -> None:
        self.compounds = compounds
        self.objects: dict[str, None] = {}
        self.attributes: dict[str, set[str]] = {}
        self.relations: list[tuple[str, str, str]] = []

    def add_object(self, head: str) -> None:
        self.objects.setdefault(head, None)

    def add_attrs(self, head: str, attrs: Iterable[str]) -> None:
        if head in self.objects:
            bucket = self.attributes.setdefault(head, set())
            bucket.update(a for a in attrs if a and a != head)

    def add_relation(self, subj: str, pred: str, obj: str) -> None:
        self.relations.append((subj, pred, obj))

    def realize_np(self, unit: _Unit, extra_attrs: list[str]) -> str | None:
        """Register one noun phrase; returns its head term or None for
        scene-region phrases."""
        norm = [normalize_term(t) for t in unit.tokens]
        norm = [t for t in norm if t]
        if not norm:
            return None
        head = norm[-1]
        attrs = norm[:-1]
        for width in (3, 2):
            if len(norm) >= width:
                cand = " ".join(norm[-width:])
                if cand in self.compounds:
                    head = cand
                    attrs = norm[:-width]
                    break
        if head in SCENE_REGIONS:
            return None
        self.add_object(head)
        self.add_attrs(head, attrs + extra_attrs)
        return head

    def finish(self) -> TupleSet:
        rels = [
            r for r in self.relations
            if r[0] in self.objects and r[2] in self.objects
        ]
        return TupleSet(self.objects, self.attributes, rels)


def _collect_group(units: list[_Unit], i: int) -> tuple[list[_Unit], int]:
    """Consume NP (CONJ NP)* starting at i; returns members and next index."""
    members = [units[i]]
    i += 1
    while (
        i + 1 < len(units)
        and units[i].kind == "conj"
        and units[i + 1].kind == "np"
    ):
        members.append(units[i + 1])
        i += 2
    # Fold a single-word singular member into a following member that
    # lacks its own determiner: "(a) red and blue kite" reads as one
    # kite, while "a cat and a dog" keeps both members.
    folded: list[_Unit] = []
    for idx, member in enumerate(members):
        if (
            idx + 1 < len(members)
            and not members[idx + 1].had_det
            and len(member.tokens) == 1
            and normalize_term(member.tokens[0]) == member.tokens[0]
        ):
            nxt = members[idx + 1]
            nxt.tokens = member.tokens + nxt.tokens
        else:
            folded.append(member)
    return folded, i


def extract_tuples(
    sentences: Sequence[str],
    *,
    compounds: Collection[str] | None = None,
) -> TupleSet:
    """Extract a TupleSet from already-split sentences.

    Patterns recognized, in one left-to-right pass per sentence:
    noun phrases (non-head words become attributes, multiword heads on
    the compound list stay intact), coordination with and/or, clauses
    "NP VERB [PREP] NP" (the preposition folds into the predicate),
    bare "NP PREP NP" attachment, and copula complements ("X is red"
    adds an attribute, "X is a Y" adds a be-relation). Phrases headed
    by scene-region words produce no object, and relations pointing at
    them are dropped. Intransitive clauses yield no relation.
    """
    builder = _Builder(DEFAULT_COMPOUNDS if compounds is None else compounds)
    for sentence in sentences:
        units = _segment(_tokenize(sentence))
        last_group: list[str] = []
        pending_verb: str | None = None
        verb_preps: list[str] = []
        pending_prep: str | None = None
        aux_pending = False
        premod_attrs: list[str] = []
        i = 0
        while i < len(units):
            unit = units[i]
            if unit.kind == "np":
                members, i = _collect_group(units, i)
                if aux_pending and last_group and pending_verb is None:
                    heads = []
                    for member in members:
                        if member.had_det:
                            head = builder.realize_np(member, [])
                            if head is not None:
                                for subj in last_group:
                                    builder.add_relation(subj, "be", head)
                                heads.append(head)
                        else:
                            attrs = [normalize_term(t) for t in member.tokens]
                            for subj in last_group:
                                builder.add_attrs(subj, attrs)
                    if heads:
                        last_group = heads
                    aux_pending = False
                    premod_attrs = []
                    continue
                heads = []
                for member in members:
                    head = builder.realize_np(member, premod_attrs)
                    if head is not None:
                        heads.append(head)
                premod_attrs = []
                if pending_verb is not None:
                    pred = " ".join([pending_verb] + verb_preps)
                    for subj in last_group:
                        for obj in heads:
                            builder.add_relation(subj, pred, obj)
                    pending_verb = None
                    verb_preps = []
                elif pending_prep is not None:
                    for subj in last_group:
                        for obj in heads:
                            builder.add_relation(subj, pending_prep, obj)
                    pending_prep = None
                if heads:
                    last_group = heads
            elif unit.kind == "verb":
                if not last_group:
                    premod_attrs.append(normalize_term(unit.surface))
                else:
                    pending_verb = unit.tokens[0]
                    verb_preps = []
                aux_pending = False
                pending_prep = None
                i += 1
            elif unit.kind == "prep":
                if pending_verb is not None:
                    verb_preps.append(unit.tokens[0])
                else:
                    pending_prep = unit.tokens[0]
                aux_pending = False
                i += 1
            elif unit.kind == "aux":
                aux_pending = True
                pending_prep = None
                i += 1
            else:  # conj between clauses
                i += 1
    return builder.finish()


def parse_caption(text: str, *, compounds: Collection[str] | None = None) -> TupleSet:
    """split_sentences followed by extract_tuples."""
    return extract_tuples(split_sentences(text), compounds=compounds)
