"""brainalign: caption/grounding/QA evaluation plus brain-feature alignment.

Two halves share one deterministic core. The evaluation half parses
captions into (object, attribute, relation) tuples, matches them in
three stages (exact, synonym, embedding cosine), and scores grounding
boxes and 3-option question answering. The alignment half trains a
per-subject brain encoder against feature-grid targets with a
regression loss plus a masked-denoising loss, all in hand-derived
NumPy with a compiled kernel backend when available.
"""

from .core import BBox, BrainSignal, FeatureGrid, RandomStream, Seed, rng_new
from .errors import (
    BrainAlignError,
    DataError,
    DegenerateMask,
    DegenerateVector,
    DivergenceError,
    EmptyCorpus,
    FormatError,
    NumericalError,
    ShapeError,
    UnknownSubject,
    UsageError,
    ValidationError,
)
from .grounding import GroundingItem, GroundingRow, acc_at, category_report, iou
from .kernels import BACKEND
from .matching import (
    CategoryScore,
    EmbeddingTable,
    MatchPair,
    MatchReport,
    SynonymLexicon,
    corpus_report,
    cosine_similarity,
    match_terms,
    match_tuplesets,
    prf,
)
from .schedule import NoiseSchedule, TokenMask, corrupt, corrupt_grid, cosine_schedule, sample_mask
from .spaces import (
    LayerStack,
    NestedFeatures,
    aggregate_layers,
    avg_pool_2x2,
    interleave,
    nested_sequence,
    pool_3x3_to_one,
)
from .sqa import QAItem, SqaScore, parse_choice, score, validate_qa_set
from .task import SyntheticTask, TaskSample, make_synthetic_task
from .textparse import TupleSet, extract_tuples, ingest_tuples, parse_caption, split_sentences
from .train import (
    GradCheckResult,
    StabilizerReport,
    TrainConfig,
    TrainHistory,
    TrainResult,
    gradcheck_alignment,
    stabilizer_experiment,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BBox",
    "BrainAlignError",
    "BrainSignal",
    "CategoryScore",
    "DataError",
    "DegenerateMask",
    "DegenerateVector",
    "DivergenceError",
    "EmbeddingTable",
    "EmptyCorpus",
    "FeatureGrid",
    "FormatError",
    "GradCheckResult",
    "GroundingItem",
    "GroundingRow",
    "LayerStack",
    "MatchPair",
    "MatchReport",
    "NestedFeatures",
    "NoiseSchedule",
    "NumericalError",
    "QAItem",
    "RandomStream",
    "Seed",
    "ShapeError",
    "SqaScore",
    "StabilizerReport",
    "SynonymLexicon",
    "SyntheticTask",
    "TaskSample",
    "TokenMask",
    "TrainConfig",
    "TrainHistory",
    "TrainResult",
    "TupleSet",
    "UnknownSubject",
    "UsageError",
    "ValidationError",
    "acc_at",
    "aggregate_layers",
    "avg_pool_2x2",
    "category_report",
    "corpus_report",
    "corrupt",
    "corrupt_grid",
    "cosine_schedule",
    "cosine_similarity",
    "extract_tuples",
    "gradcheck_alignment",
    "ingest_tuples",
    "interleave",
    "iou",
    "make_synthetic_task",
    "match_terms",
    "match_tuplesets",
    "nested_sequence",
    "parse_caption",
    "parse_choice",
    "pool_3x3_to_one",
    "prf",
    "rng_new",
    "sample_mask",
    "score",
    "split_sentences",
    "stabilizer_experiment",
    "train",
    "validate_qa_set",
    "__version__",
]
