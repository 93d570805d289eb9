"""Box-overlap scoring for referring-expression grounding.

Boxes are corner-form (x_min, y_min, x_max, y_max) in continuous
coordinates. Accuracy at a threshold m counts boxes whose IoU is
strictly greater than m; pass inclusive=True for >= instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .core import BBox
from .errors import EmptyCorpus, ValidationError

SALIENT_CREATURE = "salient_creature"
SALIENT_OBJECT = "salient_object"
INCONSPICUOUS = "inconspicuous"
CATEGORIES = (SALIENT_CREATURE, SALIENT_OBJECT, INCONSPICUOUS)

# Report rows: name -> categories pooled into that row.
REPORT_ROWS: Mapping[str, tuple[str, ...]] = {
    "all": CATEGORIES,
    "salient": (SALIENT_CREATURE, SALIENT_OBJECT),
    "salient_creature": (SALIENT_CREATURE,),
    "salient_object": (SALIENT_OBJECT,),
    "inconspicuous": (INCONSPICUOUS,),
}


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two corner boxes.

    Symmetric, bounded to [0, 1], and 0 whenever the union is empty
    (two degenerate boxes).
    """
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class GroundingItem:
    """One referring expression with predicted and reference boxes."""

    expression: str
    predicted: BBox
    reference: BBox
    category: str

    def __post_init__(self) -> None:
        if not isinstance(self.expression, str) or not self.expression.strip():
            raise ValidationError("grounding expression must be a nonempty string")
        if self.category not in CATEGORIES:
            raise ValidationError(
                f"category {self.category!r} not in {sorted(CATEGORIES)}"
            )

    @property
    def iou(self) -> float:
        return iou(self.predicted, self.reference)


def _ious(items: Sequence[GroundingItem]) -> np.ndarray:
    # float64 explicitly: integer-coordinate boxes must not reach the
    # typed kernel as an int buffer
    pred = np.array([it.predicted.as_array() for it in items], dtype=np.float64)
    ref = np.array([it.reference.as_array() for it in items], dtype=np.float64)
    return kernels.iou_batch(pred, ref)


def acc_at(
    items: Sequence[GroundingItem],
    m: float,
    inclusive: bool = False,
) -> float:
    """Percentage of items whose IoU beats the threshold m in [0, 1]."""
    if not 0.0 <= m <= 1.0:
        raise ValidationError(f"threshold {m} outside [0, 1]")
    if not items:
        raise EmptyCorpus("accuracy over zero grounding items")
    vals = _ious(items)
    hits = vals >= m if inclusive else vals > m
    return 100.0 * float(np.count_nonzero(hits)) / len(items)


@dataclass(frozen=True)
class GroundingRow:
    """One report row: item count, acc@0.5, and mean IoU."""

    count: int
    acc_at_05: float | None
    mean_iou: float | None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "acc_at_05": self.acc_at_05,
            "mean_iou": self.mean_iou,
        }


def category_report(
    items: Iterable[GroundingItem],
    inclusive: bool = False,
) -> dict[str, GroundingRow]:
    """Per-salience-group report over all/salient/creature/object/
    inconspicuous rows. Rows with no items carry None scores rather
    than a fabricated zero."""
    items = list(items)
    rows: dict[str, GroundingRow] = {}
    for name, cats in REPORT_ROWS.items():
        group = [it for it in items if it.category in cats]
        if not group:
            rows[name] = GroundingRow(0, None, None)
            continue
        vals = _ious(group)
        hits = vals >= 0.5 if inclusive else vals > 0.5
        rows[name] = GroundingRow(
            len(group),
            100.0 * float(np.count_nonzero(hits)) / len(group),
            float(np.mean(vals)),
        )
    return rows
