"""Rule-based weak labeling of facet-set coherency.

Rules fire in a fixed order and the first hit decides:

1. duplicate facets (equal after normalization)        -> incoherent
2. a facet contains the query verbatim (normalized)    -> incoherent
3. the record's question is known to carry coherent
   facet sets more than 95% of the time                -> coherent

A record no rule covers gets no label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Mapping

from ..corpus import ClarificationRecord, record_from_dict, record_to_dict
from ..errors import ProvenanceError


class Label(Enum):
    COHERENT = "coherent"
    INCOHERENT = "incoherent"


PROVENANCE_EXPERT = "expert"
PROVENANCE_PROPAGATED = "propagated"
PROVENANCE_PREDICTED = "predicted"
WEAK_RULE_DUPLICATE = "weak:duplicate-facet"
WEAK_RULE_QUERY_CONTAINMENT = "weak:query-containment"

PROPAGATION_THRESHOLD = 0.95  # strict: exactly 0.95 does not propagate


@dataclass(frozen=True)
class CoherencyLabel:
    value: Label
    provenance: str

    @property
    def is_predicted(self) -> bool:
        return self.provenance == PROVENANCE_PREDICTED


@dataclass(frozen=True)
class LabeledRecord:
    record: ClarificationRecord
    label: CoherencyLabel


def has_duplicate_facet(record: ClarificationRecord) -> bool:
    normalized = [f.normalized for f in record.facets]
    return len(set(normalized)) < len(normalized)


def contains_query(record: ClarificationRecord) -> bool:
    query_norm = record.query.normalized
    return any(query_norm in f.normalized for f in record.facets)


def weak_label(
    record: ClarificationRecord,
    question_stats: Mapping[str, float] | None = None,
) -> CoherencyLabel | None:
    """Apply the weak rules in order; return None when no rule fires."""
    if has_duplicate_facet(record):
        return CoherencyLabel(Label.INCOHERENT, WEAK_RULE_DUPLICATE)
    if contains_query(record):
        return CoherencyLabel(Label.INCOHERENT, WEAK_RULE_QUERY_CONTAINMENT)
    if question_stats is not None:
        fraction = question_stats.get(record.question)
        if fraction is not None and fraction > PROPAGATION_THRESHOLD:
            return CoherencyLabel(Label.COHERENT, PROVENANCE_PROPAGATED)
    return None


def question_coherent_fractions(
    labeled: Iterable[LabeledRecord],
) -> dict[str, float]:
    """Per-question fraction of coherent labels, for rule-3 propagation.

    Predicted labels are rejected: propagation must rest on human or weak
    evidence only.
    """
    totals: dict[str, list[int]] = {}
    for item in labeled:
        if item.label.is_predicted:
            raise ProvenanceError("predicted labels cannot drive propagation")
        bucket = totals.setdefault(item.record.question, [0, 0])
        bucket[1] += 1
        if item.label.value is Label.COHERENT:
            bucket[0] += 1
    return {q: coherent / total for q, (coherent, total) in totals.items()}


# --------------------------------------------------------------------------
# Labeled-data file format: one JSON object per line
# --------------------------------------------------------------------------


def write_labeled_jsonl(labeled: Iterable[LabeledRecord], stream: IO[str]) -> None:
    for item in labeled:
        payload = record_to_dict(item.record)
        payload["label"] = item.label.value.value
        payload["provenance"] = item.label.provenance
        stream.write(json.dumps(payload, ensure_ascii=False) + "\n")


def read_labeled_jsonl(stream: IO[str]) -> list[LabeledRecord]:
    items: list[LabeledRecord] = []
    for line in stream:
        if not line.strip():
            continue
        payload = json.loads(line)
        if payload.get("record_type") == "run_config":
            continue
        label = CoherencyLabel(Label(payload["label"]), payload["provenance"])
        items.append(LabeledRecord(record=record_from_dict(payload), label=label))
    return items
