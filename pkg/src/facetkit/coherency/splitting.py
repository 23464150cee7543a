"""Seeded stratified train/validation/test splitting.

Within each class: shuffle with the seed, give each split floor(ratio * n)
records, then hand out remainders by largest fractional part with the
deterministic tie order train > validation > test.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from ..errors import EmptyClassError
from .weak_labels import Label, LabeledRecord

DEFAULT_RATIOS = (0.70, 0.15, 0.15)


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


_SPLIT_ORDER = (Split.TRAIN, Split.VALIDATION, Split.TEST)


@dataclass(frozen=True)
class SplitAssignment:
    """Record index (into the input list) -> split; disjoint and exhaustive."""

    by_index: dict[int, Split]

    def indices(self, split: Split) -> list[int]:
        return sorted(i for i, s in self.by_index.items() if s is split)

    def select(self, records: Sequence, split: Split) -> list:
        return [records[i] for i in self.indices(split)]


def _allocate(n: int, ratios: Sequence[float]) -> list[int]:
    floors = [math.floor(r * n) for r in ratios]
    remainder = n - sum(floors)
    fractional = [r * n - f for r, f in zip(ratios, floors)]
    # stable sort keeps the train > validation > test tie order
    order = sorted(range(len(ratios)), key=lambda i: -fractional[i])
    for i in order[:remainder]:
        floors[i] += 1
    return floors


def stratified_split(
    labeled: Sequence[LabeledRecord],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitAssignment:
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    by_class: dict[str, list[int]] = {}
    for i, item in enumerate(labeled):
        by_class.setdefault(item.label.value.value, []).append(i)
    missing = [label.value for label in Label if label.value not in by_class]
    if missing:
        raise EmptyClassError(f"no records for class(es): {', '.join(missing)}")

    rng = random.Random(seed)
    assignment: dict[int, Split] = {}
    for class_name in sorted(by_class):
        indices = list(by_class[class_name])
        rng.shuffle(indices)
        sizes = _allocate(len(indices), ratios)
        cursor = 0
        for split, size in zip(_SPLIT_ORDER, sizes):
            for idx in indices[cursor : cursor + size]:
                assignment[idx] = split
            cursor += size
    return SplitAssignment(by_index=assignment)
