import pytest

from facetkit.coherency.splitting import Split, _allocate, stratified_split
from facetkit.coherency.weak_labels import (
    CoherencyLabel,
    Label,
    LabeledRecord,
    PROVENANCE_EXPERT,
)
from facetkit.corpus import ClarificationRecord, FacetSet, Query
from facetkit.errors import EmptyClassError


def _labeled(n_coherent, n_incoherent):
    items = []
    for i in range(n_coherent):
        items.append(
            LabeledRecord(
                ClarificationRecord(
                    Query(f"coherent query {i}"), "", FacetSet.from_texts([f"facet {i}", "other"])
                ),
                CoherencyLabel(Label.COHERENT, PROVENANCE_EXPERT),
            )
        )
    for i in range(n_incoherent):
        items.append(
            LabeledRecord(
                ClarificationRecord(
                    Query(f"incoherent query {i}"), "", FacetSet.from_texts(["dup", "dup"])
                ),
                CoherencyLabel(Label.INCOHERENT, PROVENANCE_EXPERT),
            )
        )
    return items


class TestAllocate:
    def test_exact_ratios(self):
        assert _allocate(100, (0.70, 0.15, 0.15)) == [70, 15, 15]

    def test_remainder_tie_goes_to_validation(self):
        # 10 records: floors 7/1/1, both fractional parts 0.5; validation
        # precedes test in the tie order
        assert _allocate(10, (0.70, 0.15, 0.15)) == [7, 2, 1]

    def test_single_record_goes_to_train(self):
        assert _allocate(1, (0.70, 0.15, 0.15)) == [1, 0, 0]


class TestStratifiedSplit:
    def test_twenty_records_overall_counts(self):
        items = _labeled(10, 10)
        assignment = stratified_split(items, seed=0)
        counts = {s: len(assignment.indices(s)) for s in Split}
        assert counts == {Split.TRAIN: 14, Split.VALIDATION: 4, Split.TEST: 2}

    def test_hundred_records_class_proportions(self):
        items = _labeled(40, 60)
        assignment = stratified_split(items, seed=1)
        train = assignment.select(items, Split.TRAIN)
        val = assignment.select(items, Split.VALIDATION)
        test = assignment.select(items, Split.TEST)
        assert (len(train), len(val), len(test)) == (70, 15, 15)
        positives = lambda part: sum(
            1 for it in part if it.label.value is Label.COHERENT
        )
        assert positives(train) == 28
        assert positives(val) == 6
        assert positives(test) == 6

    def test_partitions_disjoint_and_exhaustive(self):
        items = _labeled(13, 7)
        assignment = stratified_split(items, seed=3)
        seen = sorted(i for s in Split for i in assignment.indices(s))
        assert seen == list(range(20))

    def test_same_seed_identical(self):
        items = _labeled(15, 9)
        a = stratified_split(items, seed=42)
        b = stratified_split(items, seed=42)
        assert a == b

    def test_different_seed_differs(self):
        items = _labeled(30, 30)
        a = stratified_split(items, seed=1)
        b = stratified_split(items, seed=2)
        assert a != b

    def test_empty_class_rejected(self):
        with pytest.raises(EmptyClassError):
            stratified_split(_labeled(5, 0), seed=0)

    def test_bad_ratios_rejected(self):
        with pytest.raises(ValueError):
            stratified_split(_labeled(5, 5), ratios=(0.5, 0.2, 0.2), seed=0)
