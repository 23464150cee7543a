import io

import pytest

from facetkit.coherency.weak_labels import (
    CoherencyLabel,
    Label,
    LabeledRecord,
    PROVENANCE_EXPERT,
    PROVENANCE_PREDICTED,
    PROVENANCE_PROPAGATED,
    WEAK_RULE_DUPLICATE,
    WEAK_RULE_QUERY_CONTAINMENT,
    question_coherent_fractions,
    read_labeled_jsonl,
    weak_label,
    write_labeled_jsonl,
)
from facetkit.corpus import ClarificationRecord, FacetSet, Query
from facetkit.errors import ProvenanceError


def _record(query, facets, question="pick one"):
    return ClarificationRecord(
        query=Query(query), question=question, facets=FacetSet.from_texts(facets)
    )


class TestWeakRules:
    def test_duplicate_facets_incoherent(self):
        label = weak_label(_record("gift ideas", ["coupe", "coupe"]))
        assert label == CoherencyLabel(Label.INCOHERENT, WEAK_RULE_DUPLICATE)

    def test_duplicate_tolerates_case_and_whitespace(self):
        label = weak_label(_record("gift ideas", ["Coupe", "  coupe "]))
        assert label is not None and label.provenance == WEAK_RULE_DUPLICATE

    def test_query_containment_incoherent(self):
        label = weak_label(_record("gift ideas", ["gift ideas for men", "women"]))
        assert label == CoherencyLabel(Label.INCOHERENT, WEAK_RULE_QUERY_CONTAINMENT)

    def test_containment_is_substring_not_token_subset(self):
        # all query tokens appear, but never contiguously
        label = weak_label(_record("police sales", ["police car sales", "police boat sales"]))
        assert label is None

    def test_containment_normalized(self):
        label = weak_label(_record("Gift  Ideas", ["best GIFT IDEAS list"]))
        assert label is not None and label.provenance == WEAK_RULE_QUERY_CONTAINMENT

    def test_rule_order_duplicate_first(self):
        record = _record("gift ideas", ["gift ideas for men", "gift ideas for men"])
        label = weak_label(record)
        assert label.provenance == WEAK_RULE_DUPLICATE

    def test_no_rule_fires(self):
        assert weak_label(_record("1982 mustang", ["coupe", "hatchback"])) is None

    def test_facet_order_invariance(self):
        a = weak_label(_record("q", ["men", "women", "men"]))
        b = weak_label(_record("q", ["women", "men", "men"]))
        assert a == b


class TestPropagation:
    def test_fires_strictly_above_threshold(self):
        record = _record("1982 mustang", ["coupe", "hatchback"], question="which kind?")
        label = weak_label(record, question_stats={"which kind?": 0.96})
        assert label == CoherencyLabel(Label.COHERENT, PROVENANCE_PROPAGATED)

    def test_does_not_fire_at_exactly_threshold(self):
        record = _record("1982 mustang", ["coupe", "hatchback"], question="which kind?")
        assert weak_label(record, question_stats={"which kind?": 0.95}) is None

    def test_unknown_question_no_label(self):
        record = _record("1982 mustang", ["coupe", "hatchback"], question="other?")
        assert weak_label(record, question_stats={"which kind?": 1.0}) is None

    def test_incoherency_rules_precede_propagation(self):
        record = _record("q", ["dup", "dup"], question="which kind?")
        label = weak_label(record, question_stats={"which kind?": 1.0})
        assert label.value is Label.INCOHERENT


class TestQuestionStats:
    def test_fractions(self):
        items = [
            LabeledRecord(_record("q1", ["a"], "select brand"),
                          CoherencyLabel(Label.COHERENT, PROVENANCE_EXPERT)),
            LabeledRecord(_record("q2", ["b"], "select brand"),
                          CoherencyLabel(Label.COHERENT, PROVENANCE_EXPERT)),
            LabeledRecord(_record("q3", ["c"], "select brand"),
                          CoherencyLabel(Label.INCOHERENT, PROVENANCE_EXPERT)),
            LabeledRecord(_record("q4", ["d"], "select year"),
                          CoherencyLabel(Label.COHERENT, PROVENANCE_EXPERT)),
        ]
        stats = question_coherent_fractions(items)
        assert stats["select brand"] == pytest.approx(2 / 3)
        assert stats["select year"] == 1.0

    def test_predicted_labels_rejected(self):
        items = [
            LabeledRecord(_record("q", ["a"]),
                          CoherencyLabel(Label.COHERENT, PROVENANCE_PREDICTED)),
        ]
        with pytest.raises(ProvenanceError):
            question_coherent_fractions(items)


class TestLabeledFileRoundTrip:
    def test_round_trip(self):
        items = [
            LabeledRecord(_record("gift ideas", ["men", "women"]),
                          CoherencyLabel(Label.COHERENT, PROVENANCE_EXPERT)),
            LabeledRecord(_record("q", ["dup", "dup"]),
                          CoherencyLabel(Label.INCOHERENT, WEAK_RULE_DUPLICATE)),
        ]
        buffer = io.StringIO()
        write_labeled_jsonl(items, buffer)
        buffer.seek(0)
        assert read_labeled_jsonl(buffer) == items
