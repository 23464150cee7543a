import random

import pytest

from facetkit.corpus import Facet, FacetSet
from facetkit.errors import EmptySetError
from facetkit.metrics import _align, _count_chunks, _pair_meteor, meteor_set


class TestPairwiseMeteor:
    def test_identical_three_token_facet(self):
        score = _pair_meteor(Facet("police car sales"), Facet("police car sales"))
        assert score.matches == 3
        assert score.chunks == 1
        assert score.value == pytest.approx(1 - 0.5 * (1 / 3) ** 3, abs=1e-12)

    def test_single_shared_token(self):
        score = _pair_meteor(Facet("school bus sales"), Facet("police boat sales"))
        assert score.matches == 1
        assert score.chunks == 1
        assert score.value == pytest.approx(1 / 6, abs=1e-12)

    def test_no_matches(self):
        score = _pair_meteor(Facet("specs"), Facet("coupe"))
        assert score.value == 0.0
        assert score.matches == 0

    def test_stem_matching(self):
        # "sales" and "sale" align through the stemming stage
        score = _pair_meteor(Facet("car sale"), Facet("car sales"))
        assert score.matches == 2

    def test_fragmented_matches_penalized_more(self):
        contiguous = _pair_meteor(Facet("police car sales"), Facet("police car sales"))
        # same matched unigrams but scattered against the reference order
        scattered = _pair_meteor(Facet("sales police car"), Facet("police car sales"))
        assert scattered.matches == contiguous.matches == 3
        assert scattered.chunks > contiguous.chunks
        assert scattered.value < contiguous.value


class TestAlignment:
    def test_in_order_exact_alignment(self):
        pairs = _align(("police", "car", "sales"), ("police", "car", "sales"))
        assert pairs == [(0, 0), (1, 1), (2, 2)]

    def test_duplicate_tokens_consume_references(self):
        pairs = _align(("car", "car"), ("car",))
        assert pairs == [(0, 0)]

    def test_chunk_counting(self):
        assert _count_chunks([(0, 0), (1, 1), (2, 2)]) == 1
        assert _count_chunks([(0, 1), (2, 0)]) == 2
        assert _count_chunks([]) == 0


class TestMeteorSet:
    def test_identity_pair_value(self, example_rows):
        _, gt, _ = example_rows["police"]
        score = meteor_set(gt, gt)
        assert score.value == pytest.approx(1 - 0.5 * (1 / 3) ** 3, abs=1e-12)

    def test_police_row_weighted_mean(self, example_rows):
        _, gt, gen = example_rows["police"]
        score = meteor_set(gen, gt)
        # two perfect three-token pairs and one single-match pair, all weight 6
        expected = (2 * (1 - 0.5 / 27) + 1 / 6) / 3
        assert score.value == pytest.approx(expected, abs=1e-12)

    def test_disjoint_sets_zero(self, example_rows):
        _, gt, gen = example_rows["mustang"]
        assert meteor_set(gen, gt).value == 0.0

    def test_value_zero_iff_no_matches(self):
        rng = random.Random(3)
        vocab = ["police", "car", "sales", "coupe", "specs", "bus"]
        for _ in range(100):
            cand = FacetSet.from_texts(
                [" ".join(rng.choices(vocab, k=rng.randint(1, 3))) for _ in range(rng.randint(1, 3))]
            )
            ref = FacetSet.from_texts(
                [" ".join(rng.choices(vocab, k=rng.randint(1, 3))) for _ in range(rng.randint(1, 3))]
            )
            score = meteor_set(cand, ref)
            assert (score.value == 0.0) == (score.matches == 0)
            assert score.chunks <= score.matches

    def test_unmatched_facets_dilute(self):
        # an extra unrelated reference facet adds zero-scored weight
        small = meteor_set(["police car sales"], ["police car sales"])
        diluted = meteor_set(["police car sales"], ["police car sales", "unrelated thing"])
        assert diluted.value < small.value

    def test_assignment_maximizes_total(self):
        # pathological order: best assignment crosses the canonical order
        cand = FacetSet.from_texts(["alpha beta", "gamma delta"])
        ref = FacetSet.from_texts(["gamma delta", "alpha beta"])
        score = meteor_set(cand, ref)
        assert score.matches == 4

    def test_asymmetric_sizes(self):
        score = meteor_set(["police car sales"], ["police car sales", "school bus"])
        assert score.matches == 3

    def test_empty_rejected(self):
        with pytest.raises(EmptySetError):
            meteor_set([], ["a"])

    def test_permutation_invariance(self, example_rows):
        _, gt, gen = example_rows["police"]
        shuffled = FacetSet.from_texts(list(reversed(gen.raw_texts())))
        assert meteor_set(shuffled, gt) == meteor_set(gen, gt)
