import random

import pytest

from facetkit.corpus import FacetSet
from facetkit.errors import EmptySetError
from facetkit.metrics import semantic_f1


class TestSemanticF1:
    def test_identical_sets_score_one(self, provider):
        fs = FacetSet.from_texts(["coupe", "hatchback"])
        score = semantic_f1(fs, fs, provider)
        assert score.f1 == pytest.approx(1.0, abs=1e-12)
        assert score.precision == pytest.approx(1.0, abs=1e-12)

    def test_equal_token_multisets_score_one(self, provider):
        # same pooled tokens, different facet segmentation
        a = FacetSet.from_texts(["police car", "sales"])
        b = FacetSet.from_texts(["police", "car sales"])
        assert semantic_f1(a, b, provider).f1 == pytest.approx(1.0, abs=1e-12)

    def test_mustang_pair_golden_value(self, provider, example_rows):
        # frozen from an oracle run of the fixed-hash provider: the two sides
        # share no character trigrams at all
        _, gt, gen = example_rows["mustang"]
        score = semantic_f1(gen, gt, provider)
        assert score.f1 == pytest.approx(0.0, abs=1e-12)
        assert score.f1 < 0.5

    def test_police_pair_golden_value(self, provider, example_rows):
        _, gt, gen = example_rows["police"]
        score = semantic_f1(gen, gt, provider)
        assert score.f1 == pytest.approx(0.8296296296296296, abs=1e-12)

    def test_directional_relation_between_rows(self, provider, example_rows):
        _, gt_p, gen_p = example_rows["police"]
        _, gt_m, gen_m = example_rows["mustang"]
        assert semantic_f1(gen_p, gt_p, provider).f1 > semantic_f1(gen_m, gt_m, provider).f1

    def test_scores_in_unit_interval(self, provider):
        rng = random.Random(31)
        vocab = ["police", "car", "sales", "coupe", "specs", "bus", "zebra", "xylophone"]
        for _ in range(50):
            cand = FacetSet.from_texts(
                [" ".join(rng.choices(vocab, k=rng.randint(1, 3))) for _ in range(rng.randint(1, 3))]
            )
            ref = FacetSet.from_texts(
                [" ".join(rng.choices(vocab, k=rng.randint(1, 3))) for _ in range(rng.randint(1, 3))]
            )
            score = semantic_f1(cand, ref, provider)
            assert 0.0 <= score.precision <= 1.0
            assert 0.0 <= score.recall <= 1.0
            assert 0.0 <= score.f1 <= 1.0

    def test_f1_harmonic_mean(self, provider, example_rows):
        _, gt, gen = example_rows["police"]
        score = semantic_f1(gen, gt, provider)
        expected = 2 * score.precision * score.recall / (score.precision + score.recall)
        assert score.f1 == pytest.approx(expected, abs=1e-15)

    def test_permutation_invariance(self, provider, example_rows):
        _, gt, gen = example_rows["police"]
        shuffled = FacetSet.from_texts(list(reversed(gen.raw_texts())))
        assert semantic_f1(shuffled, gt, provider) == semantic_f1(gen, gt, provider)

    def test_empty_rejected(self, provider):
        with pytest.raises(EmptySetError):
            semantic_f1([], ["a"], provider)
