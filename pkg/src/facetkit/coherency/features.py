"""Engineered features for the coherency scorer.

The features operationalize the three ways a facet set goes wrong: drifting
off one topical axis (embedding cosine spread), mismatched phrasing
templates (structural agreement), and unrelated word material (token
overlap). Singleton sets default every pairwise statistic to maximal
agreement so they are not penalized for undefined pair statistics.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np

from ..corpus import ClarificationRecord, Facet, FacetSet, Query
from ..embeddings import EmbeddingProvider
from .weak_labels import contains_query as _contains_query_rule
from .weak_labels import has_duplicate_facet as _has_duplicate_rule

FEATURE_SCHEMA_VERSION = 1

_TOKEN_COUNT_BUCKET_CAP = 4


@dataclass(frozen=True)
class FeatureVector:
    has_duplicate: float
    contains_query: float
    token_count_dispersion: float
    mean_pairwise_cosine: float
    min_pairwise_cosine: float
    template_agreement: float
    mean_jaccard: float
    head_token_agreement: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in feature_names()])


def feature_names() -> list[str]:
    return [f.name for f in fields(FeatureVector)]


def _facet_embedding(facet: Facet, provider: EmbeddingProvider) -> np.ndarray:
    vectors = provider.embed_batch(list(facet.terms))
    mean = vectors.mean(axis=0)
    norm = np.linalg.norm(mean)
    return mean / norm if norm > 0 else mean


def _structural_pattern(facet: Facet, query_terms: tuple[str, ...]) -> tuple:
    terms = facet.terms
    nq = len(query_terms)
    starts_with_query = nq > 0 and terms[:nq] == query_terms
    ends_with_query = nq > 0 and terms[-nq:] == query_terms
    has_digit = any(any(ch.isdigit() for ch in t) for t in terms)
    bucket = min(len(terms), _TOKEN_COUNT_BUCKET_CAP)
    return (starts_with_query, ends_with_query, has_digit, bucket)


def _modal_fraction(values: list) -> float:
    counts = Counter(values)
    return max(counts.values()) / len(values)


def extract_features(
    facets: FacetSet, query: Query, provider: EmbeddingProvider
) -> FeatureVector:
    facet_list = list(facets)
    m = len(facet_list)

    # surrogate record for the shared rule predicates
    record = ClarificationRecord(query=query, question="", facets=facets)
    has_dup = 1.0 if _has_duplicate_rule(record) else 0.0
    has_query = 1.0 if _contains_query_rule(record) else 0.0

    token_counts = np.array([len(f.terms) for f in facet_list], dtype=float)
    dispersion = float(token_counts.std() / token_counts.mean()) if m > 1 else 0.0

    if m > 1:
        embeddings = np.stack([_facet_embedding(f, provider) for f in facet_list])
        cosines = [
            float(np.clip(embeddings[i] @ embeddings[j], -1.0, 1.0))
            for i, j in itertools.combinations(range(m), 2)
        ]
        mean_cosine = float(np.mean(cosines))
        min_cosine = float(np.min(cosines))

        token_sets = [set(f.terms) for f in facet_list]
        jaccards = [
            len(token_sets[i] & token_sets[j]) / len(token_sets[i] | token_sets[j])
            for i, j in itertools.combinations(range(m), 2)
        ]
        mean_jaccard = float(np.mean(jaccards))
    else:
        mean_cosine = 1.0
        min_cosine = 1.0
        mean_jaccard = 1.0

    query_terms = query.terms
    patterns = [_structural_pattern(f, query_terms) for f in facet_list]
    template_agreement = _modal_fraction(patterns)
    head_token_agreement = _modal_fraction([f.terms[-1] for f in facet_list])

    return FeatureVector(
        has_duplicate=has_dup,
        contains_query=has_query,
        token_count_dispersion=dispersion,
        mean_pairwise_cosine=mean_cosine,
        min_pairwise_cosine=min_cosine,
        template_agreement=template_agreement,
        mean_jaccard=mean_jaccard,
        head_token_agreement=head_token_agreement,
    )


def feature_matrix(
    items: list[tuple[FacetSet, Query]], provider: EmbeddingProvider
) -> np.ndarray:
    """Feature rows for many (facets, query) pairs in input order."""
    return np.stack(
        [extract_features(facets, query, provider).to_array() for facets, query in items]
    )
