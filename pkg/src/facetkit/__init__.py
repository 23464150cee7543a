"""facetkit: evaluation toolkit for search-clarification facet sets.

Measures candidate facet sets against references with order-invariant text
metrics (Set BLEU, a METEOR variant, embedding greedy-matching F1), weak-
labels and scores facet-set coherency, runs exact trinomial significance
tests on pairwise human judgments, and hosts the blind annotation protocol
that collects them.
"""

from .corpus import (
    ClarificationRecord,
    DocumentList,
    Facet,
    FacetSet,
    GROUND_TRUTH,
    Query,
    Source,
    load_documents,
    load_generated_facets,
    parse_clarification_tsv,
)
from .embeddings import HashedTrigramProvider, HttpEmbeddingProvider, resolve_provider
from .metrics import (
    MeteorScore,
    MetricReport,
    SemanticScore,
    SetBleuScore,
    evaluate_corpus,
    meteor_set,
    semantic_f1,
    set_bleu,
)
from .stats import (
    PairwiseCounts,
    TrinomialResult,
    aggregate_pairwise,
    subset_significance,
    trinomial_pvalue,
)
from .text import normalize_text, porter_stem, tokenize

__version__ = "0.1.0"

__all__ = [
    "ClarificationRecord",
    "DocumentList",
    "Facet",
    "FacetSet",
    "GROUND_TRUTH",
    "Query",
    "Source",
    "load_documents",
    "load_generated_facets",
    "parse_clarification_tsv",
    "HashedTrigramProvider",
    "HttpEmbeddingProvider",
    "resolve_provider",
    "MeteorScore",
    "MetricReport",
    "SemanticScore",
    "SetBleuScore",
    "evaluate_corpus",
    "meteor_set",
    "semantic_f1",
    "set_bleu",
    "PairwiseCounts",
    "TrinomialResult",
    "aggregate_pairwise",
    "subset_significance",
    "trinomial_pvalue",
    "normalize_text",
    "porter_stem",
    "tokenize",
    "__version__",
]
