import pytest

from facetkit.corpus import FacetSet, Query
from facetkit.embeddings import HashedTrigramProvider


@pytest.fixture(scope="session")
def provider():
    return HashedTrigramProvider()


# The three contradicting-metrics example rows used throughout: each entry is
# (query, ground-truth facets, generated facets).
EXAMPLE_ROWS = {
    "mustang": (
        "1982 mustang",
        ["coupe", "hatchback"],
        ["specs", "for sale"],
    ),
    "call_of_duty": (
        "new call of duty game",
        ["new call of duty zombie game", "new call of duty ghost game"],
        ["pc", "ps4"],
    ),
    "police": (
        "police sales",
        ["police car sales", "police motorcycle sales", "police boat sales"],
        ["police car sales", "police motorcycle sales", "school bus sales"],
    ),
}


@pytest.fixture(scope="session")
def example_rows():
    return {
        name: (Query(q), FacetSet.from_texts(gt), FacetSet.from_texts(gen))
        for name, (q, gt, gen) in EXAMPLE_ROWS.items()
    }
