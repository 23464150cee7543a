"""Clarification-record data model and deterministic file ingestion.

Input formats (all UTF-8):

* clarification TSV — header row with required columns ``query``, ``question``,
  ``option_1`` .. ``option_5``; extra columns ignored.
* generated facets — line-delimited ``{"query": ..., "facets": [...]}``.
* documents — line-delimited ``{"query": ..., "documents": [...]}``; the
  first 10 documents per line are kept.

Parsing is total: bad rows/lines are reported as :class:`RowError` values,
never raised, except for a missing TSV header which aborts ingestion.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import EmptySetError, MissingHeaderError
from .text import normalize_text, tokenize

MAX_DOCUMENTS = 10

REQUIRED_TSV_COLUMNS = (
    "query",
    "question",
    "option_1",
    "option_2",
    "option_3",
    "option_4",
    "option_5",
)
_OPTION_COLUMNS = REQUIRED_TSV_COLUMNS[2:]


def query_id(text: str) -> str:
    """Stable identifier for a query: hash of its normalized text."""
    return hashlib.sha1(normalize_text(text).encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class Query:
    text: str
    id: str = field(default="")

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("query text must be non-empty after trimming")
        if not self.id:
            object.__setattr__(self, "id", query_id(self.text))

    @property
    def normalized(self) -> str:
        return normalize_text(self.text)

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(tokenize(self.text))


@dataclass(frozen=True)
class Facet:
    """One facet phrase; ``terms`` is always ``tokenize(raw)``."""

    raw: str
    terms: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        expected = tuple(tokenize(self.raw))
        if not self.terms:
            object.__setattr__(self, "terms", expected)
        elif self.terms != expected:
            raise ValueError("facet terms must equal tokenize(raw)")
        if not self.terms:
            raise ValueError(f"facet {self.raw!r} has no alphanumeric tokens")

    @property
    def normalized(self) -> str:
        return normalize_text(self.raw)


@dataclass(frozen=True)
class FacetSet:
    """Unordered multiset of facets with a canonical iteration order.

    Facets are stored sorted by (normalized text, raw text) so any two sets
    built from permutations of the same facets compare equal and all
    downstream iteration is order-independent. Duplicates are kept: they are
    meaningful to the coherency weak rules.
    """

    facets: tuple[Facet, ...]

    def __post_init__(self) -> None:
        if not self.facets:
            raise EmptySetError("a facet set requires at least one facet")
        ordered = tuple(sorted(self.facets, key=lambda f: (f.normalized, f.raw)))
        object.__setattr__(self, "facets", ordered)

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "FacetSet":
        return cls(tuple(Facet(t) for t in texts))

    @property
    def size(self) -> int:
        return len(self.facets)

    def __len__(self) -> int:
        return len(self.facets)

    def __iter__(self) -> Iterator[Facet]:
        return iter(self.facets)

    def raw_texts(self) -> list[str]:
        return [f.raw for f in self.facets]


@dataclass(frozen=True)
class DocumentList:
    """Ordered retrieved-document snippets, at most :data:`MAX_DOCUMENTS`."""

    snippets: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.snippets) > MAX_DOCUMENTS:
            raise ValueError(f"at most {MAX_DOCUMENTS} documents are kept")

    def __len__(self) -> int:
        return len(self.snippets)


@dataclass(frozen=True)
class Source:
    """Origin of a facet set: the reference corpus or a named generator."""

    kind: str  # "ground_truth" | "generated"
    provider: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "ground_truth":
            if self.provider is not None:
                raise ValueError("ground_truth source carries no provider")
        elif self.kind == "generated":
            if not self.provider:
                raise ValueError("generated source requires a provider name")
        else:
            raise ValueError(f"unknown source kind {self.kind!r}")

    @classmethod
    def generated(cls, provider: str) -> "Source":
        return cls("generated", provider)


GROUND_TRUTH = Source("ground_truth")


@dataclass(frozen=True)
class ClarificationRecord:
    query: Query
    question: str
    facets: FacetSet
    documents: DocumentList | None = None
    source: Source = GROUND_TRUTH


@dataclass(frozen=True)
class RowError:
    """One unparseable row/line: its 1-based position and the reason."""

    row: int
    reason: str


# --------------------------------------------------------------------------
# Ingestion
# --------------------------------------------------------------------------


def parse_clarification_tsv(
    stream: IO[str],
) -> tuple[list[ClarificationRecord], list[RowError]]:
    """Parse a MIMICS-style clarification TSV into records plus row errors.

    Never aborts on a bad data row; raises :class:`MissingHeaderError` only
    when the header lacks required columns. Empty option cells are dropped,
    so M is the count of non-empty options.
    """
    reader = csv.reader(stream, delimiter="\t")
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeaderError("input is empty; expected a header row") from None
    positions = {name.strip(): i for i, name in enumerate(header)}
    missing = [c for c in REQUIRED_TSV_COLUMNS if c not in positions]
    if missing:
        raise MissingHeaderError(f"missing required columns: {', '.join(missing)}")

    records: list[ClarificationRecord] = []
    errors: list[RowError] = []
    for row_no, row in enumerate(reader, start=2):
        def cell(name: str) -> str:
            i = positions[name]
            return row[i] if i < len(row) else ""

        query_text = cell("query")
        if not query_text.strip():
            errors.append(RowError(row_no, "empty query"))
            continue
        options = [cell(c) for c in _OPTION_COLUMNS]
        present = [(c, o) for c, o in zip(_OPTION_COLUMNS, options) if o.strip()]
        if not present:
            errors.append(RowError(row_no, "no non-empty options"))
            continue
        try:
            facets = tuple(Facet(o) for _, o in present)
        except ValueError as exc:
            errors.append(RowError(row_no, str(exc)))
            continue
        records.append(
            ClarificationRecord(
                query=Query(query_text),
                question=cell("question"),
                facets=FacetSet(facets),
                source=GROUND_TRUTH,
            )
        )
    return records, errors


def load_generated_facets(
    stream: IO[str], provider: str
) -> tuple[list[ClarificationRecord], list[RowError]]:
    """Load line-delimited ``{"query":..., "facets":[...]}`` generated sets.

    Duplicate query lines produce independent records. Malformed lines are
    reported per line number.
    """
    source = Source.generated(provider)
    records: list[ClarificationRecord] = []
    errors: list[RowError] = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
            query_text = payload["query"]
            facet_texts = payload["facets"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            errors.append(RowError(line_no, f"malformed line: {exc}"))
            continue
        if not isinstance(facet_texts, list) or not facet_texts:
            errors.append(RowError(line_no, "facets must be a non-empty list"))
            continue
        try:
            record = ClarificationRecord(
                query=Query(str(query_text)),
                question="",
                facets=FacetSet.from_texts(str(t) for t in facet_texts),
                source=source,
            )
        except (ValueError, EmptySetError) as exc:
            errors.append(RowError(line_no, str(exc)))
            continue
        records.append(record)
    return records, errors


def load_documents(stream: IO[str]) -> tuple[dict[str, DocumentList], list[RowError]]:
    """Load ``{"query":..., "documents":[...]}`` lines keyed by query id.

    Keeps the first :data:`MAX_DOCUMENTS` documents per line, preserving
    order. Later lines for the same query overwrite earlier ones.
    """
    by_query: dict[str, DocumentList] = {}
    errors: list[RowError] = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
            query_text = str(payload["query"])
            docs = payload["documents"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            errors.append(RowError(line_no, f"malformed line: {exc}"))
            continue
        if not isinstance(docs, list):
            errors.append(RowError(line_no, "documents must be a list"))
            continue
        by_query[query_id(query_text)] = DocumentList(
            tuple(str(d) for d in docs[:MAX_DOCUMENTS])
        )
    return by_query, errors


# --------------------------------------------------------------------------
# Canonical record serialization (round-trip safe)
# --------------------------------------------------------------------------


def record_to_dict(record: ClarificationRecord) -> dict:
    payload: dict = {
        "query": record.query.text,
        "question": record.question,
        "facets": record.facets.raw_texts(),
        "source": {"kind": record.source.kind, "provider": record.source.provider},
    }
    if record.documents is not None:
        payload["documents"] = list(record.documents.snippets)
    return payload


def record_from_dict(payload: dict) -> ClarificationRecord:
    source = Source(payload["source"]["kind"], payload["source"].get("provider"))
    documents = None
    if "documents" in payload:
        documents = DocumentList(tuple(payload["documents"]))
    return ClarificationRecord(
        query=Query(payload["query"]),
        question=payload.get("question", ""),
        facets=FacetSet.from_texts(payload["facets"]),
        documents=documents,
        source=source,
    )


def write_records_jsonl(records: Iterable[ClarificationRecord], stream: IO[str]) -> None:
    for record in records:
        stream.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")


def read_records_jsonl(stream: IO[str]) -> list[ClarificationRecord]:
    """Read canonical records, skipping run-config header lines."""
    records = []
    for line in stream:
        if not line.strip():
            continue
        payload = json.loads(line)
        if payload.get("record_type") == "run_config":
            continue
        records.append(record_from_dict(payload))
    return records
