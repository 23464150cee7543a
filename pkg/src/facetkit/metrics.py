"""Order-invariant set-level similarity metrics between facet sets.

All three metrics consume :class:`~facetkit.corpus.FacetSet` values (or raw
string sequences, converted internally), whose canonical internal ordering
makes every computation independent of the facet order supplied by callers.

Set BLEU pools n-grams within each facet; n-grams never cross facet
boundaries, so "police car" + "boat sales" contributes no "car boat" bigram.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import ClarificationRecord, Facet, FacetSet
from .embeddings import EmbeddingProvider
from .errors import EmptySetError
from .text import porter_stem


def _as_facet_set(value, side: str) -> FacetSet:
    if isinstance(value, FacetSet):
        return value
    if not value:
        raise EmptySetError(f"{side} facet set is empty")
    return FacetSet.from_texts(value)


# --------------------------------------------------------------------------
# Set BLEU
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SetBleuScore:
    """Cumulative clipped n-gram precision scores with brevity penalty.

    ``per_n[n]`` is the cumulative score ``BP * (p_1 * ... * p_n)^(1/n)``;
    ``precisions[n]`` exposes the raw clipped precision at each level.
    """

    per_n: dict[int, float]
    precisions: dict[int, float]
    brevity_penalty: float


def _pooled_ngrams(facet_set: FacetSet, n: int) -> Counter:
    counts: Counter = Counter()
    for facet in facet_set:
        terms = facet.terms
        for i in range(len(terms) - n + 1):
            counts[terms[i : i + n]] += 1
    return counts


def set_bleu(candidate, reference, max_n: int = 4) -> SetBleuScore:
    """Set-level BLEU with within-facet n-gram pooling.

    Clipped precision at each n is computed over the pooled multisets; a
    level where the candidate has no n-grams scores 1 if the reference also
    has none, else 0. The brevity penalty uses total token counts.
    """
    cand = _as_facet_set(candidate, "candidate")
    ref = _as_facet_set(reference, "reference")
    if not 1 <= max_n <= 4:
        raise ValueError("max_n must be between 1 and 4")

    c_tokens = sum(len(f.terms) for f in cand)
    r_tokens = sum(len(f.terms) for f in ref)
    bp = 1.0 if c_tokens >= r_tokens else math.exp(1.0 - r_tokens / c_tokens)

    precisions: dict[int, float] = {}
    for n in range(1, max_n + 1):
        cand_counts = _pooled_ngrams(cand, n)
        total = sum(cand_counts.values())
        if total == 0:
            ref_total = sum(_pooled_ngrams(ref, n).values())
            precisions[n] = 1.0 if ref_total == 0 else 0.0
            continue
        ref_counts = _pooled_ngrams(ref, n)
        clipped = sum(
            min(count, ref_counts.get(gram, 0)) for gram, count in cand_counts.items()
        )
        precisions[n] = clipped / total

    per_n: dict[int, float] = {}
    for n in range(1, max_n + 1):
        product = 1.0
        for k in range(1, n + 1):
            product *= precisions[k]
        per_n[n] = bp * product ** (1.0 / n)
    return SetBleuScore(per_n=per_n, precisions=precisions, brevity_penalty=bp)


# --------------------------------------------------------------------------
# METEOR (exact + Porter-stem matching, no synonymy resource)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MeteorScore:
    value: float
    matches: int
    chunks: int


def _align(cand_terms: Sequence[str], ref_terms: Sequence[str]) -> list[tuple[int, int]]:
    """Unigram alignment: an exact-match stage then a stem-match stage.

    Within each stage candidate tokens are scanned left to right and take
    the first unmatched compatible reference token, which keeps in-order
    matches contiguous and the procedure deterministic.
    """
    cand_free = [True] * len(cand_terms)
    ref_free = [True] * len(ref_terms)
    pairs: list[tuple[int, int]] = []

    for match_key in (lambda t: t, porter_stem):
        ref_keys = [match_key(t) for t in ref_terms]
        for ci, token in enumerate(cand_terms):
            if not cand_free[ci]:
                continue
            key = match_key(token)
            for ri, ref_key in enumerate(ref_keys):
                if ref_free[ri] and key == ref_key:
                    pairs.append((ci, ri))
                    cand_free[ci] = False
                    ref_free[ri] = False
                    break
    pairs.sort()
    return pairs


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or (ci, ri) != (prev[0] + 1, prev[1] + 1):
            chunks += 1
        prev = (ci, ri)
    return chunks


def _pair_meteor(cand: Facet, ref: Facet) -> MeteorScore:
    pairs = _align(cand.terms, ref.terms)
    m = len(pairs)
    if m == 0:
        return MeteorScore(0.0, 0, 0)
    chunks = _count_chunks(pairs)
    precision = m / len(cand.terms)
    recall = m / len(ref.terms)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (chunks / m) ** 3
    return MeteorScore(f_mean * (1.0 - penalty), m, chunks)


def meteor_set(candidate, reference) -> MeteorScore:
    """Set-level METEOR via an exhaustive one-to-one facet assignment.

    The assignment maximizing the summed pairwise METEOR wins (ties resolve
    to the first assignment in canonical enumeration order). The set value
    is the token-count-weighted mean of pairwise scores, where facets left
    unmatched on either side contribute score 0 with their token counts.
    """
    cand = _as_facet_set(candidate, "candidate")
    ref = _as_facet_set(reference, "reference")

    scores = [[_pair_meteor(c, r) for r in ref] for c in cand]

    n_c, n_r = len(cand), len(ref)
    best: tuple[tuple[int, ...], float] | None = None
    if n_c <= n_r:
        for assignment in itertools.permutations(range(n_r), n_c):
            total = sum(scores[ci][ri].value for ci, ri in enumerate(assignment))
            if best is None or total > best[1]:
                best = (assignment, total)
        aligned = [(ci, ri) for ci, ri in enumerate(best[0])]
    else:
        for assignment in itertools.permutations(range(n_c), n_r):
            total = sum(scores[ci][ri].value for ri, ci in enumerate(assignment))
            if best is None or total > best[1]:
                best = (assignment, total)
        aligned = [(ci, ri) for ri, ci in enumerate(best[0])]

    weighted_sum = 0.0
    weight_total = 0.0
    matches = 0
    chunks = 0
    matched_c = {ci for ci, _ in aligned}
    matched_r = {ri for _, ri in aligned}
    for ci, ri in aligned:
        pair = scores[ci][ri]
        weight = len(cand.facets[ci].terms) + len(ref.facets[ri].terms)
        weighted_sum += pair.value * weight
        weight_total += weight
        matches += pair.matches
        chunks += pair.chunks
    for ci, facet in enumerate(cand.facets):
        if ci not in matched_c:
            weight_total += len(facet.terms)
    for ri, facet in enumerate(ref.facets):
        if ri not in matched_r:
            weight_total += len(facet.terms)
    return MeteorScore(weighted_sum / weight_total, matches, chunks)


# --------------------------------------------------------------------------
# Embedding greedy-matching F1
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SemanticScore:
    precision: float
    recall: float
    f1: float


def semantic_f1(candidate, reference, provider: EmbeddingProvider) -> SemanticScore:
    """Greedy max-cosine token matching over pooled facet tokens.

    Precision averages, over candidate tokens, the best cosine against any
    reference token (recall symmetrically); negative best matches count as
    zero so all scores stay in [0, 1]. F1 is the harmonic mean.
    """
    cand = _as_facet_set(candidate, "candidate")
    ref = _as_facet_set(reference, "reference")
    cand_tokens = [t for f in cand for t in f.terms]
    ref_tokens = [t for f in ref for t in f.terms]

    cand_vecs = provider.embed_batch(cand_tokens)
    ref_vecs = provider.embed_batch(ref_tokens)
    sim = cand_vecs @ ref_vecs.T

    # clip: negative best matches count as zero, float drift above 1 is noise
    precision = float(np.mean(np.clip(sim.max(axis=1), 0.0, 1.0)))
    recall = float(np.mean(np.clip(sim.max(axis=0), 0.0, 1.0)))
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return SemanticScore(precision=precision, recall=recall, f1=f1)


# --------------------------------------------------------------------------
# Corpus-level evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PairMetrics:
    query_id: str
    query: str
    m_reference: int
    m_candidate: int
    bleu: SetBleuScore
    meteor: MeteorScore
    semantic: SemanticScore

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "query": self.query,
            "m_reference": self.m_reference,
            "m_candidate": self.m_candidate,
            **{f"bleu{n}": self.bleu.per_n[n] for n in sorted(self.bleu.per_n)},
            "brevity_penalty": self.bleu.brevity_penalty,
            "bertscore_like": self.semantic.f1,
            "semantic_precision": self.semantic.precision,
            "semantic_recall": self.semantic.recall,
            "meteor": self.meteor.value,
        }


@dataclass(frozen=True)
class AggregateRow:
    m: int
    pairs: int
    bleu: dict[int, float]
    bertscore_like: float
    meteor: float


@dataclass(frozen=True)
class MetricReport:
    pairs: list[PairMetrics]
    aggregates: list[AggregateRow]
    unpaired: list[str] = field(default_factory=list)

    def pair_lines(self) -> list[str]:
        return [json.dumps(p.to_dict(), ensure_ascii=False) for p in self.pairs]

    def aggregate_table(self) -> str:
        """Per-M aggregate table: M, bleu1..bleu4, bertscore_like, meteor."""
        header = "M\tbleu1\tbleu2\tbleu3\tbleu4\tbertscore_like\tmeteor"
        rows = [header]
        for agg in self.aggregates:
            cells = [str(agg.m)]
            cells += [f"{agg.bleu.get(n, float('nan')):.4f}" for n in range(1, 5)]
            cells += [f"{agg.bertscore_like:.4f}", f"{agg.meteor:.4f}"]
            rows.append("\t".join(cells))
        return "\n".join(rows) + "\n"


def evaluate_corpus(
    ground_truth: Iterable[ClarificationRecord],
    generated: Iterable[ClarificationRecord],
    provider: EmbeddingProvider,
    max_n: int = 4,
) -> MetricReport:
    """Score generated facet sets against ground truth, paired by query.

    Records sharing a query id pair up in order of appearance; queries
    present on only one side (or surplus records on one side) are listed as
    unpaired and skipped. Aggregates are arithmetic means grouped by the
    reference set size M.
    """
    gt_by_query: dict[str, list[ClarificationRecord]] = {}
    for record in ground_truth:
        gt_by_query.setdefault(record.query.id, []).append(record)
    gen_by_query: dict[str, list[ClarificationRecord]] = {}
    for record in generated:
        gen_by_query.setdefault(record.query.id, []).append(record)

    pairs: list[PairMetrics] = []
    unpaired: list[str] = []
    for qid, gt_records in gt_by_query.items():
        gen_records = gen_by_query.get(qid, [])
        for i, gt_record in enumerate(gt_records):
            if i >= len(gen_records):
                unpaired.append(gt_record.query.text)
                continue
            gen_record = gen_records[i]
            pairs.append(
                PairMetrics(
                    query_id=qid,
                    query=gt_record.query.text,
                    m_reference=gt_record.facets.size,
                    m_candidate=gen_record.facets.size,
                    bleu=set_bleu(gen_record.facets, gt_record.facets, max_n=max_n),
                    meteor=meteor_set(gen_record.facets, gt_record.facets),
                    semantic=semantic_f1(gen_record.facets, gt_record.facets, provider),
                )
            )
    for qid, gen_records in gen_by_query.items():
        matched = len(gt_by_query.get(qid, []))
        unpaired.extend(r.query.text for r in gen_records[matched:])

    by_m: dict[int, list[PairMetrics]] = {}
    for pair in pairs:
        by_m.setdefault(pair.m_reference, []).append(pair)
    aggregates = [
        AggregateRow(
            m=m,
            pairs=len(group),
            bleu={
                n: float(np.mean([p.bleu.per_n[n] for p in group]))
                for n in range(1, max_n + 1)
            },
            bertscore_like=float(np.mean([p.semantic.f1 for p in group])),
            meteor=float(np.mean([p.meteor.value for p in group])),
        )
        for m, group in sorted(by_m.items())
    ]
    return MetricReport(pairs=pairs, aggregates=aggregates, unpaired=unpaired)
