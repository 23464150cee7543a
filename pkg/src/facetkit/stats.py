"""Pairwise-judgment aggregation and significance testing.

The trinomial test models ties explicitly: under the null of equal
performance the (win, tie, loss) counts are multinomial with tie probability
estimated from the observed tie fraction and the remaining mass split
evenly. The p-value is computed exactly, never by normal approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError, ZeroNError

CHOICE_A = "A"
CHOICE_B = "B"


@dataclass(frozen=True)
class PairwiseCounts:
    """Win/tie/loss tallies for one comparison criterion (n must be >= 1
    before significance testing)."""

    wins_a: int
    ties: int
    wins_b: int
    criterion: str = ""

    def __post_init__(self) -> None:
        if min(self.wins_a, self.ties, self.wins_b) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def n(self) -> int:
        return self.wins_a + self.ties + self.wins_b


@dataclass(frozen=True)
class TrinomialResult:
    n_d: int
    p_value: float
    p0: float


def aggregate_pairwise(
    judgments: Iterable[tuple[str, str]], criterion: str = ""
) -> tuple[PairwiseCounts, list[str]]:
    """Collapse per-annotator choices into win/tie/loss counts.

    ``judgments`` yields ``(task_id, choice)`` with choice "A" or "B". Tasks
    need exactly two judgments: unanimous choices count as a win for that
    side, any disagreement is a tie. Tasks with any other judgment count are
    returned as incomplete and excluded.
    """
    by_task: dict[str, list[str]] = {}
    for task_id, choice in judgments:
        if choice not in (CHOICE_A, CHOICE_B):
            raise ValueError(f"choice must be 'A' or 'B', got {choice!r}")
        by_task.setdefault(task_id, []).append(choice)

    wins_a = ties = wins_b = 0
    incomplete: list[str] = []
    for task_id, choices in by_task.items():
        if len(choices) != 2:
            incomplete.append(task_id)
            continue
        if choices[0] == choices[1]:
            if choices[0] == CHOICE_A:
                wins_a += 1
            else:
                wins_b += 1
        else:
            ties += 1
    return PairwiseCounts(wins_a, ties, wins_b, criterion=criterion), incomplete


def trinomial_pvalue(counts: PairwiseCounts) -> TrinomialResult:
    """Exact two-sided trinomial test on win/tie/loss counts.

    Null model: (W, T, L) ~ multinomial(n; p+, p0, p-) with p0 = ties/n and
    p+ = p- = (1 - p0)/2. The two-sided p-value sums the exact multinomial
    pmf over every outcome with |W - L| >= |wins_a - wins_b|, enumerated in
    O(n^2) with log-factorial arithmetic.
    """
    n = counts.n
    if n < 1:
        raise ZeroNError("trinomial test requires at least one comparison")
    n_d = counts.wins_a - counts.wins_b
    p0 = counts.ties / n
    p_side = (1.0 - p0) / 2.0

    log_p0 = math.log(p0) if p0 > 0 else -math.inf
    log_ps = math.log(p_side) if p_side > 0 else -math.inf
    log_fact = [math.lgamma(k + 1) for k in range(n + 1)]

    threshold = abs(n_d)
    total = 0.0
    for w in range(n + 1):
        for l in range(n + 1 - w):
            if abs(w - l) < threshold:
                continue
            t = n - w - l
            log_term = log_fact[n] - log_fact[w] - log_fact[t] - log_fact[l]
            for count, log_p in ((w, log_ps), (t, log_p0), (l, log_ps)):
                if count > 0:
                    if log_p == -math.inf:
                        log_term = -math.inf
                        break
                    log_term += count * log_p
            if log_term > -math.inf:
                total += math.exp(log_term)
    return TrinomialResult(n_d=n_d, p_value=min(total, 1.0), p0=p0)


def trinomial_from_counts(
    wins_a: int, ties: int, wins_b: int, criterion: str = ""
) -> TrinomialResult:
    return trinomial_pvalue(PairwiseCounts(wins_a, ties, wins_b, criterion=criterion))


@dataclass(frozen=True)
class SubsetComparison:
    mean_a: float
    mean_b: float
    p_value: float


def subset_significance(
    values_a: Sequence[float],
    values_b: Sequence[float],
    permutations: int = 10_000,
    seed: int = 0,
) -> SubsetComparison:
    """Two-sided seeded permutation test on the difference of means.

    p = (1 + #{|perm diff| >= |observed diff|}) / (permutations + 1).
    """
    if len(values_a) == 0 or len(values_b) == 0:
        raise EmptyInputError("both value lists must be non-empty")
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    observed = abs(a.mean() - b.mean())

    pooled = np.concatenate([a, b])
    rng = np.random.default_rng(seed)
    extreme = 0
    for _ in range(permutations):
        shuffled = rng.permutation(pooled)
        diff = abs(shuffled[: len(a)].mean() - shuffled[len(a) :].mean())
        if diff >= observed:
            extreme += 1
    return SubsetComparison(
        mean_a=float(a.mean()),
        mean_b=float(b.mean()),
        p_value=(1 + extreme) / (permutations + 1),
    )


def format_comparison_row(
    counts: PairwiseCounts, result: TrinomialResult, alpha: float = 0.01
) -> str:
    """One comparison-report row: criterion, win/tie/loss percentages,
    p-value, and the significance verdict."""
    n = counts.n
    marker = "+" if result.p_value < alpha else ""
    criterion = counts.criterion or "comparison"
    return (
        f"{criterion}{marker}\t"
        f"{100 * counts.wins_a / n:.1f}%\t"
        f"{100 * counts.ties / n:.1f}%\t"
        f"{100 * counts.wins_b / n:.1f}%\t"
        f"p={result.p_value:.6f}\t"
        f"{'significant' if result.p_value < alpha else 'not significant'} at {alpha}"
    )
