"""Local-realistic bounds by exhaustive enumeration of deterministic strategies."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bell_model import BellExpression, ProbabilityTable

# strategy[p] = (outcome for setting 1, outcome for setting 2) of party p
DeterministicStrategy = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LhvResult:
    bound: Fraction
    maximizers: tuple[DeterministicStrategy, ...]
    strategy_count: int

    def __str__(self):
        return f"bound={self.bound}, strategies={self.strategy_count}"


def all_strategies(num_parties: int):
    for bits in itertools.product((0, 1), repeat=2 * num_parties):
        yield tuple((bits[2 * p], bits[2 * p + 1]) for p in range(num_parties))


def strategy_table(strategy: DeterministicStrategy) -> ProbabilityTable:
    n = len(strategy)
    data = np.zeros((2,) * (2 * n))
    for s_idx in itertools.product((0, 1), repeat=n):
        outcomes = tuple(strategy[p][s_idx[p]] for p in range(n))
        data[s_idx + outcomes] = 1.0
    return ProbabilityTable(data)


def strategy_value(expr: BellExpression, strategy: DeterministicStrategy) -> Fraction:
    """Exact Bell value of a deterministic assignment."""
    total = Fraction(0)
    for t in expr.terms:
        outs = sum(strategy[p][s - 1] for p, s in enumerate(t.settings))
        if outs == t.target_sum:
            total += Fraction(t.coefficient)
    return total


def _values(expr: BellExpression):
    if expr.num_parties not in (2, 3):
        raise ValueError("enumeration supports 2 or 3 parties")
    return [(s, strategy_value(expr, s)) for s in all_strategies(expr.num_parties)]


def lhv_bound(expr: BellExpression) -> LhvResult:
    values = _values(expr)
    best = max(v for _, v in values)
    return LhvResult(best, tuple(s for s, v in values if v == best), len(values))


def lhv_min(expr: BellExpression) -> Fraction:
    return min(v for _, v in _values(expr))


def with_lhv_bound(expr: BellExpression) -> BellExpression:
    """Fill in the classical bound of a user expression by enumeration."""
    if expr.classical_bound is not None:
        return expr
    return expr.with_bound(lhv_bound(expr).bound)
