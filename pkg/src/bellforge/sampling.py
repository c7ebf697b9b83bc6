"""Finite-shot simulation of a Bell test from an exact probability table."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bell_model import BellExpression, ProbabilityTable


@dataclass(frozen=True)
class EmpiricalTable:
    counts: np.ndarray  # same layout as ProbabilityTable.data, integer counts
    shots: np.ndarray   # shots per setting combination, shape (2,)*n

    def __post_init__(self):
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        n = self.counts.ndim // 2
        per_combo = self.counts.reshape((2,) * n + (-1,)).sum(axis=-1)
        if not np.array_equal(per_combo, self.shots):
            raise ValueError("counts do not add up to the shot numbers")

    @property
    def num_parties(self) -> int:
        return self.counts.ndim // 2

    def frequencies(self) -> ProbabilityTable:
        n = self.num_parties
        shots = self.shots.reshape(self.shots.shape + (1,) * n)
        return ProbabilityTable(self.counts / shots)


def sample_table(exact: ProbabilityTable, shots: int, rng: np.random.Generator) -> EmpiricalTable:
    """Draw ``shots`` outcome tuples per setting combination by inverse CDF."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = exact.num_parties
    counts = np.zeros(exact.data.shape, dtype=np.int64)
    for s_idx in itertools.product((0, 1), repeat=n):
        cdf = np.cumsum(exact.data[s_idx].reshape(-1))
        cdf /= cdf[-1]
        draws = np.searchsorted(cdf, rng.random(shots), side="right")
        counts[s_idx] = np.bincount(draws, minlength=2 ** n).reshape((2,) * n)
    return EmpiricalTable(counts, np.full((2,) * n, shots, dtype=np.int64))


def estimate(expr: BellExpression, emp: EmpiricalTable) -> tuple[float, float]:
    """Plug-in Bell value and its standard error.

    Setting combinations are sampled independently; within one combination
    the terms share the same multinomial draw, so the variance is computed
    from the combined outcome weights rather than term by term.
    """
    n = emp.num_parties
    w = expr.weight_tensor()
    freq = emp.frequencies().data
    value, var = 0.0, 0.0
    for s_idx in itertools.product((0, 1), repeat=n):
        ws, fs = w[s_idx].reshape(-1), freq[s_idx].reshape(-1)
        mean = float(ws @ fs)
        value += mean
        var += (float((ws ** 2) @ fs) - mean ** 2) / int(emp.shots[s_idx])
    return value, math.sqrt(max(var, 0.0))
