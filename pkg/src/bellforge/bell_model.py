"""Probability-based Bell expressions and quantum probability tables.

A :class:`ProbabilityTable` stores ``P(outcomes | settings)`` as an array of
shape ``(2,)*n + (2,)*n``: the first ``n`` axes select each party's setting
(axis value 0 is setting 1, value 1 is setting 2), the last ``n`` axes the
outcome bits.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .linalg_core import StateVector, expectation, tensor_all, trace_product
from .measurement import PartySettings, projector

NEGATIVE_TOL = 1e-12
SUM_TOL = 1e-10


class NumericalViolation(ArithmeticError):
    """A computed probability table broke positivity or normalization."""


class ProbabilityTable:
    def __init__(self, data, check: bool = True):
        data = np.array(data, dtype=float)
        n2 = data.ndim
        if n2 not in (4, 6) or data.shape != (2,) * n2:
            raise ValueError(f"bad table shape {data.shape}")
        if check:
            if data.min() < -NEGATIVE_TOL:
                raise NumericalViolation(f"negative probability {data.min()!r}")
            sums = data.reshape((2,) * (n2 // 2) + (-1,)).sum(axis=-1)
            if np.max(np.abs(sums - 1.0)) > SUM_TOL:
                raise NumericalViolation(f"distribution sums deviate from 1 by {np.max(np.abs(sums - 1))!r}")
            data = np.clip(data, 0.0, 1.0)
        data.setflags(write=False)
        self.data = data

    @property
    def num_parties(self) -> int:
        return self.data.ndim // 2

    def distribution(self, settings: Sequence[int]) -> np.ndarray:
        """Joint outcome distribution for 1-based setting indices."""
        return self.data[tuple(s - 1 for s in settings)]

    def prob(self, settings: Sequence[int], outcomes: Sequence[int]) -> float:
        return float(self.distribution(settings)[tuple(outcomes)])

    def marginal(self, party: int, settings: Sequence[int]) -> np.ndarray:
        dist = self.distribution(settings)
        axes = tuple(i for i in range(self.num_parties) if i != party)
        return dist.sum(axis=axes)

    @staticmethod
    def mix(tables: Sequence["ProbabilityTable"], weights: Sequence[float]) -> "ProbabilityTable":
        data = sum(w * t.data for w, t in zip(weights, tables))
        return ProbabilityTable(data)


@dataclass(frozen=True, order=True)
class OutcomeSumTerm:
    """``coefficient * P(x_{s_1} + y_{s_2} + ... = target_sum)``."""

    settings: tuple[int, ...]
    target_sum: int
    coefficient: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(int(s) for s in self.settings))
        if any(s not in (1, 2) for s in self.settings):
            raise ValueError(f"setting indices must be 1 or 2: {self.settings}")
        if not 0 <= self.target_sum <= len(self.settings):
            raise ValueError(f"target sum {self.target_sum} out of range for {len(self.settings)} parties")

    @property
    def key(self) -> tuple[tuple[int, ...], int]:
        return self.settings, self.target_sum

    def __str__(self):
        c = self.coefficient
        coeff = f"{int(c):+d}" if float(c).is_integer() else f"{c:+g}"
        return f"{coeff} * P({''.join(map(str, self.settings))} : sum={self.target_sum})"


@dataclass(frozen=True)
class BellExpression:
    num_parties: int
    terms: tuple[OutcomeSumTerm, ...]
    classical_bound: float | None = None
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.num_parties not in (2, 3):
            raise ValueError("only 2 or 3 parties are supported")
        merged: dict = {}
        for t in self.terms:
            if len(t.settings) != self.num_parties:
                raise ValueError(f"term {t} does not match {self.num_parties} parties")
            merged[t.key] = merged.get(t.key, 0.0) + t.coefficient
        terms = tuple(sorted(OutcomeSumTerm(s, r, c) for (s, r), c in merged.items() if c != 0))
        if not terms:
            raise ValueError("expression has no terms")
        object.__setattr__(self, "terms", terms)

    def coefficient(self, settings: Sequence[int], target_sum: int) -> float:
        for t in self.terms:
            if t.key == (tuple(settings), target_sum):
                return t.coefficient
        return 0.0

    def with_bound(self, bound) -> "BellExpression":
        return BellExpression(self.num_parties, self.terms, bound, self.name)

    def negated(self) -> "BellExpression":
        return BellExpression(self.num_parties, tuple(OutcomeSumTerm(t.settings, t.target_sum, -t.coefficient)
                                                       for t in self.terms), None, f"-{self.name}")

    def weight_tensor(self) -> np.ndarray:
        """Weights W with evaluate(expr, T) == sum(W * T.data)."""
        n = self.num_parties
        w = np.zeros((2,) * (2 * n))
        for t in self.terms:
            s_idx = tuple(s - 1 for s in t.settings)
            for outcomes in itertools.product((0, 1), repeat=n):
                if sum(outcomes) == t.target_sum:
                    w[s_idx + outcomes] += t.coefficient
        return w

    def to_text(self) -> str:
        return "\n".join(str(t) for t in self.terms) + "\n"


def same_terms(a: BellExpression, b: BellExpression) -> bool:
    return a.num_parties == b.num_parties and a.terms == b.terms


def first_difference(a: BellExpression, b: BellExpression) -> str | None:
    """Describe the first term where two expressions disagree, or None."""
    if a.num_parties != b.num_parties:
        return f"party count {a.num_parties} != {b.num_parties}"
    keys = sorted({t.key for t in a.terms} | {t.key for t in b.terms})
    for settings, r in keys:
        ca, cb = a.coefficient(settings, r), b.coefficient(settings, r)
        if ca != cb:
            label = f"P({''.join(map(str, settings))} : sum={r})"
            return f"{label}: {ca:+g} vs {cb:+g}"
    if a.classical_bound != b.classical_bound:
        return f"classical bound {a.classical_bound} vs {b.classical_bound}"
    return None


def permute_parties(expr: BellExpression, perm: Sequence[int]) -> BellExpression:
    """Relabel parties so that new party i plays the role of old party perm[i]."""
    terms = tuple(OutcomeSumTerm(tuple(t.settings[p] for p in perm), t.target_sum, t.coefficient)
                  for t in expr.terms)
    return BellExpression(expr.num_parties, terms, expr.classical_bound, expr.name)


def _terms(spec: Iterable[tuple[str, int, float]]) -> tuple[OutcomeSumTerm, ...]:
    return tuple(OutcomeSumTerm(tuple(int(ch) for ch in s), r, c) for s, r, c in spec)


def bell1() -> BellExpression:
    """Ten-term three-party inequality, local bound 2."""
    return BellExpression(3, _terms([
        ("111", 0, 1), ("111", 3, 1), ("122", 2, 1),
        ("211", 0, 1), ("211", 3, 1), ("222", 1, 1),
        ("111", 1, -1), ("122", 1, -1),
        ("211", 2, -1), ("222", 2, -1),
    ]), 2, "bell1")


def bell2() -> BellExpression:
    """Permutation-symmetric three-party inequality using all settings, local bound 3."""
    return BellExpression(3, _terms([
        ("111", 1, 1), ("222", 1, 2),
        ("122", 2, 1), ("212", 2, 1), ("221", 2, 1),
        ("112", 0, -1), ("121", 0, -1), ("211", 0, -1),
        ("112", 3, -1), ("121", 3, -1), ("211", 3, -1),
    ]), 3, "bell2")


def bell3() -> BellExpression:
    """Two-party probability form of CHSH, local bound 2."""
    return BellExpression(2, _terms([
        ("11", 1, 1), ("12", 1, 1), ("21", 1, 1), ("22", 0, 1),
        ("11", 2, -1), ("12", 0, -1), ("21", 0, -1), ("22", 1, -1),
    ]), 2, "bell3")


BUILTIN = {"bell1": bell1, "bell2": bell2, "bell3": bell3}


def builtin_expression(name: str) -> BellExpression:
    try:
        return BUILTIN[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown expression {name!r}; choose from {sorted(BUILTIN)}") from None


_TERM_RE = re.compile(
    r"^(?:(?P<coeff>[+-]?\s*(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*\*\s*|(?P<sign>[+-])\s*)?"
    r"P\(\s*(?P<settings>[12]{2,3})\s*:\s*sum\s*=\s*(?P<r>\d+)\s*\)$"
)


def parse_expression(text: str, classical_bound=None, name: str = "custom") -> BellExpression:
    """Parse the one-term-per-line text format, e.g. ``+2 * P(222 : sum=1)``.

    Blank lines and ``#`` comments are ignored.
    """
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _TERM_RE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: cannot parse term {raw!r}")
        if m["coeff"] is not None:
            coeff = float(m["coeff"].replace(" ", ""))
        else:
            coeff = -1.0 if m["sign"] == "-" else 1.0
        terms.append(OutcomeSumTerm(tuple(int(c) for c in m["settings"]), int(m["r"]), coeff))
    if not terms:
        raise ValueError("no terms found")
    n = {len(t.settings) for t in terms}
    if len(n) != 1:
        raise ValueError("terms disagree on the number of parties")
    return BellExpression(n.pop(), tuple(terms), classical_bound, name)


def sum_probability(table: ProbabilityTable, term: OutcomeSumTerm) -> float:
    """Probability that the outcome bits at ``term.settings`` add up to ``term.target_sum``."""
    n = table.num_parties
    if len(term.settings) != n:
        raise ValueError("term/table party mismatch")
    dist = table.distribution(term.settings)
    return float(sum(dist[o] for o in itertools.product((0, 1), repeat=n) if sum(o) == term.target_sum))


def evaluate(expr: BellExpression, table: ProbabilityTable) -> float:
    if expr.num_parties != table.num_parties:
        raise ValueError(f"expression has {expr.num_parties} parties, table {table.num_parties}")
    return float(sum(t.coefficient * sum_probability(table, t) for t in expr.terms))


def _num_parties_of(state) -> int:
    if isinstance(state, StateVector):
        return state.num_qubits
    dim = np.asarray(state).shape[0]
    return {4: 2, 8: 3}[dim]


def quantum_table(state, settings: Sequence[PartySettings]) -> ProbabilityTable:
    """Born-rule table: <psi| P_a (x) P_b (x) P_c |psi> (or Tr(rho ...)) entry by entry."""
    n = len(settings)
    if _num_parties_of(state) != n:
        raise ValueError(f"state has {_num_parties_of(state)} qubits but {n} parties were given")
    pure = isinstance(state, StateVector)
    projs = [[[projector(ps[s], m) for m in (0, 1)] for s in (1, 2)] for ps in settings]
    data = np.empty((2,) * (2 * n))
    for s_idx in itertools.product((0, 1), repeat=n):
        for outcomes in itertools.product((0, 1), repeat=n):
            op = tensor_all(*(projs[p][s_idx[p]][outcomes[p]] for p in range(n)))
            data[s_idx + outcomes] = expectation(state, op) if pure else trace_product(state, op)
    return ProbabilityTable(data)


def _angles_of(settings: Sequence[PartySettings]) -> np.ndarray:
    # (party, setting, [theta, phi])
    return np.array([[[ps[i].theta, ps[i].phi] for i in (1, 2)] for ps in settings])


def ghz_table_closed_form(xi: float, settings: Sequence[PartySettings]) -> ProbabilityTable:
    """Closed-form Born probabilities for cos(xi)|000> + sin(xi)|111>."""
    if len(settings) != 3:
        raise ValueError("GHZ closed form needs three parties")
    ang = _angles_of(settings)
    c2, s2, s2x = math.cos(xi) ** 2, math.sin(xi) ** 2, math.sin(2 * xi)
    data = np.empty((2,) * 6)
    for s in itertools.product((0, 1), repeat=3):
        th = [ang[p, s[p], 0] for p in range(3)]
        ph = [ang[p, s[p], 1] for p in range(3)]
        for m in itertools.product((0, 1), repeat=3):
            sg = [(-1) ** x for x in m]
            up = dn = 1.0
            for p in range(3):
                up *= 1 + sg[p] * math.cos(th[p])
                dn *= 1 - sg[p] * math.cos(th[p])
            cross = sg[0] * sg[1] * sg[2] * math.sin(th[0]) * math.sin(th[1]) * math.sin(th[2]) * math.cos(sum(ph))
            data[s + m] = (c2 * up + s2 * dn + s2x * cross) / 8
    return ProbabilityTable(data)


def two_qubit_table_closed_form(xi: float, settings: Sequence[PartySettings]) -> ProbabilityTable:
    """Closed-form Born probabilities for cos(xi)|00> + sin(xi)|11>."""
    if len(settings) != 2:
        raise ValueError("two-qubit closed form needs two parties")
    ang = _angles_of(settings)
    c2, s2, s2x = math.cos(xi) ** 2, math.sin(xi) ** 2, math.sin(2 * xi)
    data = np.empty((2,) * 4)
    for s in itertools.product((0, 1), repeat=2):
        (ta, pa), (tb, pb) = ang[0, s[0]], ang[1, s[1]]
        for m, k in itertools.product((0, 1), repeat=2):
            sa, sb = (-1) ** m, (-1) ** k
            data[s + (m, k)] = (c2 * (1 + sa * math.cos(ta)) * (1 + sb * math.cos(tb))
                                + s2 * (1 - sa * math.cos(ta)) * (1 - sb * math.cos(tb))
                                + s2x * sa * sb * math.sin(ta) * math.sin(tb) * math.cos(pa + pb)) / 4
    return ProbabilityTable(data)


class CompiledObjective:
    """Bell value of a fixed state as a fast function of the flat angle vector.

    Mixed states enter through their eigen-decomposition, so the compiled
    contraction always runs over pure components.
    """

    def __init__(self, state, expr: BellExpression):
        n = expr.num_parties
        if _num_parties_of(state) != n:
            raise ValueError("state/expression party mismatch")
        self.num_parties = n
        self.dim = 4 * n
        if isinstance(state, StateVector):
            self.comp_weights = np.ones(1)
            self.comps = state.amplitudes.reshape(1, -1).copy()
        else:
            lam, vecs = np.linalg.eigh(np.asarray(state, dtype=complex))
            keep = lam > 1e-15
            self.comp_weights = lam[keep].copy()
            self.comps = np.ascontiguousarray(vecs[:, keep].T)
        # kernel layout: (s_1, m_1, s_2, m_2, ...)
        order = [ax for p in range(n) for ax in (p, n + p)]
        self.weights = np.ascontiguousarray(np.transpose(expr.weight_tensor(), order).reshape(-1))

    @property
    def args(self):
        return self.comps, self.comp_weights, self.weights, self.num_parties

    def value(self, angles) -> float:
        return float(kernels.bell_value(np.asarray(angles, dtype=float), *self.args))

    def table(self, angles) -> ProbabilityTable:
        n = self.num_parties
        p = kernels.probabilities(np.asarray(angles, dtype=float), self.comps, self.comp_weights, n)
        p = p.reshape((2,) * (2 * n))
        order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        return ProbabilityTable(np.transpose(p, order))


def substitute_deterministic_party(expr: BellExpression, party: int, outcomes: tuple[int, int]):
    """Fix one party's outcome for each of its settings and drop that party.

    Returns ``(terms, dropped)``: the surviving two-party terms and the
    terms whose shifted target sum became impossible.
    """
    kept, dropped = [], []
    n_left = expr.num_parties - 1
    for t in expr.terms:
        fixed = outcomes[t.settings[party] - 1]
        r = t.target_sum - fixed
        settings = tuple(s for i, s in enumerate(t.settings) if i != party)
        if 0 <= r <= n_left:
            kept.append(OutcomeSumTerm(settings, r, t.coefficient))
        else:
            dropped.append((settings, r, t.coefficient))
    return kept, dropped


def apply_normalization(terms: Sequence[OutcomeSumTerm], bound: float, num_parties: int = 2):
    """Rewrite c0 P(sum=0) + c2 P(sum=2) using P(0) + P(2) = 1 - P(1).

    Only applies to two-party setting pairs where both even sums carry
    coefficients of the same sign; the common part moves into the bound.
    """
    if num_parties != 2:
        raise ValueError("normalization rewrite is defined for two parties")
    coeffs: dict = {}
    for t in terms:
        coeffs[t.key] = coeffs.get(t.key, 0.0) + t.coefficient
    for settings in itertools.product((1, 2), repeat=2):
        c0, c2 = coeffs.get((settings, 0), 0.0), coeffs.get((settings, 2), 0.0)
        if c0 == 0 or c2 == 0 or (c0 > 0) != (c2 > 0):
            continue
        k = c0 if abs(c0) < abs(c2) else c2
        coeffs[(settings, 0)] = c0 - k
        coeffs[(settings, 2)] = c2 - k
        coeffs[(settings, 1)] = coeffs.get((settings, 1), 0.0) - k
        bound -= k
    out = tuple(OutcomeSumTerm(s, r, c) for (s, r), c in coeffs.items() if c != 0)
    return out, bound


def reduce_bell2_to_bell3() -> BellExpression:
    """Fix Charlie to c1 = 0, c2 = 1 in bell2 and simplify to a two-party inequality."""
    source = bell2()
    kept, _dropped = substitute_deterministic_party(source, party=2, outcomes=(0, 1))
    terms, bound = apply_normalization(kept, source.classical_bound)
    return BellExpression(2, terms, bound, "reduced_bell2")


def chsh_rescale(b_value: float) -> float:
    """Map a bell3 value onto the CHSH scale: (4/3)(B - 1/2)."""
    return 4.0 / 3.0 * (b_value - 0.5)


def embedding_agreement(samples: int = 50, seed: int = 0) -> float:
    """Largest deviation between bell2 on psi_AB (x) |0>_C and bell3 on psi_AB.

    Charlie measures theta = 0 for setting 1 and theta = pi for setting 2, so
    his outcomes are c1 = 0 and c2 = 1 with certainty.  The normalization
    rewrite moves a constant into the bound, so bell2 is compared after
    subtracting the bound difference (3 - 2).
    """
    from .measurement import MeasurementSetting, settings_from_angles
    from .states import embed_biseparable

    shift = float(bell2().classical_bound - bell3().classical_bound)
    worst = 0.0
    for i in range(samples):
        rng = np.random.default_rng([seed, 5, i])
        pair = StateVector.normalized(rng.normal(size=4) + 1j * rng.normal(size=4))
        ab = settings_from_angles(rng.uniform(-math.pi, math.pi, 8), 2)
        charlie = PartySettings(MeasurementSetting(0.0, rng.uniform(-math.pi, math.pi)),
                                MeasurementSetting(math.pi, rng.uniform(-math.pi, math.pi)))
        b2 = evaluate(bell2(), quantum_table(embed_biseparable(pair, "C"), ab + (charlie,)))
        b3 = evaluate(bell3(), quantum_table(pair, ab))
        worst = max(worst, abs(b2 - shift - b3))
    return worst
