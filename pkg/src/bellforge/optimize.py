"""Maximization of quantum Bell values over measurement angles.

The search is a multi-start Nelder-Mead simplex over the flat angle vector
(see :mod:`bellforge.kernels`); each restart draws its starting point from
its own seeded stream, so results do not depend on execution order.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .bell_model import CompiledObjective, BellExpression, bell1, bell2, bell3, evaluate, quantum_table
from .measurement import MeasurementSetting, PartySettings, canonical_angle_vector
from .states import (
    EntanglementClass,
    Kind,
    classify,
    embed_biseparable,
    make_acin,
    make_ghz,
    make_two_qubit_schmidt,
    make_w,
    make_werner,
    random_acin_params,
)

VIOLATION_MARGIN = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iterations: int = 2000
    tolerance: float = 1e-10  # spread of simplex values at convergence
    seed: int = 0
    angle_tolerance: float = 1e-7
    initial_step: float = 0.6
    polish: bool = True

    def __post_init__(self):
        if self.restarts < 0 or self.max_iterations < 1:
            raise ValueError("restarts must be >= 0 and max_iterations >= 1")
        if self.tolerance <= 0 or self.angle_tolerance <= 0 or self.initial_step <= 0:
            raise ValueError("tolerances and step must be positive")

    def replace(self, **changes) -> "OptimizerConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class OptimizationResult:
    best_value: float
    best_angles: np.ndarray
    restarts_used: int
    converged: bool
    discarded: int = 0
    restart_values: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def random_angles(rng: np.random.Generator, num_parties: int) -> np.ndarray:
    """Uniform theta in [0, pi] and phi in (-pi, pi] for every setting."""
    a = np.empty((num_parties * 2, 2))
    a[:, 0] = rng.uniform(0.0, math.pi, num_parties * 2)
    a[:, 1] = rng.uniform(-math.pi, math.pi, num_parties * 2)
    return a.reshape(-1)


def starting_points(cfg: OptimizerConfig, num_parties: int, stream: Sequence[int] = ()) -> np.ndarray:
    """Fresh starts; restart ``i`` draws from its own stream (seed, *stream, i)."""
    pts = [random_angles(np.random.default_rng([cfg.seed, *stream, i]), num_parties)
           for i in range(cfg.restarts)]
    return np.array(pts).reshape(cfg.restarts, 4 * num_parties)


def maximize_settings(state, expr: BellExpression, cfg: OptimizerConfig = OptimizerConfig(),
                      warm_starts: Sequence[np.ndarray] = (), stream: Sequence[int] = ()) -> OptimizationResult:
    """Multi-start maximization of the Bell value of ``state`` over all angles.

    Each start runs a simplex search followed (optionally) by a second search
    from the converged point with a ten times smaller simplex.  Warm starts
    are tried before the ``cfg.restarts`` fresh random starts.
    """
    objective = CompiledObjective(state, expr)
    n = expr.num_parties
    starts = [np.asarray(w, dtype=float).reshape(-1) for w in warm_starts]
    starts += list(starting_points(cfg, n, stream))
    if not starts:
        raise ValueError("no starting points: restarts=0 and no warm starts")

    values = np.full(len(starts), -np.inf)
    found: list[tuple[np.ndarray, bool]] = []
    for i, x0 in enumerate(starts):
        x, fx, conv, _ = kernels.nelder_mead(x0, cfg.initial_step, cfg.max_iterations, cfg.tolerance,
                                             cfg.angle_tolerance, *objective.args)
        if cfg.polish and np.isfinite(fx):
            xp, fp, conv_p, _ = kernels.nelder_mead(x, cfg.initial_step / 10, cfg.max_iterations,
                                                    cfg.tolerance, cfg.angle_tolerance, *objective.args)
            if fp <= fx:
                x, fx, conv = xp, fp, conv_p
        if np.isfinite(fx):
            values[i] = -fx
        found.append((x, conv))
    finite = np.isfinite(values)
    if not finite.any():
        raise ArithmeticError("objective was non-finite for every restart")
    best = int(np.argmax(values))
    best_x, best_conv = found[best]
    angles = canonical_angle_vector(best_x)
    return OptimizationResult(
        best_value=objective.value(angles),
        best_angles=angles,
        restarts_used=len(starts),
        converged=bool(best_conv),
        discarded=int((~finite).sum()),
        restart_values=values,
    )


# Measurement angles quoted alongside the analytic results.  Theta-dependent
# entries take the free angle(s) as arguments.
def _party(t1, p1, t2, p2) -> PartySettings:
    return PartySettings(MeasurementSetting.from_any(t1, p1), MeasurementSetting.from_any(t2, p2))


def preset_settings(name: str, theta: float = 0.0, phi: float = 0.0) -> tuple[PartySettings, ...]:
    pi = math.pi
    name = name.upper()
    if name == "THM1":
        return (_party(theta, -pi / 3, theta, 2 * pi / 3),
                _party(0, 0, pi / 2, pi / 6),
                _party(0, 0, pi / 2, pi / 6))
    if name == "FIG1":
        return (_party(pi / 2, -5 * pi / 12, pi / 2, pi / 4),
                _party(pi / 2, -5 * pi / 12, pi / 2, pi / 4),
                _party(pi / 2, -pi / 3, pi / 2, pi / 3))
    if name == "THM2":
        return (_party(theta, 2 * pi / 3, theta, -pi / 3),
                _party(0, 0, pi / 2, pi / 3),
                _party(0, 0, pi, 0))
    if name == "BELL3":
        return (_party(theta, pi - phi, theta, -phi),
                _party(0, 0, pi / 2, phi))
    raise ValueError(f"unknown preset {name!r}; choose from THM1, FIG1, THM2, BELL3")


PRESETS: dict[str, tuple[Callable[[], BellExpression], Callable[[float], object]]] = {
    "THM1": (bell1, make_ghz),
    "FIG1": (bell2, make_ghz),
    "THM2": (bell2, lambda xi: embed_biseparable(make_two_qubit_schmidt(xi), "C")),
    "BELL3": (bell3, make_two_qubit_schmidt),
}


def evaluate_preset(preset: str, xi: float, theta: float = 0.0, phi: float = 0.0) -> float:
    """Bell value of the preset's state and expression at its quoted angles."""
    key = preset.upper()
    if key not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}")
    make_expr, make_state = PRESETS[key]
    return evaluate(make_expr(), quantum_table(make_state(xi), preset_settings(key, theta, phi)))


def analytic_theorem1_max(xi: float) -> float:
    return 0.5 + 1.5 * math.sqrt(1 + math.sin(2 * xi) ** 2)


def theorem1_argmax(xi: float) -> float:
    return math.atan(math.sin(2 * xi))


def analytic_theorem2_max(xi: float) -> float:
    return 1.5 * (1 + math.sqrt(1 + math.sin(2 * xi) ** 2))


def theorem2_argmax(xi: float) -> float:
    # the profile carries -cos(theta), so the maximum sits at pi - atan(.)
    return math.pi - math.atan(math.sin(2 * xi))


def analytic_bell3_max(xi: float) -> float:
    return 0.5 * (1 + 3 * math.sqrt(1 + math.sin(2 * xi) ** 2))


def concurrence_from_bmax(b_max: float, slack: float = 1e-9) -> float:
    """Invert B_max = (3/2)(1 + sqrt(1 + C^2)) for a two-entangled pure state."""
    if b_max < 3 - slack:
        raise ValueError(f"b_max={b_max!r} below the local bound 3; no entanglement certified")
    c2 = (2 * b_max / 3 - 1) ** 2 - 1
    c = math.sqrt(max(c2, 0.0))
    if c > 1 + slack:
        raise ValueError(f"b_max={b_max!r} exceeds the two-entangled maximum")
    return min(c, 1.0)


def scan_family(make_state: Callable[[float], object], expr: BellExpression, grid: Sequence[float],
                cfg: OptimizerConfig, stream: Sequence[int] = ()) -> list[tuple[float, OptimizationResult]]:
    """Maximize along a 1-D state family with warm starts from both neighbours.

    A forward sweep uses fresh restarts plus the previous point's optimum;
    a backward sweep then restarts each point from its successor's optimum
    and keeps whichever is better.
    """
    grid = list(grid)
    results: list[OptimizationResult] = []
    prev = None
    for i, p in enumerate(grid):
        warm = [prev.best_angles] if prev is not None else []
        res = maximize_settings(make_state(p), expr, cfg, warm, stream=(*stream, i))
        results.append(res)
        prev = res
    back = cfg.replace(restarts=0)
    for i in range(len(grid) - 2, -1, -1):
        nxt = results[i + 1]
        res = maximize_settings(make_state(grid[i]), expr, back, [nxt.best_angles, results[i].best_angles])
        if res.best_value > results[i].best_value:
            res.restarts_used += results[i].restarts_used
            results[i] = res
    return list(zip(grid, results))


def scan_ghz(expr: BellExpression, xi_grid: Sequence[float], cfg: OptimizerConfig = OptimizerConfig()):
    return scan_family(make_ghz, expr, xi_grid, cfg, stream=(1,))


@dataclass
class WCurve:
    beta: float
    points: list[tuple[float, OptimizationResult]]
    product: list[bool]

    @property
    def values(self) -> np.ndarray:
        return np.array([r.best_value for _, r in self.points])


def scan_w(expr: BellExpression, beta_list: Sequence[float], xi_grid: Sequence[float],
           cfg: OptimizerConfig = OptimizerConfig()) -> list[WCurve]:
    curves = []
    for j, beta in enumerate(beta_list):
        pts = scan_family(lambda xi, b=beta: make_w(b, xi), expr, xi_grid, cfg, stream=(2, j))
        product = [classify(make_w(beta, xi)).kind is Kind.TOTALLY_SEPARABLE for xi in xi_grid]
        curves.append(WCurve(beta, pts, product))
    return curves


@dataclass
class GisinSample:
    index: int
    mu: np.ndarray
    phase: float
    entanglement: EntanglementClass
    value: float
    escalated: bool = False

    @property
    def violated(self) -> bool:
        return self.value > 3 + VIOLATION_MARGIN


@dataclass
class GisinReport:
    samples: list[GisinSample]
    controls: list[GisinSample]
    class_counts: dict[str, int]
    min_margin: float
    failures: list[GisinSample]

    @property
    def ok(self) -> bool:
        return not self.failures


def _control_params():
    xi = math.pi / 12
    return [
        (np.array([1.0, 0, 0, 0, 0]), 0.0),                          # |000>
        (np.array([0.5, 0.5, 0, 0, 0]), 0.0),                        # (|0>+|1>)|00>
        (np.array([0.5, 0, 0, 0.5, 0]), 0.0),                        # pair AB with |0>_C
        (np.array([math.cos(xi) ** 2, 0, 0, 0, math.sin(xi) ** 2]), 0.0),  # GHZ(pi/12)
    ]


def _judge(index, mu, phase, cfg: OptimizerConfig, expr: BellExpression, stream) -> GisinSample:
    state = make_acin(mu, phase)
    cls = classify(state)
    res = maximize_settings(state, expr, cfg, stream=stream)
    sample = GisinSample(index, mu, phase, cls, res.best_value)
    if cls.entangled and not sample.violated:
        res = maximize_settings(state, expr, cfg.replace(restarts=4 * max(cfg.restarts, 1)),
                                [res.best_angles], stream=(*stream, 1))
        sample.value = max(sample.value, res.best_value)
        sample.escalated = True
    return sample


def verify_gisin_sweep(sample_count: int, cfg: OptimizerConfig = OptimizerConfig(restarts=4),
                       include_controls: bool = True) -> GisinReport:
    """Check that random entangled three-qubit pure states all violate bell2.

    States are drawn from the five-parameter canonical family.  Failures are
    collected rather than raised.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    expr = bell2()
    rng = np.random.default_rng([cfg.seed, 3])
    samples = []
    for i in range(sample_count):
        mu, phase = random_acin_params(rng)
        samples.append(_judge(i, mu, phase, cfg, expr, stream=(3, i)))
    controls = []
    if include_controls:
        for j, (mu, phase) in enumerate(_control_params()):
            controls.append(_judge(-1 - j, mu, phase, cfg, expr, stream=(4, j)))
    counts: dict[str, int] = {}
    for s in samples:
        counts[s.entanglement.kind.name] = counts.get(s.entanglement.kind.name, 0) + 1
    failures = [s for s in samples + controls if s.entanglement.entangled != s.violated]
    margins = [s.value - 3 for s in samples if s.entanglement.entangled]
    return GisinReport(samples, controls, counts, min(margins) if margins else math.nan, failures)


class ThresholdOutOfRange(ValueError):
    pass


@dataclass
class WernerThreshold:
    v_max: float
    lower: float
    upper: float
    value_lower: float
    value_upper: float
    classical_bound: float


def werner_threshold(expr: BellExpression, cfg: OptimizerConfig = OptimizerConfig(restarts=8),
                     width: float = 1e-6) -> WernerThreshold:
    """Bisect the visibility at which the optimized value crosses the local bound."""
    if expr.num_parties != 2:
        raise ValueError("Werner threshold needs a two-party expression")
    bound = float(expr.classical_bound)
    warm: list[np.ndarray] = []

    def best(v):
        res = maximize_settings(make_werner(v), expr, cfg, warm[-1:])
        warm.append(res.best_angles)
        return res.best_value

    lo, hi = 0.0, 1.0
    f_lo, f_hi = best(lo), best(hi)
    if not (f_lo <= bound < f_hi):
        raise ThresholdOutOfRange(f"no crossing on [0, 1]: values {f_lo!r}, {f_hi!r} vs bound {bound}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        f_mid = best(mid)
        if f_mid > bound:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return WernerThreshold(0.5 * (lo + hi), lo, hi, f_lo, f_hi, bound)
