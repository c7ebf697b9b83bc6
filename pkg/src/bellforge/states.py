"""State families for two and three qubits and a pure-state entanglement classifier."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg_core import NORM_ATOL, RANK_THRESHOLD, StateVector, partial_trace_single
from .measurement import parse_angle

PARTIES = "ABC"


def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not (lo - 1e-12 <= value <= hi + 1e-12):
        raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")


def make_ghz(xi: float) -> StateVector:
    """cos(xi)|000> + sin(xi)|111>."""
    _check_range("xi", xi, 0.0, math.pi / 2)
    amps = np.zeros(8, dtype=complex)
    amps[0], amps[7] = math.cos(xi), math.sin(xi)
    return StateVector(amps)


def make_w(beta: float, xi: float) -> StateVector:
    """sin(b)cos(x)|100> + sin(b)sin(x)|010> + cos(b)|001>."""
    _check_range("beta", beta, 0.0, math.pi / 2)
    _check_range("xi", xi, 0.0, math.pi / 2)
    amps = np.zeros(8, dtype=complex)
    amps[4] = math.sin(beta) * math.cos(xi)
    amps[2] = math.sin(beta) * math.sin(xi)
    amps[1] = math.cos(beta)
    return StateVector(amps)


STANDARD_W_BETA = math.atan(math.sqrt(2.0))


def make_standard_w() -> StateVector:
    return make_w(STANDARD_W_BETA, math.pi / 4)


_ACIN_INDICES = (0, 4, 5, 6, 7)


def make_acin(mu, phase: float = 0.0) -> StateVector:
    """Five-parameter canonical form of three-qubit pure states.

    Amplitudes sqrt(mu_0), sqrt(mu_1) e^{i phase}, sqrt(mu_2), sqrt(mu_3),
    sqrt(mu_4) on |000>, |100>, |101>, |110>, |111>.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (5,):
        raise ValueError("mu must have five entries")
    if np.any(mu < 0):
        raise ValueError("mu entries must be non-negative")
    if abs(mu.sum() - 1.0) > NORM_ATOL:
        raise ValueError(f"mu must sum to 1, got {mu.sum()!r}")
    _check_range("phase", phase, 0.0, math.pi)
    amps = np.zeros(8, dtype=complex)
    amps[list(_ACIN_INDICES)] = np.sqrt(mu)
    amps[4] *= complex(math.cos(phase), math.sin(phase))
    return StateVector(amps)


def random_acin_params(rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Uniform draw from the 4-simplex (normalized exponentials) and phase in [0, pi]."""
    e = rng.exponential(size=5)
    mu = e / e.sum()
    return mu, float(rng.uniform(0.0, math.pi))


def make_werner(visibility: float) -> np.ndarray:
    """V |phi+><phi+| + (1 - V) I/4."""
    _check_range("visibility", visibility, 0.0, 1.0)
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    return visibility * np.outer(phi_plus, phi_plus) + (1 - visibility) * np.eye(4) / 4


def make_two_qubit_schmidt(xi: float) -> StateVector:
    _check_range("xi", xi, 0.0, math.pi / 2)
    amps = np.zeros(4, dtype=complex)
    amps[0], amps[3] = math.cos(xi), math.sin(xi)
    return StateVector(amps)


def embed_biseparable(pair_state: StateVector, free: str = "C") -> StateVector:
    """Tensor a two-qubit state with |0> on the ``free`` party.

    The pair occupies the remaining two parties in their natural order.
    """
    if pair_state.num_qubits != 2:
        raise ValueError("pair_state must be a two-qubit state")
    free = free.upper()
    if free not in PARTIES:
        raise ValueError(f"free party must be one of A, B, C, got {free!r}")
    pair = pair_state.tensor()
    out = np.zeros((2, 2, 2), dtype=complex)
    if free == "A":
        out[0, :, :] = pair
    elif free == "B":
        out[:, 0, :] = pair
    else:
        out[:, :, 0] = pair
    return StateVector(out.reshape(-1))


def concurrence_schmidt(xi: float) -> float:
    return abs(math.sin(2 * xi))


def concurrence_pure(state: StateVector) -> float:
    """sqrt(2 (1 - Tr rho_A^2)) for a two-qubit pure state."""
    if state.num_qubits != 2:
        raise ValueError("expected a two-qubit state")
    rho_a = partial_trace_single(state, 0)
    purity = float(np.real(np.trace(rho_a @ rho_a)))
    return math.sqrt(max(0.0, 2 * (1 - purity)))


class Kind(enum.Enum):
    TOTALLY_SEPARABLE = "totally_separable"
    TWO_ENTANGLED = "two_entangled"
    FULLY_ENTANGLED = "fully_entangled"


@dataclass(frozen=True)
class EntanglementClass:
    kind: Kind
    pair: str | None = None  # e.g. "AB" for TWO_ENTANGLED

    def __str__(self):
        if self.kind is Kind.TWO_ENTANGLED:
            return f"TWO_ENTANGLED({self.pair})"
        return self.kind.name

    @property
    def entangled(self) -> bool:
        return self.kind is not Kind.TOTALLY_SEPARABLE


def _min_eigenvalue_2x2(rho: np.ndarray) -> float:
    tr = float(np.real(np.trace(rho)))
    det = float(np.real(np.linalg.det(rho)))
    disc = max(tr * tr - 4 * det, 0.0)
    return (tr - math.sqrt(disc)) / 2


def single_cut_ranks(state: StateVector, threshold: float = RANK_THRESHOLD) -> tuple[int, int, int]:
    """Schmidt rank of each cut X|rest for X = A, B, C."""
    ranks = []
    for party in range(3):
        lam = _min_eigenvalue_2x2(partial_trace_single(state, party))
        ranks.append(1 if lam <= threshold else 2)
    return tuple(ranks)


def classify(state: StateVector) -> EntanglementClass:
    if state.num_qubits != 3:
        raise ValueError("classify expects a three-qubit state")
    ranks = single_cut_ranks(state)
    product_parties = [PARTIES[i] for i, r in enumerate(ranks) if r == 1]
    if len(product_parties) == 3:
        return EntanglementClass(Kind.TOTALLY_SEPARABLE)
    if len(product_parties) == 1:
        pair = "".join(p for p in PARTIES if p != product_parties[0])
        return EntanglementClass(Kind.TWO_ENTANGLED, pair)
    if not product_parties:
        return EntanglementClass(Kind.FULLY_ENTANGLED)
    # two product cuts force the third; only reachable near the threshold
    raise ArithmeticError(f"inconsistent Schmidt ranks {ranks}")


def _parse_kv(body: str) -> dict[str, str]:
    out = {}
    for part in _split_top(body):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip().lower()] = v.strip()
    return out


def _split_top(body: str) -> list[str]:
    # mu takes a list of five floats; accept spaces, ';' or bracketed commas
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        parts.append(cur)
    # re-glue bare comma lists that follow mu=
    glued: list[str] = []
    for p in parts:
        if "=" not in p and glued:
            glued[-1] += "," + p
        else:
            glued.append(p)
    return glued


def _expect_keys(family: str, kv: dict, keys: set[str]) -> None:
    extra, missing = set(kv) - keys, keys - set(kv)
    if extra:
        raise ValueError(f"{family}: unknown keys {sorted(extra)}")
    if missing:
        raise ValueError(f"{family}: missing keys {sorted(missing)}")


def parse_state_spec(spec: str):
    """Build a state from a family string such as ``ghz:xi=pi/4``.

    Grammar: ``ghz:xi=<angle>``, ``w:beta=<angle>,xi=<angle>``,
    ``acin:mu=<5 floats>,phi=<angle>``, ``werner:v=<float>``,
    ``pair:xi=<angle>,free=<A|B|C>``.  Werner states come back as a 4x4
    density matrix, everything else as a :class:`StateVector`.
    """
    family, _, body = spec.strip().partition(":")
    family = family.strip().lower()
    kv = _parse_kv(body) if body.strip() else {}
    if family == "ghz":
        _expect_keys(family, kv, {"xi"})
        return make_ghz(parse_angle(kv["xi"]))
    if family == "w":
        _expect_keys(family, kv, {"beta", "xi"})
        return make_w(parse_angle(kv["beta"]), parse_angle(kv["xi"]))
    if family == "acin":
        _expect_keys(family, kv, {"mu", "phi"})
        raw = kv["mu"].strip("[]() ").replace(";", " ").replace(",", " ").split()
        return make_acin([float(x) for x in raw], parse_angle(kv["phi"]))
    if family == "werner":
        _expect_keys(family, kv, {"v"})
        return make_werner(float(kv["v"]))
    if family == "pair":
        _expect_keys(family, kv, {"xi", "free"})
        return embed_biseparable(make_two_qubit_schmidt(parse_angle(kv["xi"])), kv["free"])
    if family == "schmidt":
        _expect_keys(family, kv, {"xi"})
        return make_two_qubit_schmidt(parse_angle(kv["xi"]))
    raise ValueError(f"unknown state family {family!r}")
