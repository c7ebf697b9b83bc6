"""Small complex linear algebra for 2-, 4- and 8-dimensional quantum objects.

Matrices are plain ``numpy`` arrays.  Pure states are wrapped in
:class:`StateVector`, whose basis index encodes ``|q1 q2 ... qn>`` with the
first party (Alice) as the most significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-12
NORM_ATOL = 1e-12
TRACE_ATOL = 1e-10
RANK_THRESHOLD = 1e-10
ALLOWED_DIMS = (2, 4, 8)


class DimensionError(ValueError):
    """Raised when operand dimensions are incompatible or unsupported."""


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of 2 or 3 qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size not in (4, 8):
            raise DimensionError(f"expected 4 or 8 amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized: sum |amp|^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)

    __hash__ = None

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit."""
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amps / np.linalg.norm(amps))


def _check_square(m: np.ndarray) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"not a square matrix: shape {m.shape}")
    if m.shape[0] not in ALLOWED_DIMS:
        raise DimensionError(f"unsupported dimension {m.shape[0]}")
    return m.shape[0]


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.all(np.abs(m - m.conj().T) <= atol))


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, restricted to results of dimension at most 8."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    da, db = _check_square(a), _check_square(b)
    if da * db > 8:
        raise DimensionError(f"tensor product dimension {da * db} exceeds 8")
    out = np.empty((da * db, da * db), dtype=complex)
    for i in range(da):
        for j in range(da):
            out[i * db:(i + 1) * db, j * db:(j + 1) * db] = a[i, j] * b
    return out


def tensor_all(*mats: np.ndarray) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = tensor(out, m)
    return out


def expectation(state: StateVector, op: np.ndarray) -> float:
    """<psi|op|psi> for Hermitian ``op``."""
    op = np.asarray(op, dtype=complex)
    if _check_square(op) != state.dim:
        raise DimensionError(f"operator dim {op.shape[0]} != state dim {state.dim}")
    if not is_hermitian(op):
        raise ValueError("operator is not Hermitian")
    psi = state.amplitudes
    value = np.vdot(psi, op @ psi)
    if abs(value.imag) > ATOL:
        raise ArithmeticError(f"imaginary residue {value.imag!r} in expectation")
    return float(value.real)


def is_density_matrix(rho: np.ndarray, atol: float = TRACE_ATOL) -> bool:
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        return False
    if abs(np.trace(rho).real - 1.0) > atol:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -atol)


def trace_product(rho: np.ndarray, op: np.ndarray) -> float:
    """Tr(rho op) for a density matrix ``rho`` and Hermitian ``op``."""
    rho = np.asarray(rho, dtype=complex)
    op = np.asarray(op, dtype=complex)
    if _check_square(rho) != _check_square(op):
        raise DimensionError(f"dimension mismatch {rho.shape} vs {op.shape}")
    if not is_hermitian(op):
        raise ValueError("operator is not Hermitian")
    if not is_density_matrix(rho):
        raise ValueError("rho is not a density matrix")
    # Tr(AB) = sum_ij A_ij B_ji
    value = np.sum(rho * op.T)
    if abs(value.imag) > ATOL:
        raise ArithmeticError(f"imaginary residue {value.imag!r} in trace")
    return float(value.real)


def partial_trace_single(state: StateVector, party: int) -> np.ndarray:
    """Reduced 2x2 density matrix of one qubit of a pure state."""
    psi = np.moveaxis(state.tensor(), party, 0).reshape(2, -1)
    return psi @ psi.conj().T
