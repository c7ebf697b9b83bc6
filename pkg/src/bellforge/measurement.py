"""Dichotomic projective qubit measurements parameterized by Bloch angles."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg_core import ATOL

_THETA_SLACK = 1e-12


def wrap_phi(phi: float) -> float:
    """Map an azimuth into (-pi, pi]."""
    phi = math.fmod(phi, 2 * math.pi)
    if phi <= -math.pi:
        phi += 2 * math.pi
    elif phi > math.pi:
        phi -= 2 * math.pi
    return phi


def canonical_angles(theta: float, phi: float) -> tuple[float, float]:
    """Reflect theta into [0, pi] (shifting phi by pi if needed) and wrap phi.

    The Bloch vector is unchanged: (-theta, phi) and (theta, phi + pi) name
    the same direction.
    """
    theta = math.fmod(theta, 2 * math.pi)
    if theta < 0:
        theta += 2 * math.pi
    if theta > math.pi:
        theta = 2 * math.pi - theta
        phi += math.pi
    return theta, wrap_phi(phi)


@dataclass(frozen=True)
class MeasurementSetting:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta, phi = float(self.theta), float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise ValueError("measurement angles must be finite")
        if theta < -_THETA_SLACK or theta > math.pi + _THETA_SLACK:
            raise ValueError(f"theta={theta!r} outside [0, pi]")
        object.__setattr__(self, "theta", min(max(theta, 0.0), math.pi))
        object.__setattr__(self, "phi", wrap_phi(phi))

    @classmethod
    def from_any(cls, theta: float, phi: float) -> "MeasurementSetting":
        return cls(*canonical_angles(theta, phi))

    def bloch_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


@dataclass(frozen=True)
class PartySettings:
    """The two alternative observables of one party (setting indices 1 and 2)."""

    setting_1: MeasurementSetting
    setting_2: MeasurementSetting

    def __getitem__(self, index: int) -> MeasurementSetting:
        if index == 1:
            return self.setting_1
        if index == 2:
            return self.setting_2
        raise IndexError(f"setting index must be 1 or 2, got {index}")


def projector(s: MeasurementSetting, outcome: int) -> np.ndarray:
    """(1 + (-1)^m n.sigma) / 2 written out as a 2x2 matrix."""
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    sign = 1.0 if outcome == 0 else -1.0
    c, sn = math.cos(s.theta), math.sin(s.theta)
    off = sign * sn * complex(math.cos(s.phi), -math.sin(s.phi))
    return 0.5 * np.array([[1 + sign * c, off], [off.conjugate(), 1 - sign * c]], dtype=complex)


def completeness_check(s: MeasurementSetting, atol: float = ATOL) -> bool:
    p0, p1 = projector(s, 0), projector(s, 1)
    if np.max(np.abs(p0 + p1 - np.eye(2))) > atol:
        return False
    return all(np.max(np.abs(p @ p - p)) <= atol for p in (p0, p1))


def settings_from_angles(angles, num_parties: int) -> tuple[PartySettings, ...]:
    """Build per-party settings from a flat angle vector.

    Layout: ``[theta_A1, phi_A1, theta_A2, phi_A2, theta_B1, ...]``.
    """
    a = np.asarray(angles, dtype=float).reshape(num_parties, 2, 2)
    return tuple(
        PartySettings(MeasurementSetting.from_any(*a[p, 0]), MeasurementSetting.from_any(*a[p, 1]))
        for p in range(num_parties)
    )


def angles_from_settings(settings) -> np.ndarray:
    return np.array([[[ps[i].theta, ps[i].phi] for i in (1, 2)] for ps in settings]).reshape(-1)


def canonical_angle_vector(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=float).reshape(-1, 2)
    return np.array([canonical_angles(t, p) for t, p in a]).reshape(-1)


_PI_RE = re.compile(
    r"""^(?P<sign>[+-]?)\s*
        (?:(?P<num>\d+)\s*(?:/\s*(?P<den>\d+))?\s*\*\s*)?
        pi
        (?:\s*/\s*(?P<den2>\d+))?$""",
    re.VERBOSE,
)


def parse_angle(text: str) -> float:
    """Parse radians given as a decimal or an exact multiple of pi.

    Accepts ``0.3``, ``pi``, ``pi/4``, ``-5/12*pi``, ``2*pi/3``.
    """
    s = text.strip().lower().replace("π", "pi")
    m = _PI_RE.match(s)
    if m:
        if any(d is not None and int(d) == 0 for d in (m["den"], m["den2"])):
            raise ValueError(f"zero denominator in angle {text!r}")
        frac = Fraction(int(m["num"] or 1), int(m["den"] or 1))
        if m["den2"]:
            frac /= int(m["den2"])
        if m["sign"] == "-":
            frac = -frac
        return float(frac) * math.pi
    try:
        value = float(s)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"angle must be finite: {text!r}")
    return value
