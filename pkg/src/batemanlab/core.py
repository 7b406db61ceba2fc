"""Parameter containers, phase-space states and chart changes.

A Bateman pair has a damped coordinate ``x`` and an amplified partner ``y``.
Three coordinate charts are used for the same 4-dimensional phase space:

* ``XY``  -- the original (x, y, p_x, p_y) variables,
* ``ROT`` -- the rotated frame x1 = (x + y)/sqrt(2), x2 = (x - y)/sqrt(2),
* ``HYP`` -- hyperbolic coordinates x1 = r cosh(u), x2 = r sinh(u).

Units have hbar = 1 throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

import numpy as np

from batemanlab.errors import ChartDomainError

_SQRT2 = math.sqrt(2.0)


class Chart(str, enum.Enum):
    XY = "XY"
    ROT = "ROT"
    HYP = "HYP"


@dataclass(frozen=True)
class BatemanParams:
    """Physical constants of one damped/amplified oscillator pair.

    Args:
        m: Mass, strictly positive.
        gamma: Damping coefficient, non-negative.
        kappa: Spring constant; must satisfy ``kappa > gamma**2 / (4 m)``.

    The derived frequency ``omega`` and damping rate ``big_gamma`` are
    computed once at construction.
    """

    m: float
    gamma: float
    kappa: float
    omega: float = field(init=False)
    big_gamma: float = field(init=False)

    def __post_init__(self):
        for name in ("m", "gamma", "kappa"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.m <= 0:
            raise ValueError(f"m must be > 0, got {self.m!r}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")
        stiffness = self.kappa - self.gamma ** 2 / (4.0 * self.m)
        if stiffness <= 0:
            raise ValueError(
                "overdamped parameters: need kappa > gamma**2/(4 m), got "
                f"kappa={self.kappa!r}, gamma**2/(4 m)={self.gamma ** 2 / (4 * self.m)!r}"
            )
        object.__setattr__(self, "omega", math.sqrt(stiffness / self.m))
        object.__setattr__(self, "big_gamma", self.gamma / (2.0 * self.m))

    @classmethod
    def from_rates(cls, m: float, omega: float, big_gamma: float) -> "BatemanParams":
        """Build parameters from the frequency and damping rate instead."""
        if omega <= 0:
            raise ValueError(f"omega must be > 0, got {omega!r}")
        gamma = 2.0 * m * big_gamma
        kappa = m * (omega ** 2 + big_gamma ** 2)
        return cls(m=m, gamma=gamma, kappa=kappa)

    @property
    def period(self) -> float:
        """Characteristic period 2 pi / omega."""
        return 2.0 * math.pi / self.omega


def _check_finite(state):
    for f in fields(state):
        value = getattr(state, f.name)
        if not math.isfinite(value):
            raise ValueError(f"{type(state).__name__}.{f.name} is not finite: {value!r}")


class _State:
    """Shared array conversion for the phase-state dataclasses."""

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class PhaseStateXY(_State):
    x: float
    y: float
    p_x: float
    p_y: float

    def __post_init__(self):
        _check_finite(self)


@dataclass(frozen=True)
class PhaseStateRot(_State):
    x1: float
    x2: float
    p1: float
    p2: float

    def __post_init__(self):
        _check_finite(self)


@dataclass(frozen=True)
class PhaseStateHyp(_State):
    """Hyperbolic-chart state. ``r`` is signed; ``r == 0`` is singular.

    The constructor does not reject ``r == 0`` because the same type also
    carries time derivatives; operations that need ``r != 0`` check it.
    """

    r: float
    u: float
    p_r: float
    p_u: float

    def __post_init__(self):
        _check_finite(self)


CHART_TYPES = {Chart.XY: PhaseStateXY, Chart.ROT: PhaseStateRot, Chart.HYP: PhaseStateHyp}


@dataclass(frozen=True)
class CompositeParams:
    """Two Bateman pairs plus the global normalizations.

    ``omega_global`` and ``gamma_global`` default to the arithmetic means of
    the subsystem values; any positive numbers are accepted.
    """

    a: BatemanParams
    b: BatemanParams
    omega_global: float | None = None
    gamma_global: float | None = None

    def __post_init__(self):
        if self.omega_global is None:
            object.__setattr__(self, "omega_global", 0.5 * (self.a.omega + self.b.omega))
        if self.gamma_global is None:
            object.__setattr__(
                self, "gamma_global", 0.5 * (self.a.big_gamma + self.b.big_gamma)
            )
        if not self.omega_global > 0:
            raise ValueError(f"omega_global must be > 0, got {self.omega_global!r}")
        if not self.gamma_global > 0:
            raise ValueError(f"gamma_global must be > 0, got {self.gamma_global!r}")

    @property
    def gamma_ratio(self) -> float:
        """Gamma_A / Gamma_B (raises ZeroDivisionError when Gamma_B == 0)."""
        return self.a.big_gamma / self.b.big_gamma


# Field-wise chart maps. They accept scalars or numpy arrays.

def xy_to_rot_fields(x, y, p_x, p_y):
    return (
        (x + y) / _SQRT2,
        (x - y) / _SQRT2,
        (p_x + p_y) / _SQRT2,
        (p_x - p_y) / _SQRT2,
    )


def rot_to_xy_fields(x1, x2, p1, p2):
    # the rotation is an involution
    return xy_to_rot_fields(x1, x2, p1, p2)


def rot_to_hyp_fields(x1, x2, p1, p2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(np.abs(x1) <= np.abs(x2)):
        raise ChartDomainError("hyperbolic chart needs x1**2 > x2**2")
    r = np.sign(x1) * np.sqrt((x1 - x2) * (x1 + x2))
    u = np.arctanh(x2 / x1)
    ch, sh = np.cosh(u), np.sinh(u)
    p_r = p1 * ch + p2 * sh
    p_u = r * (p1 * sh + p2 * ch)
    return r, u, p_r, p_u


def hyp_to_rot_fields(r, u, p_r, p_u):
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise ChartDomainError("hyperbolic chart is singular at r = 0")
    ch, sh = np.cosh(u), np.sinh(u)
    return r * ch, r * sh, ch * p_r - sh * p_u / r, -sh * p_r + ch * p_u / r


def _scalar(values):
    return tuple(float(v) for v in values)


def to_rotated(s: PhaseStateXY) -> PhaseStateRot:
    return PhaseStateRot(*_scalar(xy_to_rot_fields(s.x, s.y, s.p_x, s.p_y)))


def from_rotated(s: PhaseStateRot) -> PhaseStateXY:
    return PhaseStateXY(*_scalar(rot_to_xy_fields(s.x1, s.x2, s.p1, s.p2)))


def to_hyperbolic(s: PhaseStateRot) -> PhaseStateHyp:
    """Map a rotated-frame state into the hyperbolic chart.

    Raises:
        ChartDomainError: if ``x1**2 <= x2**2``.
    """
    return PhaseStateHyp(*_scalar(rot_to_hyp_fields(s.x1, s.x2, s.p1, s.p2)))


def from_hyperbolic(s: PhaseStateHyp) -> PhaseStateRot:
    return PhaseStateRot(*_scalar(hyp_to_rot_fields(s.r, s.u, s.p_r, s.p_u)))


def as_rotated(s) -> PhaseStateRot:
    """Return ``s`` expressed in the rotated chart, whatever chart it is in."""
    if isinstance(s, PhaseStateRot):
        return s
    if isinstance(s, PhaseStateXY):
        return to_rotated(s)
    if isinstance(s, PhaseStateHyp):
        return from_hyperbolic(s)
    raise TypeError(f"not a phase state: {type(s).__name__}")


def chart_of(s) -> Chart:
    for chart, cls in CHART_TYPES.items():
        if isinstance(s, cls):
            return chart
    raise TypeError(f"not a phase state: {type(s).__name__}")


def convert_array(values: np.ndarray, source: Chart, target: Chart) -> np.ndarray:
    """Convert an ``(n, 4)`` array of states between charts."""
    source, target = Chart(source), Chart(target)
    cols = tuple(np.asarray(values, dtype=float).T)
    if source == target:
        return np.array(values, dtype=float)
    if source == Chart.HYP:
        cols = hyp_to_rot_fields(*cols)
    elif source == Chart.XY:
        cols = xy_to_rot_fields(*cols)
    if target == Chart.HYP:
        cols = rot_to_hyp_fields(*cols)
    elif target == Chart.XY:
        cols = rot_to_xy_fields(*cols)
    return np.column_stack(cols)
