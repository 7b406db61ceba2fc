"""Charges, numerical Poisson brackets and the su(1,1) x su(1,1) checks.

Every phase function here is evaluated classically; the +1/4 ordering term
of the quantum Casimir never appears.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from batemanlab.core import (
    BatemanParams,
    PhaseStateHyp,
    PhaseStateRot,
    PhaseStateXY,
    from_hyperbolic,
    to_hyperbolic,
)
from batemanlab.errors import ChartDomainError, QuadratureError, TurningPointError

FD_SCALE = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class ChargeSet:
    h: float
    c: float
    j1: float
    j2: float
    j3: float


@dataclass(frozen=True)
class BracketReport:
    relation: str
    max_residual: float
    points_tested: int

    def __post_init__(self):
        if self.points_tested < 1:
            raise ValueError("points_tested must be >= 1")

    def as_dict(self) -> dict:
        return {
            "relation": self.relation,
            "max_residual": self.max_residual,
            "points_tested": self.points_tested,
        }


def rot_charge_fields(p: BatemanParams, x1, x2, p1, p2):
    """Return ``(h, c, j1, j2, j3)`` from rotated-frame fields (arrays allowed).

    ``h`` is the rotated-frame Hamiltonian itself, not its 't Hooft form.
    """
    m, om, gam = p.m, p.omega, p.big_gamma
    mo = m * om
    j1 = p1 * p2 / (2 * mo) - 0.5 * mo * x1 * x2
    j2 = 0.5 * (p1 * x2 + p2 * x1)
    j3 = (p1 ** 2 + p2 ** 2) / (4 * mo) + 0.25 * mo * (x1 ** 2 + x2 ** 2)
    c = ((p1 ** 2 - p2 ** 2) + mo ** 2 * (x1 ** 2 - x2 ** 2)) / (4 * mo)
    h = (
        (p1 ** 2 - p2 ** 2) / (2 * m)
        - gam * (p1 * x2 + p2 * x1)
        + 0.5 * m * om ** 2 * (x1 ** 2 - x2 ** 2)
    )
    return h, c, j1, j2, j3


def xy_charge_fields(p: BatemanParams, x, y, p_x, p_y):
    """Same charges written directly in (x, y, p_x, p_y).

    Products of one damped and one amplified variable keep this form well
    conditioned along long trajectories, where the rotated-frame differences
    ``x1**2 - x2**2`` cancel catastrophically.
    """
    m, om, gam = p.m, p.omega, p.big_gamma
    mo = m * om
    j1 = (p_x ** 2 - p_y ** 2) / (4 * mo) - 0.25 * mo * (x ** 2 - y ** 2)
    j2 = 0.5 * (p_x * x - p_y * y)
    j3 = (p_x ** 2 + p_y ** 2) / (4 * mo) + 0.25 * mo * (x ** 2 + y ** 2)
    c = (p_x * p_y + mo ** 2 * x * y) / (2 * mo)
    h = p_x * p_y / m + gam * (y * p_y - x * p_x) + m * om ** 2 * x * y
    return h, c, j1, j2, j3


def charges(p: BatemanParams, s: PhaseStateRot) -> ChargeSet:
    """Energy, Casimir and su(1,1) charges at a rotated-frame point."""
    return ChargeSet(*(float(v) for v in rot_charge_fields(p, s.x1, s.x2, s.p1, s.p2)))


def charges_xy(p: BatemanParams, s: PhaseStateXY) -> ChargeSet:
    return ChargeSet(*(float(v) for v in xy_charge_fields(p, s.x, s.y, s.p_x, s.p_y)))


def charges_hyp(p: BatemanParams, s: PhaseStateHyp) -> ChargeSet:
    """Charges in the hyperbolic chart.

    C and J2 use the compact hyperbolic expressions; J1 and J3 have no short
    form there and are taken through the chart map.
    """
    if s.r == 0:
        raise ChartDomainError("hyperbolic chart is singular at r = 0")
    m, om = p.m, p.omega
    c = (s.p_r ** 2 - s.p_u ** 2 / s.r ** 2 + (m * om * s.r) ** 2) / (4 * om * m)
    j2 = 0.5 * s.p_u
    rot = charges(p, from_hyperbolic(s))
    h = 2.0 * (om * c - p.big_gamma * j2)
    return ChargeSet(h=h, c=c, j1=rot.j1, j2=j2, j3=rot.j3)


def charges_any(p: BatemanParams, s) -> ChargeSet:
    """Dispatch on the chart of ``s``."""
    if isinstance(s, PhaseStateRot):
        return charges(p, s)
    if isinstance(s, PhaseStateXY):
        return charges_xy(p, s)
    if isinstance(s, PhaseStateHyp):
        return charges_hyp(p, s)
    raise TypeError(f"not a phase state: {type(s).__name__}")


# ---------------------------------------------------------------------------
# Finite-difference Poisson brackets

def _flatten(point) -> tuple[np.ndarray, Callable]:
    """Flatten a state (or a tuple of states) to one coordinate vector.

    Returns the vector and a function that rebuilds the original structure.
    Each state contributes (q1, q2, p1, p2).
    """
    if isinstance(point, (tuple, list)):
        types = [type(s) for s in point]
        z = np.concatenate([s.as_array() for s in point])

        def rebuild(v):
            return tuple(t.from_array(v[4 * i:4 * i + 4]) for i, t in enumerate(types))

        return z, rebuild
    return point.as_array(), type(point).from_array


def gradient(f: Callable, point, step: float | None = None) -> np.ndarray:
    """Central-difference gradient of ``f`` at ``point``.

    The default step per coordinate is ``eps**(1/3) * max(1, |z_i|)``.
    """
    z, rebuild = _flatten(point)
    grad = np.empty_like(z)
    for i in range(z.size):
        h = step if step is not None else FD_SCALE * max(1.0, abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        # actual spacing after rounding
        grad[i] = (f(rebuild(zp)) - f(rebuild(zm))) / (zp[i] - zm[i])
    return grad


def bracket_from_gradients(df: np.ndarray, dg: np.ndarray) -> float:
    """Canonical bracket from two gradients in (q1, q2, p1, p2)-per-block order."""
    total = 0.0
    for k in range(0, df.size, 4):
        fq, fp = df[k:k + 2], df[k + 2:k + 4]
        gq, gp = dg[k:k + 2], dg[k + 2:k + 4]
        total += float(fq @ gp - fp @ gq)
    return total


def poisson_bracket(f: Callable, g: Callable, point, step: float | None = None) -> float:
    """Second-order finite-difference estimate of {f, g} at ``point``.

    Args:
        f, g: Phase functions taking the same kind of object as ``point``.
        point: A phase state, or a tuple of states for a composite system.
        step: Fixed difference step; ``None`` selects the scaled default.
    """
    if step is not None and step <= 0:
        raise ValueError("step must be > 0")
    return bracket_from_gradients(gradient(f, point, step), gradient(g, point, step))


def _charge_fn(p: BatemanParams, name: str, index: int | None = None):
    if index is None:
        return lambda s: getattr(charges(p, s), name)
    return lambda s: getattr(charges(p, s[index]), name)


def random_rot_state(rng: np.random.Generator, box: float = 2.0) -> PhaseStateRot:
    return PhaseStateRot(*rng.uniform(-box, box, size=4))


def verify_su11(
    p_a: BatemanParams,
    p_b: BatemanParams,
    n_points: int,
    seed: int | None = 0,
    box: float = 2.0,
    points: Sequence[tuple[PhaseStateRot, PhaseStateRot]] | None = None,
) -> list[BracketReport]:
    """Check the su(1,1) x su(1,1) Poisson relations at random points.

    Points are drawn uniformly from ``[-box, box]**4`` for each subsystem,
    unless ``points`` is given explicitly. Reported relations: the three
    closure relations and {H, J2} = {H, C} = 0 inside each subsystem, and
    all nine cross-subsystem brackets.
    """
    if points is None:
        if n_points < 1:
            raise ValueError("n_points must be >= 1")
        rng = np.random.default_rng(seed)
        points = [(random_rot_state(rng, box), random_rot_state(rng, box)) for _ in range(n_points)]
    else:
        points = list(points)
        if not points:
            raise ValueError("need at least one point")

    names = ("j1", "j2", "j3", "h", "c")
    fns = {}
    for idx, (label, params) in enumerate((("A", p_a), ("B", p_b))):
        for name in names:
            fns[name, label] = _charge_fn(params, name, idx)

    residuals: dict[str, list[float]] = {}

    def record(rel, value):
        residuals.setdefault(rel, []).append(abs(value))

    for pt in points:
        grads = {key: gradient(fn, pt) for key, fn in fns.items()}
        vals = {}
        for idx, (label, params) in enumerate((("A", p_a), ("B", p_b))):
            cs = charges(params, pt[idx])
            for name in names:
                vals[name, label] = getattr(cs, name)

        def br(f, g):
            return bracket_from_gradients(grads[f], grads[g])

        for label in ("A", "B"):
            record(f"{{J2{label},J3{label}}}=J1{label}",
                   br(("j2", label), ("j3", label)) - vals["j1", label])
            record(f"{{J3{label},J1{label}}}=J2{label}",
                   br(("j3", label), ("j1", label)) - vals["j2", label])
            record(f"{{J1{label},J2{label}}}=-J3{label}",
                   br(("j1", label), ("j2", label)) + vals["j3", label])
            record(f"{{H{label},J2{label}}}=0", br(("h", label), ("j2", label)))
            record(f"{{H{label},C{label}}}=0", br(("h", label), ("c", label)))
        for a in (1, 2, 3):
            for b in (1, 2, 3):
                record(f"{{J{a}A,J{b}B}}=0", br((f"j{a}", "A"), (f"j{b}", "B")))

    return [BracketReport(rel, max(vals_), len(vals_)) for rel, vals_ in residuals.items()]


def casimir_residual(cs: ChargeSet) -> float:
    """|C**2 - (J3**2 - J2**2 - J1**2)|."""
    return abs(cs.c ** 2 - (cs.j3 ** 2 - cs.j2 ** 2 - cs.j1 ** 2))


def thooft_residual(p: BatemanParams, cs: ChargeSet) -> float:
    """|H - 2 (Omega C - Gamma J2)|."""
    return abs(cs.h - 2.0 * (p.omega * cs.c - p.big_gamma * cs.j2))


# ---------------------------------------------------------------------------
# Canonical transformation to (q1, q2; C, J2)

def discriminant(p: BatemanParams, c: float, j2: float, z):
    """D(z) = 4 J2**2 + 4 m Omega C z - (m Omega z)**2."""
    mo = p.m * p.omega
    return 4 * j2 ** 2 + 4 * mo * c * z - (mo * z) ** 2


def turning_points(p: BatemanParams, c: float, j2: float) -> tuple[float, float]:
    """Roots ``(z_lo, z_hi)`` of the discriminant in z = r**2.

    ``z_lo <= 0 <= z_hi``, with z_hi > 0 whenever C > 0 or J2 != 0.
    """
    mo = p.m * p.omega
    root = math.hypot(c, j2)
    # (c + root)(c - root) = -j2**2; use it for whichever root cancels
    if c >= 0:
        z_hi = 2.0 * (c + root) / mo
        z_lo = -2.0 * j2 ** 2 / (mo * (c + root)) if z_hi > 0 else 0.0
    else:
        z_lo = 2.0 * (c - root) / mo
        z_hi = 2.0 * j2 ** 2 / (mo * (root - c))
    return z_lo, z_hi


def _theta(z, z_lo, z_hi):
    frac = min(max((z - z_lo) / (z_hi - z_lo), 0.0), 1.0)
    return math.asin(math.sqrt(frac))


def turning_point_integral(
    p: BatemanParams, c: float, j2: float, weight: Callable[[float], float], z_a: float, z_b: float
) -> float:
    """Integral of ``weight(z) / sqrt(D(z))`` from ``z_a`` to ``z_b``.

    Uses z = z_lo + (z_hi - z_lo) sin(theta)**2, under which
    dz / sqrt(D) = 2 dtheta / (m Omega) and the endpoint singularities vanish.
    """
    z_lo, z_hi = turning_points(p, c, j2)
    mo = p.m * p.omega
    span = z_hi - z_lo
    th_a, th_b = _theta(z_a, z_lo, z_hi), _theta(z_b, z_lo, z_hi)
    if th_a == th_b:
        return 0.0

    def integrand(th):
        return weight(z_lo + span * math.sin(th) ** 2)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _err = integrate.quad(integrand, th_a, th_b, epsabs=1e-14, epsrel=1e-13, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return 2.0 * val / mo


def canonical_q(p: BatemanParams, s: PhaseStateHyp) -> tuple[float, float, float, float]:
    """Canonical variables ``(q1, q2, C, J2)`` at a hyperbolic-chart point.

    ``q1`` is measured from the lower root of D and ``q2`` from the upper
    one; both carry the sign of ``r * p_r`` (the branch of p_r). These
    origin choices shift q by branch-wise constants only, which leaves every
    bracket unchanged.

    Raises:
        ChartDomainError: at r == 0.
        TurningPointError: when D(r**2) <= 0, i.e. exactly at a turning point.
        QuadratureError: when quadrature does not converge.
    """
    cs = charges_hyp(p, s)
    c, j2 = cs.c, cs.j2
    z = s.r ** 2
    z_lo, z_hi = turning_points(p, c, j2)
    if not (z_lo < z < z_hi) or discriminant(p, c, j2, z) <= 0:
        raise TurningPointError(
            f"z = r**2 = {z!r} not inside the allowed region ({z_lo!r}, {z_hi!r})"
        )
    branch = math.copysign(1.0, s.r * s.p_r)
    mo = p.m * p.omega
    q1 = branch * turning_point_integral(p, c, j2, lambda _z: mo, z_lo, z)
    q2 = 2.0 * s.u
    if j2 != 0.0:
        q2 -= branch * turning_point_integral(p, c, j2, lambda zz: 2.0 * j2 / zz, z, z_hi)
    return q1, q2, c, j2


def canonical_q_rot(p: BatemanParams, s: PhaseStateRot):
    """``canonical_q`` composed with the rotated -> hyperbolic chart map."""
    return canonical_q(p, to_hyperbolic(s))


def charges_along(p: BatemanParams, states_xy: np.ndarray) -> np.ndarray:
    """Columns (h, c, j1, j2, j3) for an ``(n, 4)`` array of XY states."""
    return np.column_stack(xy_charge_fields(p, *np.asarray(states_xy, dtype=float).T))

