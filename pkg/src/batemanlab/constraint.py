"""Positive/negative Hamiltonian splitting and the information-loss constraints.

Everything acts on classical phase-space values. The local constraint asks
J2 = 0 on each pair separately; the global one asks only that the weighted
sum J = (Gamma_A J2A + Gamma_B J2B) / Gamma vanish, which ties the two pairs
together through an inverse-square interaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from batemanlab.algebra import charges_any
from batemanlab.core import BatemanParams, CompositeParams, PhaseStateHyp
from batemanlab.errors import (
    ChartDomainError,
    DomainError,
    NonPositiveCasimir,
    NonPositiveRho,
    OffSurfaceError,
    ZeroGammaB,
)

SURFACE_TOL = 1e-10


@dataclass(frozen=True)
class SplitResult:
    h_plus: float
    h_minus: float
    rho: float

    @property
    def h(self) -> float:
        return self.h_plus - self.h_minus


@dataclass(frozen=True)
class CompositeCharges:
    c_global: float
    j_global: float
    h_total: float


@dataclass(frozen=True)
class EffectiveFieldReport:
    b_magnitude: float
    mu_coupling: float
    h_int: float
    g_over_4c2: float


def split(h: float, rho: float) -> SplitResult:
    """Write ``h = h_plus - h_minus`` with both parts non-negative.

    h_plus = (rho + h)**2 / (4 rho), h_minus = (rho - h)**2 / (4 rho).
    """
    if not rho > 0:
        raise NonPositiveRho(f"rho must be > 0, got {rho!r}")
    return SplitResult((rho + h) ** 2 / (4 * rho), (rho - h) ** 2 / (4 * rho), rho)


def split_oscillator(p: BatemanParams, s) -> SplitResult:
    """Per-pair splitting with rho = 2 Omega C."""
    cs = charges_any(p, s)
    return split(cs.h, 2.0 * p.omega * cs.c)


def local_ilc_residual(p: BatemanParams, s) -> float:
    """J2 at ``s``; zero exactly on the local physical surface."""
    return charges_any(p, s).j2


def radial_oscillator_energy(p: BatemanParams, s: PhaseStateHyp) -> float:
    """p_r**2/(2m) + m Omega**2 r**2 / 2, the on-surface value of H."""
    return s.p_r ** 2 / (2 * p.m) + 0.5 * p.m * p.omega ** 2 * s.r ** 2


def composite_charges(cp: CompositeParams, s_a, s_b) -> CompositeCharges:
    """Global Casimir, global J and total energy of two pairs.

    Raises:
        NonPositiveCasimir: if either subsystem Casimir is <= 0.
    """
    qa, qb = charges_any(cp.a, s_a), charges_any(cp.b, s_b)
    if qa.c <= 0 or qb.c <= 0:
        raise NonPositiveCasimir(f"need C_A, C_B > 0, got {qa.c!r}, {qb.c!r}")
    c = (cp.a.omega * qa.c + cp.b.omega * qb.c) / cp.omega_global
    j = (cp.a.big_gamma * qa.j2 + cp.b.big_gamma * qb.j2) / cp.gamma_global
    h = 2.0 * cp.omega_global * c - 2.0 * cp.gamma_global * j
    return CompositeCharges(c, j, h)


def global_split(cp: CompositeParams, s_a, s_b) -> SplitResult:
    """Split the total Hamiltonian with rho = 2 Omega C."""
    cc = composite_charges(cp, s_a, s_b)
    return split(cc.h_total, 2.0 * cp.omega_global * cc.c_global)


def _require_gamma_b(cp: CompositeParams) -> float:
    if cp.b.big_gamma == 0:
        raise ZeroGammaB("Gamma_B must be non-zero")
    return cp.a.big_gamma / cp.b.big_gamma


def partner_j2(cp: CompositeParams, j2_a: float) -> float:
    """J2B = -(Gamma_A / Gamma_B) J2A, the value that makes J vanish."""
    return -_require_gamma_b(cp) * j2_a


def sample_global_surface(
    cp: CompositeParams,
    s_a,
    rng: np.random.Generator,
    box: float = 2.0,
    r_min: float = 0.25,
    require_positive_casimir: bool = True,
    max_tries: int = 10_000,
) -> PhaseStateHyp:
    """Draw a B-state completing ``s_a`` onto the global surface J = 0.

    p_uB is fixed by the surface condition; |r_B| in ``[r_min, box]`` with a
    random sign, u_B and p_rB uniform in ``[-box, box]``. With
    ``require_positive_casimir`` draws are rejected until C_B > 0.
    """
    p_u = 2.0 * partner_j2(cp, charges_any(cp.a, s_a).j2)
    for _ in range(max_tries):
        r = rng.uniform(r_min, box) * rng.choice((-1.0, 1.0))
        u, p_r = rng.uniform(-box, box, size=2)
        s_b = PhaseStateHyp(float(r), float(u), float(p_r), p_u)
        if not require_positive_casimir or charges_any(cp.b, s_b).c > 0:
            return s_b
    raise RuntimeError("could not draw a B-state with positive Casimir")


def reduced_hamiltonian(cp: CompositeParams, s_a: PhaseStateHyp, s_b: PhaseStateHyp) -> float:
    """Total energy after eliminating J2B through the global constraint.

    A-part with its inverse-square term, a plain B oscillator, and the induced
    -(2/m_B)(Gamma_A/Gamma_B)**2 J2A**2 / r_B**2 coupling.

    Raises:
        OffSurfaceError: if |J| exceeds the surface tolerance.
        ChartDomainError: if r_A or r_B vanishes.
    """
    if s_a.r == 0 or s_b.r == 0:
        raise ChartDomainError("hyperbolic chart is singular at r = 0")
    ratio = _require_gamma_b(cp)
    qa, qb = charges_any(cp.a, s_a), charges_any(cp.b, s_b)
    j = (cp.a.big_gamma * qa.j2 + cp.b.big_gamma * qb.j2) / cp.gamma_global
    if abs(j) > SURFACE_TOL:
        raise OffSurfaceError(f"|J| = {abs(j)!r} exceeds {SURFACE_TOL}")
    a, b = cp.a, cp.b
    j2a = qa.j2
    part_a = (
        s_a.p_r ** 2 / (2 * a.m)
        - 2 * j2a ** 2 / (a.m * s_a.r ** 2)
        + 0.5 * a.m * a.omega ** 2 * s_a.r ** 2
    )
    part_b = radial_oscillator_energy(b, s_b)
    coupling = -(2.0 / b.m) * ratio ** 2 * j2a ** 2 / s_b.r ** 2
    return part_a + part_b + coupling


def effective_field(cp: CompositeParams, s_b: PhaseStateHyp, j2_a: float) -> EffectiveFieldReport:
    """Reinterpret the induced coupling as a spin-orbit energy in a field.

    With V = log r_B, (1/r_B) dV/dr_B = 1/r_B**2, and the product J_B J_A is
    replaced by -(Gamma_A/Gamma_B) J2A**2 on the constraint surface.
    """
    if s_b.r == 0:
        raise ChartDomainError("effective field needs r_B != 0")
    ratio = _require_gamma_b(cp)
    m_b, gam_b = cp.b.m, cp.b.big_gamma
    radial = (1.0 / s_b.r) * (1.0 / s_b.r)  # (1/r) dV/dr for V = log r
    jb_dot_ja = -ratio * j2_a ** 2
    h_int = (2.0 / m_b) * ratio * radial * jb_dot_ja
    return EffectiveFieldReport(
        b_magnitude=2.0 / (m_b * gam_b) * radial,
        mu_coupling=cp.a.big_gamma,
        h_int=h_int,
        g_over_4c2=ratio,
    )


def coarse_graining_weight(e_plus, e_planck):
    """Energy-running prefactor 1 - exp(-(E_P - E_+)/E_+).

    Zero at the Planck scale and approaching one far below it. Accepts
    floats or ``mpmath.mpf`` values; the latter are evaluated in mpmath at
    the current working precision.

    Raises:
        DomainError: unless 0 < e_plus <= e_planck.
    """
    if not (0 < e_plus <= e_planck):
        raise DomainError(f"need 0 < e_plus <= e_planck, got {e_plus!r}, {e_planck!r}")
    x = -(e_planck - e_plus) / e_plus
    if isinstance(x, float):
        return -math.expm1(x)
    return -mpmath.expm1(x)


def surface_audit(cp: CompositeParams, n_samples: int, seed: int | None = 0, box: float = 2.0) -> dict:
    """Sample the global surface and report the worst constraint residuals."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    max_j = 0.0
    max_dh = 0.0
    for _ in range(n_samples):
        s_a = random_hyp_state(cp.a, rng, box)
        s_b = sample_global_surface(cp, s_a, rng, box)
        cc = composite_charges(cp, s_a, s_b)
        red = reduced_hamiltonian(cp, s_a, s_b)
        max_j = max(max_j, abs(cc.j_global))
        max_dh = max(max_dh, abs(cc.h_total - red))
    return {"samples": n_samples, "max_abs_J": max_j, "max_abs_HT_minus_reduced": max_dh}


def random_hyp_state(
    p: BatemanParams, rng: np.random.Generator, box: float = 2.0, r_min: float = 0.25, max_tries: int = 10_000
) -> PhaseStateHyp:
    """Uniform hyperbolic-chart state with |r| >= r_min and positive Casimir."""
    for _ in range(max_tries):
        r = rng.uniform(r_min, box) * rng.choice((-1.0, 1.0))
        u, p_r, p_u = rng.uniform(-box, box, size=3)
        s = PhaseStateHyp(float(r), float(u), float(p_r), float(p_u))
        if charges_any(p, s).c > 0:
            return s
    raise RuntimeError("could not draw a state with positive Casimir")
