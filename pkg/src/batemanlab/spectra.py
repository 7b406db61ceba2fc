"""Emergent quantum spectra and a finite-difference radial eigensolver.

The isotonic oscillator

    H = N**2 p**2 / 2 + Q**2 r**2 / 2 + (R**2 - N**2/4) / (2 r**2)

has levels E(n, -/+) = Q N (2n -/+ R/N + 1). For R/N <= 1/2 the inverse
square term is attractive and both branches occur; for R/N > 1/2 it is
repulsive, the motion is confined to r > 0 and only "+" survives.

``solve_radial`` is an independent check of the "+" branch: it discretizes
the half-line problem with central differences and extracts eigenvalues by
Sturm-sequence multisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from batemanlab.core import CompositeParams
from batemanlab.errors import DomainError, GridTooCoarse, RadicalDomainError, ZeroGammaB

ATTRACTIVE = "attractive_both_branches"
REPULSIVE = "repulsive_plus_only"
VALID = "valid"

MINUS, PLUS, NONE = "minus", "plus", "none"


@dataclass(frozen=True)
class IsotonicParams:
    n_coef: float
    q_coef: float
    r_coef: float

    def __post_init__(self):
        if not (self.n_coef > 0 and self.q_coef > 0):
            raise DomainError("N and Q must be > 0")
        if not self.r_coef >= 0:
            raise DomainError("R must be >= 0")

    @property
    def ratio(self) -> float:
        """R / N."""
        return self.r_coef / self.n_coef

    @property
    def barrier(self) -> float:
        """Coefficient of 1/(2 r**2): R**2 - N**2/4."""
        return self.r_coef ** 2 - 0.25 * self.n_coef ** 2


@dataclass(frozen=True)
class Level:
    n: int | tuple[int, int]
    branch: str
    energy: float


@dataclass
class SpectrumResult:
    levels: list[Level]
    validity: str
    warnings: list[str] = field(default_factory=list)

    def energies(self, branch: str | None = None) -> list[float]:
        return [lv.energy for lv in self.levels if branch is None or lv.branch == branch]

    def union(self) -> list[float]:
        """All energies, merged across branches and sorted."""
        return sorted(self.energies())

    @property
    def two_dimensional(self) -> bool:
        return bool(self.levels) and isinstance(self.levels[0].n, tuple)

    def rows(self) -> tuple[list[str], list[list]]:
        """Header and rows for CSV export."""
        if self.two_dimensional:
            header = ["n_a", "n_b", "branch", "energy", "validity"]
            rows = [[lv.n[0], lv.n[1], lv.branch, lv.energy, self.validity] for lv in self.levels]
        else:
            header = ["n", "branch", "energy", "validity"]
            rows = [[lv.n, lv.branch, lv.energy, self.validity] for lv in self.levels]
        return header, rows

    def as_dict(self) -> dict:
        return {
            "validity": self.validity,
            "warnings": list(self.warnings),
            "levels": [
                {"n": list(lv.n) if isinstance(lv.n, tuple) else lv.n, "branch": lv.branch, "energy": lv.energy}
                for lv in self.levels
            ],
        }


@dataclass(frozen=True)
class GridSpec:
    r_max: float
    n_points: int = 4000
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError("r_max must be > 0")
        if self.n_points < 100:
            raise ValueError("n_points must be >= 100")
        if self.boundary != "dirichlet":
            raise ValueError(f"unsupported boundary {self.boundary!r}")

    @property
    def h(self) -> float:
        return self.r_max / (self.n_points + 1)


@dataclass(frozen=True)
class RepresentationLabel:
    """Label (j, l) of a discrete-series state with l = |j| + m.

    ``mu`` is i (l + 1/2) unless a real override is supplied.
    """

    j: Fraction
    m: int = 0
    mu_override: float | None = None

    def __post_init__(self):
        j = Fraction(self.j).limit_denominator(2)
        if j.denominator not in (1, 2) or j != Fraction(self.j):
            raise ValueError(f"j must be a half-integer, got {self.j!r}")
        object.__setattr__(self, "j", j)
        if self.m < 0 or int(self.m) != self.m:
            raise ValueError(f"m must be a non-negative integer, got {self.m!r}")

    @property
    def l(self) -> Fraction:
        return abs(self.j) + self.m

    @property
    def mu(self) -> complex | float:
        if self.mu_override is not None:
            return float(self.mu_override)
        return 1j * float(self.l + Fraction(1, 2))

    def shift(self, omega_a: float) -> float:
        """Constant c = 2 Omega_A j contributed by the A-sector Casimir."""
        return 2.0 * omega_a * float(self.j)


def _check_n_max(n_max: int):
    if n_max < 0:
        raise ValueError("n_max must be >= 0")


def isotonic_levels(ip: IsotonicParams, n_max: int) -> SpectrumResult:
    """Levels n = 0..n_max of the isotonic oscillator with branch selection."""
    _check_n_max(n_max)
    qn, ratio = ip.q_coef * ip.n_coef, ip.ratio
    if ratio > 0.5:
        validity, branches = REPULSIVE, ((PLUS, 1.0),)
    else:
        validity, branches = ATTRACTIVE, ((MINUS, -1.0), (PLUS, 1.0))
    levels = [
        Level(n, name, qn * (2 * n + sign * ratio + 1))
        for name, sign in branches
        for n in range(n_max + 1)
    ]
    warnings = []
    if ratio == 0.0:
        warnings.append("R = 0: minus and plus branches coincide")
    return SpectrumResult(levels, validity, warnings)


def emergent_radical(cp: CompositeParams, mu_a) -> tuple[float, str]:
    """sqrt(R**2/N**2) and validity class for a real or imaginary mu_A."""
    if cp.b.big_gamma == 0:
        raise ZeroGammaB("Gamma_B must be non-zero")
    coupling = 2.0 * cp.a.big_gamma / cp.b.big_gamma
    mu = complex(mu_a)
    if mu.imag == 0:
        radicand = 0.25 - (coupling * mu.real) ** 2
        if radicand < 0:
            raise RadicalDomainError(
                f"1/4 - (2 Gamma_A mu_A / Gamma_B)**2 = {radicand!r} < 0 for real mu_A; "
                "use an imaginary mu_A (RepresentationLabel) for the repulsive case"
            )
    elif mu.real == 0:
        radicand = 0.25 + (coupling * mu.imag) ** 2
    else:
        raise DomainError(f"mu_A must be real or purely imaginary, got {mu_a!r}")
    rad = math.sqrt(radicand)
    return rad, (REPULSIVE if rad > 0.5 else ATTRACTIVE)


def emergent_isotonic_params(cp: CompositeParams, mu_a) -> IsotonicParams:
    """(N, Q, R) of the B-sector radial problem: N**2 = 1/m_B, Q**2 = m_B Omega_B**2."""
    rad, _ = emergent_radical(cp, mu_a)
    n = 1.0 / math.sqrt(cp.b.m)
    return IsotonicParams(n, math.sqrt(cp.b.m) * cp.b.omega, n * rad)


def emergent_spectrum(cp: CompositeParams, mu_a, c: float, n_max: int) -> SpectrumResult:
    """E(n, -/+) = Omega_B (2n -/+ sqrt(1/4 - (2 Gamma_A mu_A / Gamma_B)**2) + 1) + c.

    ``mu_a`` may be real (attractive, both branches) or purely imaginary,
    e.g. ``RepresentationLabel(...).mu``, which flips the sign under the
    radical and leaves only the "+" branch.

    Raises:
        RadicalDomainError: for real mu_A with a negative radicand.
    """
    _check_n_max(n_max)
    if isinstance(mu_a, RepresentationLabel):
        mu_a = mu_a.mu
    rad, validity = emergent_radical(cp, mu_a)
    om = cp.b.omega
    branches = ((PLUS, 1.0),) if validity == REPULSIVE else ((MINUS, -1.0), (PLUS, 1.0))
    levels = [
        Level(n, name, om * (2 * n + sign * rad + 1) + c)
        for name, sign in branches
        for n in range(n_max + 1)
    ]
    warnings = []
    if rad == 0.0:
        warnings.append("radical vanishes: minus and plus branches coincide")
    return SpectrumResult(levels, validity, warnings)


def sw_radicals(mu_a: float, gamma_ratio: float) -> tuple[float, float]:
    """(sqrt(1/4 - 4 mu_A**2), sqrt(1/4 - (2 mu_A Gamma_A/Gamma_B)**2))."""
    if not -0.25 <= mu_a <= 0.25:
        raise DomainError(f"mu_A must lie in [-1/4, 1/4], got {mu_a!r}")
    if not -1.0 <= gamma_ratio <= 1.0:
        raise DomainError(f"Gamma_A/Gamma_B must lie in [-1, 1], got {gamma_ratio!r}")
    rad_a = math.sqrt(max(0.25 - 4.0 * mu_a ** 2, 0.0))
    rad_b = math.sqrt(max(0.25 - (2.0 * mu_a * gamma_ratio) ** 2, 0.0))
    return rad_a, rad_b


def sw_spectrum(m: float, omega: float, mu_a: float, gamma_ratio: float, n_max: int) -> SpectrumResult:
    """Two-dimensional Smorodinsky-Winternitz levels for n_A + n_B <= n_max.

    E = Omega (2 (n_A + n_B) +/- rad_A +/- rad_B + 2). Real mu_A makes both
    inverse-square terms attractive, so all four sign pairs are listed; the
    branch label gives the signs in front of rad_A and rad_B.

    Raises:
        DomainError: outside mu_A in [-1/4, 1/4] or Gamma_A/Gamma_B in [-1, 1].
    """
    _check_n_max(n_max)
    if not (m > 0 and omega > 0):
        raise DomainError("m and omega must be > 0")
    rad_a, rad_b = sw_radicals(mu_a, gamma_ratio)
    levels = []
    for sa_name, sa in ((MINUS, -1.0), (PLUS, 1.0)):
        for sb_name, sb in ((MINUS, -1.0), (PLUS, 1.0)):
            for shell in range(n_max + 1):
                for n_a in range(shell + 1):
                    e = omega * (2 * shell + sa * rad_a + sb * rad_b + 2)
                    levels.append(Level((n_a, shell - n_a), f"{sa_name},{sb_name}", e))
    return SpectrumResult(levels, ATTRACTIVE)


def asymptotic_spectrum(cp: CompositeParams, n_max: int) -> SpectrumResult:
    """Two decoupled oscillators: Omega_A (n_A + 1/2) + Omega_B (n_B + 1/2).

    Levels cover the square grid 0 <= n_A, n_B <= n_max, sorted by energy.
    """
    _check_n_max(n_max)
    oa, ob = cp.a.omega, cp.b.omega
    levels = [
        Level((na, nb), NONE, oa * (na + 0.5) + ob * (nb + 0.5))
        for na in range(n_max + 1)
        for nb in range(n_max + 1)
    ]
    levels.sort(key=lambda lv: (lv.energy, lv.n))
    return SpectrumResult(levels, VALID)


# ---------------------------------------------------------------------------
# Numerical oracle

def sturm_count(diag: np.ndarray, off_sq: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Number of eigenvalues below each shift for a symmetric tridiagonal matrix.

    ``off_sq`` holds the squared off-diagonal entries. Counts negative pivots
    of the LDL^T factorization of T - shift.
    """
    shifts = np.asarray(shifts, dtype=float)
    tiny = np.finfo(float).tiny ** 0.5
    d = diag[0] - shifts
    d = np.where(d == 0.0, -tiny, d)
    count = (d < 0).astype(np.int64)
    for i in range(1, diag.size):
        d = diag[i] - shifts - off_sq[i - 1] / d
        d = np.where(d == 0.0, -tiny, d)
        count += d < 0
    return count


def tridiag_lowest(diag: Sequence[float], off: Sequence[float], k: int, rtol: float = 1e-14,
                   sections: int = 32) -> np.ndarray:
    """Lowest ``k`` eigenvalues of a symmetric tridiagonal matrix by multisection.

    Each pass evaluates Sturm counts at ``sections - 1`` interior points of
    every bracketing interval at once.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    n = diag.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    off_sq = off ** 2
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo0, hi0 = float(np.min(diag - radius)), float(np.max(diag + radius))
    lo = np.full(k, lo0)
    hi = np.full(k, hi0)
    index = np.arange(k)
    frac = np.arange(1, sections) / sections
    rows = np.arange(k)
    for _ in range(200):
        width = hi - lo
        if np.all(width <= rtol * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300):
            break
        pts = lo[:, None] + width[:, None] * frac[None, :]
        counts = sturm_count(diag, off_sq, pts.ravel()).reshape(pts.shape)
        # eigenvalue j lies below the first point whose count exceeds j
        above = counts > index[:, None]
        hit = above.any(axis=1)
        first = above.argmax(axis=1)
        hi = np.where(hit, pts[rows, first], hi)
        lo = np.where(hit, np.where(first > 0, pts[rows, first - 1], lo), pts[:, -1])
    return 0.5 * (lo + hi)


def radial_matrix(ip: IsotonicParams, grid: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid nodes, diagonal and off-diagonal of the discretized radial operator."""
    h = grid.h
    r = h * np.arange(1, grid.n_points + 1)
    kin = ip.n_coef ** 2 / (2.0 * h * h)
    diag = 2.0 * kin + 0.5 * ip.q_coef ** 2 * r ** 2 + ip.barrier / (2.0 * r ** 2)
    off = np.full(grid.n_points - 1, -kin)
    return r, diag, off


def _check_radial_domain(ip: IsotonicParams):
    if ip.ratio < 0.5:
        raise DomainError(
            f"R/N = {ip.ratio!r} < 1/2: attractive case has no unique half-line "
            "discretization; only R/N >= 1/2 is supported"
        )


def solve_radial_raw(ip: IsotonicParams, grid: GridSpec, k: int) -> np.ndarray:
    """Lowest ``k`` eigenvalues without the resolution check."""
    _check_radial_domain(ip)
    _r, diag, off = radial_matrix(ip, grid)
    return tridiag_lowest(diag, off, k)


def solve_radial(ip: IsotonicParams, grid: GridSpec, k: int, max_rel_error: float = 1e-2) -> list[float]:
    """Lowest ``k`` eigenvalues of the half-line isotonic problem.

    Dirichlet conditions at r = 0 and r = r_max. For R/N = 1/2 this yields
    the odd oscillator states, i.e. the "+" branch.

    Raises:
        DomainError: if R/N < 1/2.
        GridTooCoarse: if a Richardson estimate of the discretization error
            of any requested level exceeds ``max_rel_error``, or if the
            classical turning point of the highest level is beyond r_max.
    """
    _check_radial_domain(ip)
    if grid.n_points < k:
        raise GridTooCoarse("grid has fewer points than requested levels")
    fine = solve_radial_raw(ip, grid, k)
    # companion grid with h doubled, or halved when that would drop below 100 nodes
    coarse_n = (grid.n_points + 1) // 2 - 1
    other_grid = GridSpec(grid.r_max, coarse_n if coarse_n >= max(100, k) else 2 * grid.n_points + 1)
    other = solve_radial_raw(ip, other_grid, k)
    ratio_sq = (other_grid.h / grid.h) ** 2
    est = np.abs(fine - other) / abs(ratio_sq - 1.0)
    rel = est / np.maximum(np.abs(fine), 1e-300)
    if np.any(rel > max_rel_error):
        worst = int(np.argmax(rel))
        raise GridTooCoarse(f"level {worst}: estimated relative error {rel[worst]:.3g} > {max_rel_error}")
    turning = math.sqrt(2.0 * max(fine[-1], 0.0)) / ip.q_coef
    if turning >= grid.r_max:
        raise GridTooCoarse(f"turning point {turning:.3g} of level {k - 1} lies beyond r_max={grid.r_max}")
    return [float(e) for e in fine]


def default_grid(ip: IsotonicParams, k: int, n_points: int = 4000) -> GridSpec:
    """Grid whose r_max is 2.5x the turning point of the highest analytic level."""
    e_top = ip.q_coef * ip.n_coef * (2 * (k - 1) + ip.ratio + 1)
    turning = math.sqrt(2.0 * e_top) / ip.q_coef
    return GridSpec(r_max=2.5 * turning, n_points=n_points)


def compare_radial(ip: IsotonicParams, grid: GridSpec, k: int, check: bool = True) -> list[dict]:
    """Per-level deviation of the numerical "+" branch from the closed form.

    With ``check=False`` the resolution guard of ``solve_radial`` is skipped
    so that the deviation itself decides.
    """
    numeric = solve_radial(ip, grid, k) if check else solve_radial_raw(ip, grid, k)
    analytic = isotonic_levels(ip, k - 1).energies(PLUS)
    return [
        {
            "n": n,
            "analytic": a,
            "numeric": e,
            "abs_dev": abs(e - a),
            "rel_dev": abs(e - a) / abs(a),
        }
        for n, (a, e) in enumerate(zip(analytic, numeric))
    ]
