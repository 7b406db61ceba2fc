"""Equations of motion, time integration and closed-form solutions."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from batemanlab.core import (
    CHART_TYPES,
    BatemanParams,
    Chart,
    PhaseStateHyp,
    PhaseStateRot,
    PhaseStateXY,
    as_rotated,
    chart_of,
    convert_array,
    from_rotated,
)
from batemanlab.algebra import charges_along
from batemanlab.errors import ChartDomainError, StepFailure
from batemanlab.report import write_csv


class Method(str, enum.Enum):
    RK4 = "rk4"
    RK45 = "rk45"


@dataclass(frozen=True)
class IntegratorSpec:
    """How to integrate.

    ``dt`` is the fixed step for RK4 and the initial step for RK45.
    ``rtol``/``atol`` only apply to RK45.
    """

    method: Method = Method.RK4
    dt: float = 1e-3
    t_end: float = 1.0
    rtol: float = 1e-10
    atol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end!r}")


@dataclass
class Trajectory:
    """Sampled states of one run; ``states`` has shape ``(len(times), 4)``.

    Rows of a HYP trajectory are NaN wherever the state has left the
    hyperbolic chart (x1**2 <= x2**2).
    """

    times: np.ndarray
    states: np.ndarray
    chart: Chart
    params: BatemanParams | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.chart = Chart(self.chart)
        if self.states.shape != (self.times.size, 4):
            raise ValueError("states must have shape (len(times), 4)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times.size

    def state(self, i: int):
        return CHART_TYPES[self.chart].from_array(self.states[i])

    def to_chart(self, chart: Chart) -> "Trajectory":
        chart = Chart(chart)
        if chart == Chart.HYP:
            states = _to_hyp_masked(self.states, self.chart)
        else:
            states = convert_array(self.states, self.chart, chart)
        return Trajectory(self.times.copy(), states, chart, self.params)

    def xy_states(self) -> np.ndarray:
        return convert_array(self.states, self.chart, Chart.XY)

    def charges(self, params: BatemanParams | None = None) -> np.ndarray:
        """Columns (h, c, j1, j2, j3) evaluated through the XY chart."""
        params = params or self.params
        if params is None:
            raise ValueError("trajectory has no parameters attached")
        return charges_along(params, self.xy_states())


def _to_hyp_masked(states: np.ndarray, chart: Chart) -> np.ndarray:
    rot = convert_array(states, chart, Chart.ROT)
    out = np.full_like(rot, np.nan)
    ok = np.abs(rot[:, 0]) > np.abs(rot[:, 1])
    if np.any(ok):
        out[ok] = convert_array(rot[ok], Chart.ROT, Chart.HYP)
    return out


# ---------------------------------------------------------------------------
# Vector fields

def xy_field(p: BatemanParams, y: np.ndarray) -> np.ndarray:
    x, yy, px, py = y
    g, k = p.big_gamma, p.m * p.omega ** 2
    return np.array([
        py / p.m - g * x,
        px / p.m + g * yy,
        g * px - k * yy,
        -g * py - k * x,
    ])


def rot_field(p: BatemanParams, y: np.ndarray) -> np.ndarray:
    x1, x2, p1, p2 = y
    g, k = p.big_gamma, p.m * p.omega ** 2
    return np.array([
        p1 / p.m - g * x2,
        -p2 / p.m - g * x1,
        g * p2 - k * x1,
        g * p1 + k * x2,
    ])


def hyp_field(p: BatemanParams, y: np.ndarray) -> np.ndarray:
    r, _u, pr, pu = y
    if r == 0:
        raise ChartDomainError("hyperbolic chart is singular at r = 0")
    m = p.m
    return np.array([
        pr / m,
        -pu / (m * r ** 2) - p.big_gamma,
        -pu ** 2 / (m * r ** 3) - m * p.omega ** 2 * r,
        0.0,
    ])


def eom_xy(p: BatemanParams, s: PhaseStateXY) -> PhaseStateXY:
    """Hamilton's equations for the (x, y) Hamiltonian; returns the time derivative."""
    return PhaseStateXY.from_array(xy_field(p, s.as_array()))


def eom_rot(p: BatemanParams, s: PhaseStateRot) -> PhaseStateRot:
    return PhaseStateRot.from_array(rot_field(p, s.as_array()))


def eom_hyp(p: BatemanParams, s: PhaseStateHyp) -> PhaseStateHyp:
    """Hamilton's equations for
    H = (p_r**2 - p_u**2/r**2)/(2m) + m Omega**2 r**2/2 - Gamma p_u.
    """
    return PhaseStateHyp.from_array(hyp_field(p, s.as_array()))


# ---------------------------------------------------------------------------
# Integration

def rk4(fun, y0: np.ndarray, t_end: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step Runge-Kutta; the step is shrunk to land on t_end.

    Raises:
        StepFailure: if the state overflows.
    """
    n = max(1, math.ceil(t_end / dt - 1e-12))
    h = t_end / n
    ys = np.empty((n + 1, y0.size))
    ys[0] = y = np.asarray(y0, dtype=float)
    for i in range(n):
        k1 = fun(y)
        k2 = fun(y + 0.5 * h * k1)
        k3 = fun(y + 0.5 * h * k2)
        k4 = fun(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y
    if not np.all(np.isfinite(ys)):
        raise StepFailure("state became non-finite during RK4 integration")
    return np.linspace(0.0, t_end, n + 1), ys


def integrate(p: BatemanParams, s0, spec: IntegratorSpec, chart: Chart | str | None = None) -> Trajectory:
    """Integrate from ``s0`` and return the trajectory in ``chart``.

    ROT initial states are integrated in the rotated frame, everything else in
    the XY frame; a HYP trajectory is always obtained by mapping.

    Raises:
        StepFailure: if the adaptive integrator gives up.
    """
    chart = Chart(chart) if chart is not None else chart_of(s0)
    if isinstance(s0, PhaseStateRot):
        work, fieldfn, y0 = Chart.ROT, rot_field, s0.as_array()
    else:
        xy = s0 if isinstance(s0, PhaseStateXY) else from_rotated(as_rotated(s0))
        work, fieldfn, y0 = Chart.XY, xy_field, xy.as_array()

    if spec.method == Method.RK4:
        times, ys = rk4(lambda y: fieldfn(p, y), y0, spec.t_end, spec.dt)
    else:
        sol = solve_ivp(
            lambda _t, y: fieldfn(p, y),
            (0.0, spec.t_end),
            y0,
            method="RK45",
            rtol=spec.rtol,
            atol=spec.atol,
            first_step=min(spec.dt, spec.t_end),
        )
        if not sol.success:
            raise StepFailure(sol.message)
        times, ys = sol.t, sol.y.T

    traj = Trajectory(times, ys, work, p)
    return traj if chart == work else traj.to_chart(chart)


def integrate_batch(p: BatemanParams, states, spec: IntegratorSpec, chart=None, max_workers=None):
    """Integrate independent initial conditions, optionally in parallel."""
    if max_workers is None:
        max_workers = int(os.environ.get("BATEMANLAB_THREADS", "1"))
    if max_workers <= 1:
        return [integrate(p, s, spec, chart) for s in states]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda s: integrate(p, s, spec, chart), states))


# ---------------------------------------------------------------------------
# Closed-form solution

def analytic_xy_array(p: BatemanParams, s0: PhaseStateXY, t) -> np.ndarray:
    """Exact solution at times ``t`` (any shape); returns ``(..., 4)``."""
    t = np.asarray(t, dtype=float)
    m, om, g = p.m, p.omega, p.big_gamma
    v0 = s0.p_y / m - g * s0.x  # dx/dt at t=0
    w0 = s0.p_x / m + g * s0.y  # dy/dt at t=0
    cos, sin = np.cos(om * t), np.sin(om * t)

    def damped(q0, dq0, rate):
        # solution of q'' + 2 rate q' + (rate**2 + om**2) q = 0
        e = np.exp(-rate * t)
        a = (dq0 + rate * q0) / om
        q = e * (q0 * cos + a * sin)
        dq = e * (-rate * (q0 * cos + a * sin) + om * (-q0 * sin + a * cos))
        return q, dq

    x, dx = damped(s0.x, v0, g)
    y, dy = damped(s0.y, w0, -g)
    p_x = m * (dy - g * y)
    p_y = m * (dx + g * x)
    return np.stack([x, y, p_x, p_y], axis=-1)


def analytic_xy(p: BatemanParams, s0: PhaseStateXY, t: float) -> PhaseStateXY:
    """Closed-form state at time ``t``.

    x(t) = exp(-Gamma t) [x0 cos(Omega t) + (v0 + Gamma x0)/Omega sin(Omega t)],
    y(t) the same with Gamma -> -Gamma.
    """
    return PhaseStateXY.from_array(analytic_xy_array(p, s0, t))


def conservation_drift(traj: Trajectory, params: BatemanParams | None = None) -> dict:
    """Maximum relative drift of H, C and J2 along a trajectory.

    A quantity that is exactly zero initially is measured in absolute terms.
    """
    q = traj.charges(params)
    out = {}
    for name, col in (("H_drift", 0), ("C_drift", 1), ("J2_drift", 3)):
        ref = q[0, col]
        dev = float(np.max(np.abs(q[:, col] - ref)))
        out[name] = float(dev / abs(ref)) if ref != 0 else dev
    return out


def write_trajectory_csv(traj: Trajectory, path, params: BatemanParams | None = None) -> None:
    """CSV with a ``# chart=...`` tag line, then t, state fields, H, C, J2."""
    q = traj.charges(params)
    names = list(CHART_TYPES[traj.chart].__dataclass_fields__)
    rows = (
        [t, *row, qq[0], qq[1], qq[3]] for t, row, qq in zip(traj.times, traj.states, q)
    )
    write_csv(path, ["t", *names, "H", "C", "J2"], rows, preamble=f"# chart={traj.chart.value}")
