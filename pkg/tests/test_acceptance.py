"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py`` ; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

import json
import time
import warnings
from collections import Counter

import mpmath
import numpy as np
import pytest

from batemanlab.algebra import (
    canonical_q_rot,
    casimir_residual,
    charges,
    charges_any,
    poisson_bracket,
    random_rot_state,
    thooft_residual,
    verify_su11,
)
from batemanlab.cli import main
from batemanlab.constraint import (
    coarse_graining_weight,
    composite_charges,
    global_split,
    random_hyp_state,
    reduced_hamiltonian,
    sample_global_surface,
)
from batemanlab.core import BatemanParams, CompositeParams, PhaseStateHyp, PhaseStateXY, from_hyperbolic
from batemanlab.dynamics import IntegratorSpec, analytic_xy_array, conservation_drift, integrate
from batemanlab.errors import DomainError
from batemanlab.spectra import (
    GridSpec,
    IsotonicParams,
    default_grid,
    emergent_spectrum,
    isotonic_levels,
    solve_radial,
    solve_radial_raw,
    sw_spectrum,
)

pytestmark = pytest.mark.acceptance


def test_criterion_1_algebra(acceptance_report):
    t0 = time.perf_counter()
    p_a = BatemanParams(1.0, 0.2, 1.0)
    p_b = BatemanParams(2.0, 0.9, 3.0)
    rng = np.random.default_rng(2024)
    points = [(random_rot_state(rng), random_rot_state(rng)) for _ in range(100)]
    reports = verify_su11(p_a, p_b, 100, points=points)
    bracket = max(r.max_residual for r in reports)
    identity = 0.0
    for pair in points:
        for p, s in zip((p_a, p_b), pair):
            cs = charges(p, s)
            identity = max(identity, casimir_residual(cs), thooft_residual(p, cs))
    elapsed = time.perf_counter() - t0
    ok = len(reports) == 19 and bracket < 1e-6 and identity < 1e-12 and elapsed < 5.0
    acceptance_report(1, "su(1,1) brackets, Casimir and 't Hooft identities", ok,
                      f"bracket {bracket:.2e}, identity {identity:.2e}, {elapsed:.2f}s")


def test_criterion_2_conservation(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    sets = [BatemanParams.from_rates(1.0, 1.0, 0.0), BatemanParams.from_rates(1.3, 0.8, 0.3 * 0.8)]
    for _ in range(3):
        m, om = rng.uniform(0.5, 2.0, 2)
        sets.append(BatemanParams.from_rates(m, om, rng.uniform(0.0, 0.3) * om))
    worst = 0.0
    for p in sets:
        s0 = PhaseStateXY(*rng.uniform(-1.0, 1.0, 4))
        traj = integrate(p, s0, IntegratorSpec(dt=p.period / 1000, t_end=10 * p.period))
        worst = max(worst, *conservation_drift(traj).values())
    elapsed = time.perf_counter() - t0
    acceptance_report(2, "H, C, J2 conserved by RK4 over 10 periods", worst < 1e-7 and elapsed < 10.0,
                      f"max drift {worst:.2e}, {elapsed:.2f}s")


def test_criterion_3_analytic_oracle(acceptance_report):
    worst = 0.0
    cases = [
        (BatemanParams(1.0, 0.2, 1.0), PhaseStateXY(0.5, -0.3, 0.8, 0.1)),
        (BatemanParams(2.0, 0.5, 3.0), PhaseStateXY(-1.0, 0.4, 0.2, 0.6)),
        (BatemanParams(1.0, 0.0, 1.0), PhaseStateXY(1.0, 0.0, 0.0, 0.0)),
    ]
    for p, s0 in cases:
        traj = integrate(p, s0, IntegratorSpec(dt=p.period / 1000, t_end=5 * p.period))
        exact = analytic_xy_array(p, s0, traj.times)
        worst = max(worst, float(np.max(np.abs(traj.states[:, :2] - exact[:, :2]))))
    # time-reversed image: y0 = x0, dy/dt(0) = -dx/dt(0)
    p = cases[0][0]
    x0, v0 = 0.7, -0.4
    pp = p.m * (v0 + p.big_gamma * x0)
    s0 = PhaseStateXY(x0, x0, -pp, pp)
    traj = integrate(p, s0, IntegratorSpec(dt=p.period / 1000, t_end=5 * p.period))
    mirror = float(np.max(np.abs(traj.states[:, 1] - analytic_xy_array(p, s0, -traj.times)[:, 0])))
    ok = worst < 1e-6 and mirror < 1e-6
    acceptance_report(3, "integrated x(t), y(t) vs closed form; y is time-reversed x", ok,
                      f"max error {worst:.2e}, mirror {mirror:.2e}")


def test_criterion_4_constraint_reduction(acceptance_report):
    a = BatemanParams.from_rates(1.0, 1.0, 0.3)
    b = BatemanParams.from_rates(1.4, 0.7, 0.5)
    cp = CompositeParams(a, b)
    rng = np.random.default_rng(4)
    dev_sum = dev_casimir = 0.0
    for _ in range(100):
        s_a = random_hyp_state(a, rng)
        s_b = sample_global_surface(cp, s_a, rng)
        red = reduced_hamiltonian(cp, s_a, s_b)
        dev_sum = max(dev_sum, abs(red - charges_any(a, s_a).h - charges_any(b, s_b).h))
        dev_casimir = max(dev_casimir, abs(red - 2 * cp.omega_global * composite_charges(cp, s_a, s_b).c_global))
    dev_minus = 0.0
    for _ in range(100):
        s_a, s_b = random_hyp_state(a, rng), random_hyp_state(b, rng)
        cc = composite_charges(cp, s_a, s_b)
        want = cp.gamma_global ** 2 * cc.j_global ** 2 / (2 * cp.omega_global * cc.c_global)
        dev_minus = max(dev_minus, abs(global_split(cp, s_a, s_b).h_minus - want))
    ok = max(dev_sum, dev_casimir, dev_minus) < 1e-12
    acceptance_report(4, "reduced Hamiltonian on the global surface, global h_minus", ok,
                      f"{dev_sum:.1e} / {dev_casimir:.1e} / {dev_minus:.1e}")


def test_criterion_5_spectrum_oracle(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    triples = [IsotonicParams(1.0, 1.0, 1.5)]
    for _ in range(2):
        n, q = rng.uniform(0.5, 2.0, 2)
        triples.append(IsotonicParams(n, q, n * rng.uniform(1.0, 3.0)))
    worst = 0.0
    for ip in triples:
        grid = default_grid(ip, 5, n_points=4000)
        analytic = np.array(isotonic_levels(ip, 4).energies("plus"))
        numeric = np.array(solve_radial(ip, grid, 5))
        worst = max(worst, float(np.max(np.abs(numeric - analytic) / analytic)))
    ip = triples[0]
    grid = GridSpec(12.0, 4000)
    half = GridSpec(12.0, 8001)  # h exactly halved
    err = [abs(solve_radial_raw(ip, g, 2)[1] - 4.5) for g in (grid, half)]
    ratio = err[0] / err[1]
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and 3.5 < ratio < 4.5 and elapsed < 30.0
    acceptance_report(5, "finite-difference radial levels vs closed form", ok,
                      f"max rel dev {worst:.2e}, h-halving ratio {ratio:.2f}, {elapsed:.2f}s")


def test_criterion_6_limit_checks(acceptance_report):
    a = BatemanParams.from_rates(1.0, 0.9, 0.0)
    b = BatemanParams.from_rates(1.3, 1.7, 0.4)
    cp = CompositeParams(a, b)
    c = 2 * a.omega * 1.5
    res = emergent_spectrum(cp, 0.2, c, 6)
    ladder = [b.omega * (k + 0.5) + c for k in range(14)]
    decoupled = res.union() == ladder

    sw = sw_spectrum(1.0, 1.0, 0.0, 0.6, 4)
    # enumerated 2-D oscillator: Omega (k_x + k_y + 1); complete up to M = 10 for n_A + n_B <= 4
    oracle = Counter(float(kx + ky + 1) for kx in range(11) for ky in range(11) if kx + ky + 1 <= 10)
    got = Counter(round(e, 12) for e in sw.energies() if e <= 10.0 + 1e-9)
    sw_ok = got == oracle

    rejected = 0
    for mu, ratio in ((0.3, 0.5), (-0.3, 0.5), (0.1, 1.5), (0.1, -1.5)):
        try:
            sw_spectrum(1.0, 1.0, mu, ratio, 2)
        except DomainError:
            rejected += 1
    ok = decoupled and sw_ok and rejected == 4
    acceptance_report(6, "decoupled ladder, SW at mu_A = 0, SW domain", ok,
                      f"ladder {decoupled}, sw union {sw_ok}, rejected {rejected}/4")


def test_criterion_7_canonical_transformation(acceptance_report):
    p = BatemanParams(1.2, 0.4, 1.8)
    rng = np.random.default_rng(77)
    worst = 0.0
    tested = 0
    while tested < 20:
        s = PhaseStateHyp(rng.uniform(0.4, 2.0) * rng.choice([-1, 1]), *rng.uniform(-1.5, 1.5, 3))
        if abs(s.p_r) < 0.05:
            continue  # stay away from the turning points
        point = from_hyperbolic(s)
        fns = [lambda q, i=i: canonical_q_rot(p, q)[i] for i in range(4)]
        for i in range(4):
            for j in range(i + 1, 4):
                want = 1.0 if j == i + 2 else 0.0
                worst = max(worst, abs(poisson_bracket(fns[i], fns[j], point) - want))
        tested += 1
    acceptance_report(7, "canonical brackets of (q1, q2; C, J2)", worst < 1e-5, f"max residual {worst:.2e}")


def test_criterion_8_coarse_graining(acceptance_report):
    e_p = 1.0
    at_planck = coarse_graining_weight(e_p, e_p) == 0
    with mpmath.workdps(480):
        e_p_mp = mpmath.mpf(1)
        far = coarse_graining_weight(e_p_mp / 100, e_p_mp) > 1 - mpmath.mpf(10) ** -40
        grid = [e_p_mp * k / 1000 for k in range(1, 1001)]
        w = [coarse_graining_weight(e, e_p_mp) for e in grid]
        decreasing = all(w[i + 1] < w[i] for i in range(len(w) - 1))
    ok = at_planck and far and decreasing
    acceptance_report(8, "coarse-graining weight", ok,
                      f"zero at E_P {at_planck}, > 1-1e-40 at E_P/100 {far}, decreasing {decreasing}")


CLI_BASE = {
    "system": {"a": {"m": 1.0, "gamma": 0.2, "kappa": 1.0}, "b": {"m": 1.5, "gamma": 0.6, "kappa": 2.0}},
    "spectrum": {"kind": "emergent", "mu_a": 0.1, "n_max": 3},
    "integrator": {"periods": 2},
    "algebra": {"n_points": 20},
    "sweep": {"parameter": "mu_a", "start": -0.2, "stop": 0.2, "steps": 5},
    "audit": {"n_samples": 20},
    "seed": 11,
}


def _cli(tmp, config, *args):
    tmp.mkdir(parents=True, exist_ok=True)
    path = tmp / "config.json"
    path.write_text(json.dumps(config))
    return main([args[0], "--config", str(path), "--out", str(tmp / "out"), *args[1:]])


def _edit(**sections):
    cfg = json.loads(json.dumps(CLI_BASE))
    for key, value in sections.items():
        cfg[key] = value
    return cfg


ISOTONIC = _edit(spectrum={"kind": "isotonic", "isotonic": {"n": 1, "q": 1, "r": 1.5}, "k": 3})


def test_criterion_9_cli(acceptance_report, tmp_path):
    commands = [(CLI_BASE, ("simulate",)), (CLI_BASE, ("verify-algebra",)), (CLI_BASE, ("spectrum",)),
                (ISOTONIC, ("spectrum", "--mode", "compare")), (CLI_BASE, ("sweep",)),
                (CLI_BASE, ("audit-surface",))]
    identical = True
    for i, (cfg, cmd) in enumerate(commands):
        one, two = tmp_path / "one" / str(i), tmp_path / "two" / str(i)
        identical &= _cli(one, cfg, *cmd) == 0 and _cli(two, cfg, *cmd) == 0
        for f in sorted((one / "out").iterdir()):
            identical &= f.read_bytes() == (two / "out" / f.name).read_bytes()

    scenarios = [
        ("missing kappa", _edit(system={"a": {"m": 1.0, "gamma": 0.2}}), ("simulate",), 2),
        ("t_end = 0", _edit(integrator={"t_end": 0}), ("simulate",), 2),
        ("threshold 1e-20", CLI_BASE, ("verify-algebra", "--threshold", "1e-20"), 4),
        ("n_points = 0", _edit(algebra={"n_points": 0}), ("verify-algebra",), 2),
        ("SW mu_A = 0.3", _edit(spectrum={"kind": "sw", "mu_a": 0.3, "gamma_ratio": 0.5}), ("spectrum",), 2),
        ("empty sweep", _edit(sweep={"parameter": "mu_a", "start": 0.2, "stop": 0.1, "steps": 5}), ("sweep",), 2),
        ("integration blow-up",
         _edit(system={"a": {"m": 1.0, "gamma": 1.9, "kappa": 1.0}}, initial_state={"values": [1, 1, 1, 1]},
               integrator={"method": "rk45", "t_end": 2000.0, "dt": 0.01}), ("simulate",), 3),
        ("compare mismatch", dict(ISOTONIC, grid={"r_max": 2.5, "n_points": 400}), ("spectrum", "--mode", "compare"), 5),
    ]
    failures = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # overflow in the blow-up run
        for i, (name, cfg, args, want) in enumerate(scenarios):
            code = _cli(tmp_path / f"fail{i}", cfg, *args)
            if code != want:
                failures.append(f"{name}: got {code}, want {want}")
    ok = identical and not failures
    acceptance_report(9, "CLI reproducibility and exit codes", ok,
                      f"byte-identical {identical}, {len(scenarios) - len(failures)}/{len(scenarios)} scenarios"
                      + (f"; {failures}" if failures else ""))
