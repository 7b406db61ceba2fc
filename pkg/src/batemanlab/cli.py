"""Command-line driver.

Exit codes: 0 ok, 2 configuration or domain error, 3 integration failure,
4 algebra violation, 5 spectrum mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from batemanlab import algebra, constraint, dynamics, spectra
from batemanlab.core import CHART_TYPES, BatemanParams, Chart, CompositeParams
from batemanlab.errors import BatemanError, StepFailure
from batemanlab.report import write_csv, write_json

log = logging.getLogger("batemanlab")

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_ALGEBRA, EXIT_SPECTRUM = 0, 2, 3, 4, 5
SWEEP_PARAMETERS = ("mu_a", "gamma_ratio", "gamma_a", "omega_b", "c")
COMPARE_TOLERANCE = 1e-2

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {
    "type": "object",
    "properties": {"m": _POSITIVE, "gamma": {"type": "number", "minimum": 0}, "kappa": _POSITIVE},
    "required": ["m", "gamma", "kappa"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system"],
    "properties": {
        "system": {
            "type": "object",
            "properties": {"a": _PAIR, "b": _PAIR},
            "required": ["a"],
            "additionalProperties": False,
        },
        "composite": {
            "type": "object",
            "properties": {"omega": _POSITIVE, "gamma": _POSITIVE},
            "additionalProperties": False,
        },
        "initial_state": {
            "type": "object",
            "properties": {
                "chart": {"enum": ["XY", "ROT", "HYP"]},
                "values": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
            },
            "required": ["values"],
            "additionalProperties": False,
        },
        "integrator": {
            "type": "object",
            "properties": {
                "method": {"enum": ["rk4", "rk45"]},
                "dt": _POSITIVE,
                "t_end": _POSITIVE,
                "periods": _POSITIVE,
                "rtol": _POSITIVE,
                "atol": _POSITIVE,
                "chart": {"enum": ["XY", "ROT", "HYP"]},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {"r_max": _POSITIVE, "n_points": {"type": "integer", "minimum": 100}},
            "additionalProperties": False,
        },
        "spectrum": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["emergent", "isotonic", "sw", "asymptotic"]},
                "mu_a": {"type": "number"},
                "label": {
                    "type": "object",
                    "properties": {"j": {"type": "number"}, "m": {"type": "integer", "minimum": 0}},
                    "required": ["j"],
                    "additionalProperties": False,
                },
                "c": {"type": "number"},
                "n_max": {"type": "integer", "minimum": 0},
                "k": {"type": "integer", "minimum": 1},
                "gamma_ratio": {"type": "number"},
                "branches": {"enum": ["auto", "plus"]},
                "isotonic": {
                    "type": "object",
                    "properties": {"n": _POSITIVE, "q": _POSITIVE, "r": {"type": "number", "minimum": 0}},
                    "required": ["n", "q", "r"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "algebra": {
            "type": "object",
            "properties": {
                "n_points": {"type": "integer", "minimum": 1},
                "box": _POSITIVE,
                "threshold": _POSITIVE,
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "parameter": {"enum": list(SWEEP_PARAMETERS)},
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "steps": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "audit": {
            "type": "object",
            "properties": {"n_samples": {"type": "integer", "minimum": 1}, "box": _POSITIVE},
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated configuration; ``raw`` keeps the JSON sections."""

    a: BatemanParams
    b: BatemanParams | None
    raw: dict
    seed: int

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    @property
    def composite(self) -> CompositeParams | None:
        if self.b is None:
            return None
        comp = self.section("composite")
        try:
            return CompositeParams(self.a, self.b, comp.get("omega"), comp.get("gamma"))
        except ValueError as exc:
            raise ConfigError(f"composite: {exc}") from exc

    def require_composite(self) -> CompositeParams:
        if self.b is None:
            raise ConfigError("system.b is required for this command")
        return self.composite


def _path_of(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def load_config(data: dict) -> RunConfig:
    """Validate a parsed JSON config and build the parameter objects.

    Raises:
        ConfigError: naming the offending field.
    """
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_path_of(err)}: {err.message}")
    system = data["system"]
    try:
        a = BatemanParams(**system["a"])
    except ValueError as exc:
        raise ConfigError(f"system.a: {exc}") from exc
    b = None
    if "b" in system:
        try:
            b = BatemanParams(**system["b"])
        except ValueError as exc:
            raise ConfigError(f"system.b: {exc}") from exc
    return RunConfig(a, b, data, int(data.get("seed", 0)))


def read_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return load_config(data)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BATEMANLAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# simulate

def _initial_state(cfg: RunConfig):
    init = cfg.section("initial_state")
    if init:
        cls = CHART_TYPES[Chart(init.get("chart", "XY"))]
        return cls(*init["values"])
    rng = np.random.default_rng(cfg.seed)
    return CHART_TYPES[Chart.XY](*(float(v) for v in rng.uniform(-1.0, 1.0, size=4)))


def _integrator_spec(cfg: RunConfig) -> tuple[dynamics.IntegratorSpec, Chart]:
    sec = cfg.section("integrator")
    period = cfg.a.period
    t_end = sec.get("t_end", sec.get("periods", 10.0) * period)
    dt = sec.get("dt", period / 1000.0)
    spec = dynamics.IntegratorSpec(
        method=sec.get("method", "rk4"),
        dt=dt,
        t_end=t_end,
        rtol=sec.get("rtol", 1e-10),
        atol=sec.get("atol", 1e-10),
    )
    return spec, Chart(sec.get("chart", "XY"))


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    s0 = _initial_state(cfg)
    spec, chart = _integrator_spec(cfg)
    try:
        traj = dynamics.integrate(cfg.a, s0, spec, chart)
    except StepFailure as exc:
        log.error("integration failed: %s", exc)
        return EXIT_INTEGRATION
    dynamics.write_trajectory_csv(traj, out / "trajectory.csv", cfg.a)
    drift = dynamics.conservation_drift(traj, cfg.a)
    write_json(out / "conservation.json", drift)
    for key in sorted(drift):
        print(f"{key} {drift[key]:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-algebra

def cmd_verify_algebra(cfg: RunConfig, out: Path, threshold: float | None) -> int:
    sec = cfg.section("algebra")
    threshold = threshold if threshold is not None else sec.get("threshold", 1e-6)
    b = cfg.b if cfg.b is not None else cfg.a
    reports = algebra.verify_su11(cfg.a, b, sec.get("n_points", 100), cfg.seed, sec.get("box", 2.0))
    write_json(out / "algebra.json", [r.as_dict() for r in reports])
    failed = [r for r in reports if not r.max_residual < threshold]
    for r in reports:
        status = "FAIL" if r in failed else "ok"
        print(f"{status:4s} {r.relation:18s} max_residual={r.max_residual:.3e} points={r.points_tested}")
    return EXIT_ALGEBRA if failed else EXIT_OK


# ---------------------------------------------------------------------------
# spectrum

def _mu_and_c(cfg: RunConfig, sec: dict):
    if "label" in sec:
        lab = spectra.RepresentationLabel(sec["label"]["j"], sec["label"].get("m", 0))
        return lab.mu, sec.get("c", lab.shift(cfg.a.omega))
    return sec.get("mu_a", 0.0), sec.get("c", 0.0)


def _gamma_ratio(cfg: RunConfig, sec: dict) -> float:
    if "gamma_ratio" in sec:
        return sec["gamma_ratio"]
    comp = cfg.require_composite()
    if comp.b.big_gamma == 0:
        raise ConfigError("gamma_ratio needs Gamma_B != 0")
    return comp.gamma_ratio


def _isotonic_from_config(cfg: RunConfig, sec: dict) -> spectra.IsotonicParams:
    kind = sec.get("kind", "emergent")
    if kind == "isotonic":
        if "isotonic" not in sec:
            raise ConfigError("spectrum.isotonic: required for kind 'isotonic'")
        iso = sec["isotonic"]
        return spectra.IsotonicParams(iso["n"], iso["q"], iso["r"])
    if kind == "emergent":
        mu, _c = _mu_and_c(cfg, sec)
        return spectra.emergent_isotonic_params(cfg.require_composite(), mu)
    raise ConfigError(f"spectrum.kind: numeric solution not available for {kind!r}")


def analytic_spectrum(cfg: RunConfig, sec: dict) -> spectra.SpectrumResult:
    kind = sec.get("kind", "emergent")
    n_max = sec.get("n_max", 5)
    if kind == "isotonic":
        result = spectra.isotonic_levels(_isotonic_from_config(cfg, sec), n_max)
    elif kind == "emergent":
        mu, c = _mu_and_c(cfg, sec)
        result = spectra.emergent_spectrum(cfg.require_composite(), mu, c, n_max)
    elif kind == "sw":
        result = spectra.sw_spectrum(cfg.a.m, cfg.a.omega, sec.get("mu_a", 0.0), _gamma_ratio(cfg, sec), n_max)
    else:
        result = spectra.asymptotic_spectrum(cfg.require_composite(), n_max)
    if sec.get("branches", "auto") == "plus":
        result.levels = [lv for lv in result.levels if lv.branch.split(",")[0] in (spectra.PLUS, spectra.NONE)]
    return result


def _grid(cfg: RunConfig, ip: spectra.IsotonicParams, k: int) -> spectra.GridSpec:
    sec = cfg.section("grid")
    n_points = sec.get("n_points", 4000)
    if "r_max" in sec:
        return spectra.GridSpec(sec["r_max"], n_points)
    return spectra.default_grid(ip, k, n_points)


def cmd_spectrum(cfg: RunConfig, out: Path, mode: str) -> int:
    sec = cfg.section("spectrum")
    if mode == "analytic":
        result = analytic_spectrum(cfg, sec)
        header, rows = result.rows()
        write_csv(out / "spectrum.csv", header, rows)
        write_json(out / "spectrum.json", result.as_dict())
        print(f"{len(result.levels)} levels ({result.validity})")
        return EXIT_OK

    ip = _isotonic_from_config(cfg, sec)
    k = sec.get("k", 5)
    grid = _grid(cfg, ip, k)
    if mode == "numeric":
        levels = spectra.solve_radial(ip, grid, k)
        write_csv(out / "spectrum_numeric.csv", ["n", "energy"], list(enumerate(levels)))
        write_json(out / "spectrum_numeric.json", {"levels": levels, "r_max": grid.r_max, "n_points": grid.n_points})
        return EXIT_OK

    rows = spectra.compare_radial(ip, grid, k, check=False)
    header = ["n", "analytic", "numeric", "abs_dev", "rel_dev"]
    write_csv(out / "compare.csv", header, [[r[h] for h in header] for r in rows])
    worst = max(r["rel_dev"] for r in rows)
    write_json(out / "compare.json", {"levels": rows, "max_rel_dev": worst, "tolerance": COMPARE_TOLERANCE})
    print(f"max relative deviation {worst:.3e}")
    return EXIT_SPECTRUM if not worst <= COMPARE_TOLERANCE else EXIT_OK


# ---------------------------------------------------------------------------
# sweep

def _sweep_point(cfg: RunConfig, sec: dict, parameter: str, value: float) -> list[list]:
    kind = sec.get("kind", "emergent")
    n_max = sec.get("n_max", 5)
    if kind == "sw":
        mu = sec.get("mu_a", 0.0)
        ratio = _gamma_ratio(cfg, sec) if "gamma_ratio" in sec or cfg.b is not None else 1.0
        omega = cfg.a.omega
        if parameter == "mu_a":
            mu = value
        elif parameter == "gamma_ratio":
            ratio = value
        elif parameter == "omega_b":
            omega = value
        else:
            raise ConfigError(f"sweep.parameter: {parameter!r} does not apply to kind 'sw'")
        rad_a, rad_b = spectra.sw_radicals(mu, ratio)
        result = spectra.sw_spectrum(cfg.a.m, omega, mu, ratio, n_max)
        return [
            [parameter, value, lv.n[0], lv.n[1], lv.branch, lv.energy, rad_a, rad_b]
            for lv in result.levels
        ]
    if kind != "emergent":
        raise ConfigError(f"sweep: unsupported spectrum kind {kind!r}")

    comp = cfg.require_composite()
    a, b = comp.a, comp.b
    mu, c = _mu_and_c(cfg, sec)
    if parameter == "mu_a":
        mu = value
    elif parameter == "gamma_a":
        a = BatemanParams.from_rates(a.m, a.omega, value)
    elif parameter == "gamma_ratio":
        a = BatemanParams.from_rates(a.m, a.omega, value * b.big_gamma)
    elif parameter == "omega_b":
        b = BatemanParams.from_rates(b.m, value, b.big_gamma)
    elif parameter == "c":
        c = value
    comp = CompositeParams(a, b, cfg.section("composite").get("omega"), cfg.section("composite").get("gamma"))
    result = spectra.emergent_spectrum(comp, mu, c, n_max)
    rad, _ = spectra.emergent_radical(comp, mu)
    return [[parameter, value, lv.n, lv.branch, lv.energy, rad] for lv in result.levels]


def cmd_sweep(cfg: RunConfig, out: Path, parameter: str | None, start, stop, steps) -> int:
    sec = cfg.section("spectrum")
    sw = cfg.section("sweep")
    parameter = parameter or sw.get("parameter")
    start = start if start is not None else sw.get("start")
    stop = stop if stop is not None else sw.get("stop")
    steps = steps if steps is not None else sw.get("steps")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep.parameter: must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    if start is None or stop is None or steps is None:
        raise ConfigError("sweep: start, stop and steps are required")
    if steps < 1 or start > stop or (steps > 1 and start == stop):
        raise ConfigError(f"sweep: empty range [{start}, {stop}] with {steps} steps")
    values = [float(v) for v in np.linspace(start, stop, steps)]

    def run(v):
        return _sweep_point(cfg, sec, parameter, v)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, values))
    else:
        chunks = [run(v) for v in values]
    if sec.get("kind", "emergent") == "sw":
        header = ["parameter", "value", "n_a", "n_b", "branch", "energy", "radical_a", "radical_b"]
    else:
        header = ["parameter", "value", "n", "branch", "energy", "radical"]
    write_csv(out / "sweep.csv", header, [row for chunk in chunks for row in chunk])
    print(f"{len(values)} sweep points written")
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit-surface

def cmd_audit_surface(cfg: RunConfig, out: Path) -> int:
    sec = cfg.section("audit")
    result = constraint.surface_audit(cfg.require_composite(), sec.get("n_samples", 100), cfg.seed, sec.get("box", 2.0))
    write_json(out / "surface_audit.json", result)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batemanlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default: config output.dir or '.')")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        return p

    common(sub.add_parser("simulate", help="integrate one Bateman pair and check conservation"))
    p = common(sub.add_parser("verify-algebra", help="finite-difference su(1,1) bracket checks"))
    p.add_argument("--threshold", type=float, default=None)
    p = common(sub.add_parser("spectrum", help="emergent spectra, analytic or numerical"))
    p.add_argument("--mode", choices=("analytic", "numeric", "compare"), default="analytic")
    p = common(sub.add_parser("sweep", help="spectrum over a parameter range"))
    p.add_argument("--parameter", choices=SWEEP_PARAMETERS, default=None)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    common(sub.add_parser("audit-surface", help="sample the global constraint surface"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = read_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out or cfg.section("output").get("dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "verify-algebra":
            if args.threshold is not None and not args.threshold > 0:
                raise ConfigError("--threshold must be > 0")
            return cmd_verify_algebra(cfg, out, args.threshold)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out, args.mode)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.parameter, args.start, args.stop, args.steps)
        return cmd_audit_surface(cfg, out)
    except (BatemanError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
