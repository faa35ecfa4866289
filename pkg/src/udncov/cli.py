"""Command line front end: parameter sweeps, MC validation and single points.

Configs are flat ``key = value`` text with ``#`` comments.  One key may hold
a grid ``start:stop:points:log|lin`` (or a comma list); that key is the sweep
axis.  Lattice files add ``[name]`` sections, each inheriting the keys above
the first section.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import coverage as cov
from .channel import (AllLos, AllNlos, Buildings, FadingSpec, PathlossParams, Step,
                      ThreeGpp)
from .coverage import Method, NetworkConfig
from .laplace import AssociationPolicy
from .montecarlo import McConfig, simulate_coverage
from .quadrature import QuadratureError
from .specfun import SeriesError, Tolerances

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
HEADER = ["axis", "value", "policy", "method", "coverage", "ase", "err", "flag"]
AXES = ("lambda", "m", "h", "theta", "theta_db", "building_density")
METHODS = ("analytic", "bound", "closed_form", "monte_carlo")

DEFAULTS = {
    "lambda": "1e-3", "theta_db": "0", "alpha": "4", "h": "0", "m": "1", "n_t": "1",
    "los_model": "all_nlos", "policy": "closest", "methods": "analytic",
    "trials": "100000", "seed": "12345", "rel_tol": "1e-8", "abs_tol": "1e-12",
}
KNOWN = set(DEFAULTS) | {
    "theta", "alpha_los", "alpha_nlos", "rician_k", "step_d", "building_density",
    "building_height", "window_radius",
}

BUILTIN_LATTICE = """
# 2 policies x 2 heights x 3 (LOS model, m) pairs at theta = 0 dB, alpha = 4
lambda = 2e-4
theta_db = 0
alpha = 4
methods = analytic, monte_carlo
trials = 100000
"""
for _pol in ("closest", "strongest"):
    for _h in (0, 20):
        for _model, _m in (("all_nlos", 1), ("3gpp", 10), ("all_los", 10)):
            BUILTIN_LATTICE += (f"\n[{_pol}-h{_h}-{_model}-m{_m}]\npolicy = {_pol}\n"
                                f"h = {_h}\nlos_model = {_model}\nm = {_m}\n")


class ConfigError(ValueError):
    pass


def parse_text(text: str):
    """Return (globals, [(section, keys), ...])."""
    top: dict = {}
    sections: list = []
    current = top
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = {}
            sections.append((line[1:-1].strip(), current))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KNOWN:
            raise ConfigError(f"unknown key '{key}' (line {lineno})")
        current[key] = value
    return top, sections


def parse_grid(key: str, text: str) -> list:
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 4 or parts[3] not in ("log", "lin"):
                raise ValueError("grid must be start:stop:points:log|lin")
            start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError("grid needs at least one point")
            if parts[3] == "log":
                if start <= 0 or stop <= 0:
                    raise ValueError("log grid needs positive bounds")
                values = list(np.logspace(math.log10(start), math.log10(stop), n))
            else:
                values = list(np.linspace(start, stop, n))
        else:
            values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {exc}") from None
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"bad value for '{key}': grid must be strictly increasing")
    return values


def _num(keys, key, cast=float):
    try:
        value = cast(keys[key])
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for '{key}': {keys[key]!r}") from None
    return value


def _int(keys, key):
    v = _num(keys, key)
    if v != int(v):
        raise ConfigError(f"bad value for '{key}': must be an integer")
    return int(v)


def _los_model(keys):
    name = keys["los_model"].lower()
    if name == "all_los":
        return AllLos()
    if name == "all_nlos":
        return AllNlos()
    if name == "3gpp":
        return ThreeGpp()
    if name == "step":
        return Step(_num(keys, "step_d") if "step_d" in keys else 18.0)
    if name == "buildings":
        for k in ("building_density", "building_height"):
            if k not in keys:
                raise ConfigError(f"missing key '{k}' for buildings model")
        return Buildings(_num(keys, "building_density"), _num(keys, "building_height"))
    raise ConfigError(f"bad value for 'los_model': {keys['los_model']!r}")


@dataclass(frozen=True)
class Point:
    """A fully resolved scenario plus its run settings."""
    cfg: NetworkConfig
    mc: McConfig
    tol: Tolerances
    methods: tuple


RANGES = {
    "lambda": (lambda v: v > 0, "must be positive"),
    "theta": (lambda v: v > 0, "must be positive"),
    "theta_db": (math.isfinite, "must be finite"),
    "alpha": (lambda v: v > 2, "must exceed 2"),
    "alpha_los": (lambda v: v > 2, "must exceed 2"),
    "alpha_nlos": (lambda v: v > 2, "must exceed 2"),
    "h": (lambda v: v >= 0, "must be non-negative"),
    "m": (lambda v: v >= 1, "must be >= 1"),
    "n_t": (lambda v: v >= 1, "must be >= 1"),
    "rician_k": (lambda v: v >= 0, "must be non-negative"),
    "step_d": (lambda v: v > 0, "must be positive"),
    "building_density": (lambda v: v >= 0, "must be non-negative"),
    "building_height": (lambda v: v >= 0, "must be non-negative"),
    "trials": (lambda v: v >= 1, "must be >= 1"),
    "seed": (lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer"),
    "window_radius": (lambda v: v > 0, "must be positive"),
    "rel_tol": (lambda v: v > 0, "must be positive"),
    "abs_tol": (lambda v: v >= 0, "must be non-negative"),
}


def _check_ranges(keys):
    for key, (ok, what) in RANGES.items():
        if key in keys and not ok(_num(keys, key)):
            raise ConfigError(f"bad value for '{key}': {keys[key]!r} {what}")


def build_point(keys: dict, policy: AssociationPolicy) -> Point:
    _check_ranges(keys)
    theta = _num(keys, "theta") if "theta" in keys else 10 ** (_num(keys, "theta_db") / 10)
    alpha = _num(keys, "alpha")
    try:
        pathloss = PathlossParams(_num(keys, "alpha_los") if "alpha_los" in keys else alpha,
                                  _num(keys, "alpha_nlos") if "alpha_nlos" in keys else alpha,
                                  _num(keys, "h"))
        rician = _num(keys, "rician_k") if "rician_k" in keys else None
        fading = FadingSpec(m=_int(keys, "m"), n_t=_int(keys, "n_t"), rician_k=rician)
        cfg = NetworkConfig(_num(keys, "lambda"), theta, pathloss, fading, _los_model(keys), policy)
        seed = int(os.environ.get("UDNCOV_SEED", keys["seed"]))
        radius = _num(keys, "window_radius") if "window_radius" in keys else None
        mc = McConfig(_int(keys, "trials"), seed, radius)
        tol = Tolerances(rel_tol=_num(keys, "rel_tol"), abs_tol=_num(keys, "abs_tol"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    methods = tuple(m.strip() for m in keys["methods"].split(","))
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ConfigError(f"bad value for 'methods': {keys['methods']!r}")
    return Point(cfg, mc, tol, methods)


def _policies(keys) -> list:
    name = keys["policy"].lower()
    if name == "both":
        return [AssociationPolicy.CLOSEST, AssociationPolicy.STRONGEST]
    try:
        return [AssociationPolicy(name)]
    except ValueError:
        raise ConfigError(f"bad value for 'policy': {keys['policy']!r}") from None


@dataclass
class SweepSpec:
    axis: str
    grid: list
    base: dict
    policies: list = field(default_factory=list)

    def points(self):
        for policy in self.policies:
            for value in self.grid:
                keys = dict(self.base)
                keys[self.axis] = repr(float(value))
                if self.axis == "theta_db":
                    keys.pop("theta", None)
                yield value, build_point(keys, policy)


def _merge(*layers) -> dict:
    """DEFAULTS overlaid with each layer; an explicit theta replaces the default theta_db."""
    keys = dict(DEFAULTS)
    given = {}
    for layer in layers:
        given.update(layer)
    if "theta" in given and "theta_db" in given:
        raise ConfigError("give either 'theta' or 'theta_db', not both")
    if "theta" in given:
        keys.pop("theta_db")
    keys.update(given)
    return keys


def sweep_spec_from_text(text: str) -> SweepSpec:
    top, sections = parse_text(text)
    if sections:
        raise ConfigError("sweep configs take no [sections]")
    keys = _merge(top)
    grids = [k for k, v in keys.items() if ("," in v or ":" in v) and k in AXES]
    if len(grids) > 1:
        raise ConfigError(f"only one sweep axis allowed, got {', '.join(grids)}")
    if grids:
        axis = grids[0]
        grid = parse_grid(axis, keys[axis])
    else:
        axis = "lambda"
        grid = [_num(keys, "lambda")]
    if axis == "m":
        if any(v != int(v) for v in grid):
            raise ConfigError("bad value for 'm': grid values must be integers")
    spec = SweepSpec(axis, grid, keys, _policies(keys))
    list(spec.points())  # surface config errors before any work starts
    return spec


def closed_form(cfg: NetworkConfig, tol: Tolerances):
    """The closed or simplified form that applies to ``cfg``; None if there is none."""
    pl, fad, model = cfg.pathloss, cfg.fading, cfg.los_model
    if isinstance(model, Step):
        return cov.coverage_simplified_3gpp(cfg, tol)
    if fad.n_t != 1 or not pl.is_single_slope:
        return None
    alpha = pl.alpha_los
    rayleigh = isinstance(model, AllNlos) or (fad.m == 1 and isinstance(model, AllLos))
    if pl.bs_height == 0 and (isinstance(model, AllLos) or rayleigh):
        m = 1 if rayleigh else fad.m
        return cov.CoverageResult(cov.coverage_los_closed(cfg.theta, m, alpha, cfg.policy),
                                  Method.CLOSED_FORM)
    if rayleigh:
        v = cov.coverage_elevated(cfg.theta, cfg.lam, pl.bs_height, alpha, cfg.policy, tol)
        return cov.CoverageResult(v, Method.CLOSED_FORM)
    return None


def evaluate(point: Point, method: str):
    """(value, err, flag) for one method at one point."""
    cfg, tol = point.cfg, point.tol
    try:
        if method == "analytic":
            r = cov.coverage_general(cfg, tol)
        elif method == "bound":
            r = cov.coverage_alzer_upper(cfg, tol)
        elif method == "closed_form":
            r = closed_form(cfg, tol)
            if r is None:
                return None, None, "not_applicable"
        else:
            e = simulate_coverage(cfg, point.mc)
            return e.mean, e.ci_half_width, "ok"
    except (QuadratureError, SeriesError, ArithmeticError, ValueError) as exc:
        return None, None, f"numeric_error: {exc}"
    return r.value, r.err_estimate, "ok"


def _row_task(args):
    axis, value, point, method = args
    v, err, flag = evaluate(point, method)
    a = cov.ase(point.cfg.theta, point.cfg.lam, v) if v is not None else None
    return [axis, _fmt(value), point.cfg.policy.value, method, _fmt(v), _fmt(a), _fmt(err), flag]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(x)
    return f"{float(x):.10g}"


def _map(tasks, jobs):
    if jobs <= 1:
        return [_row_task(t) for t in tasks]
    with ProcessPoolExecutor(jobs) as pool:
        return list(pool.map(_row_task, tasks))  # map keeps grid order


def run_sweep(spec: SweepSpec, out, jobs: int = 1) -> int:
    tasks = [(spec.axis, value, point, method)
             for value, point in spec.points() for method in point.methods]
    rows = _map(tasks, jobs)
    _write(out, rows)
    return EXIT_NUMERIC if any(r[-1].startswith("numeric_error") for r in rows) else EXIT_OK


def _write(out, rows):
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        w.writerows(rows)


def lattice_points(text: str) -> list:
    top, sections = parse_text(text)
    if not sections:
        raise ConfigError("lattice needs at least one [section]")
    points = []
    for name, keys in sections:
        merged = _merge(top, keys)
        for k in AXES:
            if k in merged and ("," in merged[k] or ":" in merged[k]):
                raise ConfigError(f"lattice point [{name}]: '{k}' must be a single value")
        pols = _policies(merged)
        if len(pols) != 1:
            raise ConfigError(f"lattice point [{name}]: policy must be closest or strongest")
        p = build_point(merged, pols[0])
        # one independent MC stream per lattice point
        points.append((name, replace(p, mc=replace(p.mc, seed=(p.mc.seed + len(points)) % 2**64))))
    return points


def validate(points, out, report=None) -> int:
    """Compare the analytic route with MC at every point; nonzero exit on any miss."""
    report = sys.stdout if report is None else report
    rows = []
    failed = numeric = 0
    for i, (name, point) in enumerate(points):
        v, err, flag = evaluate(point, "analytic")
        e = simulate_coverage(point.cfg, point.mc)
        if v is None:
            status = flag
            numeric += 1
            detail = flag
        else:
            z = (v - e.mean) / e.ci_half_width * 1.959963984540054 if e.ci_half_width > 0 else 0.0
            certified = point.tol.rel_tol * abs(v) + point.tol.abs_tol
            if certified > 0.1 * e.ci_half_width:
                status = "fail: analytic tolerance too loose for the MC resolution"
            elif not e.contains(v):
                status = "fail: analytic value outside MC 95% CI"
            else:
                status = "pass"
            detail = f"analytic={v:.6f} mc={e.mean:.6f}+-{e.ci_half_width:.6f} z={z:+.2f}"
            if status != "pass":
                failed += 1
        print(f"[{i:2d}] {name:32s} {detail}  {status}", file=report)
        pol = point.cfg.policy.value
        rows.append([name, str(i), pol, "analytic", _fmt(v),
                     _fmt(cov.ase(point.cfg.theta, point.cfg.lam, v) if v is not None else None),
                     _fmt(err), status])
        rows.append([name, str(i), pol, "monte_carlo", _fmt(e.mean),
                     _fmt(cov.ase(point.cfg.theta, point.cfg.lam, e.mean)),
                     _fmt(e.ci_half_width), "ok"])
    _write(out, rows)
    if numeric:
        return EXIT_NUMERIC
    return EXIT_VALIDATION if failed else EXIT_OK


def point_json(point: Point) -> dict:
    cfg = point.cfg
    out = {"lambda": cfg.lam, "theta": cfg.theta, "policy": cfg.policy.value, "methods": {}}
    for method in METHODS:
        v, err, flag = evaluate(point, method)
        out["methods"][method] = {"coverage": v, "err": err, "flag": flag,
                                  "ase": cov.ase(cfg.theta, cfg.lam, v) if v is not None else None}
    return out


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="udncov", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    sw = sub.add_parser("sweep", help="evaluate a parameter sweep into a CSV table")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=1)
    va = sub.add_parser("validate", help="check analytic values against Monte Carlo")
    va.add_argument("--lattice", default=None, help="lattice file (default: builtin 12 points)")
    va.add_argument("--out", required=True)
    pt = sub.add_parser("point", help="print every method's value for one config as JSON")
    pt.add_argument("--config", required=True)
    args = ap.parse_args(argv)

    try:
        if args.cmd == "sweep":
            return run_sweep(sweep_spec_from_text(_read(args.config)), args.out, args.jobs)
        if args.cmd == "validate":
            text = BUILTIN_LATTICE if args.lattice is None else _read(args.lattice)
            return validate(lattice_points(text), args.out)
        spec = sweep_spec_from_text(_read(args.config))
        if len(spec.grid) != 1 or len(spec.policies) != 1:
            raise ConfigError("point needs a single value per key and a single policy")
        _, point = next(spec.points())
        print(json.dumps(point_json(point), indent=2))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
