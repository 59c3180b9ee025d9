"""Command-line front end: ``varcalc <command> [--config PATH] [overrides]``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import jsonschema
import numpy as np

from .errors import ConfigError, VarcalcError
from .fields import ScalarField, constant, coordinate
from .functionals import eval_energy, make_dirichlet, make_perelman
from .geodesics import (
    GeodesicParams,
    compare_with_shooting,
    curve_length,
    eq1_residual,
    eq3prime_residual,
    geodesic_chart,
    geodesic_defect,
    geodesic_shoot,
    planarity_defect,
    reparametrize_by_arclength,
    s2_geodesic_closed_form,
    s3_geodesic_closed_form,
)
from .geometry import HALF_PI, TWO_PI, boundary_faces, build_chart, gauss_grid, surface_integral
from .reduced_odes import find_parallel_crossing, perelman_s2_profile, profile_field, radial_harmonic
from .variations import classify_critical_point, el_residual, neumann_residual, probe_basis

COMMANDS = ("energy", "residual", "perelman-profile", "classify", "geodesic", "verify-all")
FIELD_NAMES = ("zero", "constant", "x1", "x1_squared", "ln_r", "probe", "profile_cap", "steep_patch", "gentle_slope")

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "preset": {"type": "string"},
        "chart": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["hypersphere", "flat_box", "annulus"]},
                "dim": {"type": "integer", "minimum": 1},
                "box": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                "domain": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                "ordering": {"enum": ["azimuth_first", "latitude_first"]},
                "radii": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
        "functional": {"enum": ["dirichlet", "perelman", "dirichlet_neumann"]},
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": list(FIELD_NAMES)},
                "k": {"type": "number"},
                "coeffs": {"type": "array", "items": {"type": "number"}},
            },
        },
        "k_values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "grid_order": {"type": "integer", "minimum": 1, "maximum": 256},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "probes": {"type": "integer", "minimum": 1, "maximum": 200},
        "random_probes": {"type": "boolean"},
        "geodesic": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dim": {"enum": [2, 3]},
                "gamma": {"type": "number", "minimum": -1, "maximum": 1},
                "phase": {"type": "number"},
                "branch": {"enum": ["principal", "extended"]},
                "mode": {"enum": ["closed_form", "shoot", "compare"]},
                "samples": {"type": "integer", "minimum": 3},
                "start": {"type": "array", "items": {"type": "number"}},
                "velocity": {"type": "array", "items": {"type": "number"}},
                "length": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "out": {"type": "string"},
        "format": {"enum": ["csv", "json"]},
    },
}

PRESETS = {
    "perelman-kscan": {
        "command": "energy",
        "chart": {"kind": "hypersphere", "dim": 2},
        "functional": "perelman",
        "k_values": list(range(11)),
        "grid_order": 32,
    },
    "perelman-profile": {"command": "perelman-profile", "eps": 1e-6, "tol": 1e-10},
    "laplace-radial": {
        "command": "residual",
        "chart": {"kind": "annulus", "dim": 2, "radii": [0.5, 2.0]},
        "functional": "dirichlet",
        "field": {"name": "ln_r"},
        "grid_order": 8,
    },
    "s2-geodesic": {"command": "geodesic", "geodesic": {"dim": 2, "gamma": 0.5, "phase": 0.0, "mode": "closed_form"}},
    "s3-geodesic": {
        "command": "geodesic",
        "geodesic": {"dim": 3, "gamma": math.sqrt(2) / 2, "phase": 0.0, "mode": "closed_form"},
    },
    "neumann-demo": {
        "command": "residual",
        "chart": {"kind": "flat_box", "dim": 2},
        "functional": "dirichlet_neumann",
        "field": {"name": "x1"},
        "grid_order": 4,
    },
}

DEFAULTS = {
    "energy": {"chart": {"kind": "hypersphere", "dim": 2}, "functional": "perelman", "field": {"name": "zero"}},
    "residual": {"chart": {"kind": "hypersphere", "dim": 2}, "functional": "perelman", "field": {"name": "zero"}, "grid_order": 8},
    "perelman-profile": {"eps": 1e-6, "tol": 1e-10},
    "classify": {"chart": {"kind": "hypersphere", "dim": 2}, "field": {"name": "zero"}, "grid_order": 32, "eps": 1e-6, "tol": 1e-10},
    "geodesic": {"geodesic": {"dim": 3, "gamma": math.sqrt(2) / 2, "phase": 0.0, "mode": "closed_form"}},
    "verify-all": {},
}


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    if isinstance(x, (str, bool)) or x is None:
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)
    footer: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([fmt(x) for x in row])
        for key, val in self.footer.items():
            buf.write(f"# {key}={fmt(val)}\r\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "columns": list(self.header),
            "rows": [[_jsonable(x) for x in row] for row in self.rows],
            "summary": {k: _jsonable(v) for k, v in self.footer.items()},
        }
        return json.dumps(doc, indent=2) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def render(result, fmt_name: str) -> str:
    if isinstance(result, Table):
        return result.to_json() if fmt_name == "json" else result.to_csv()
    return json.dumps(_jsonable(result), indent=2) + "\n"


# ---------------------------------------------------------------------------
# configuration


def seed_from_env() -> int:
    raw = os.environ.get("VARCALC_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"VARCALC_SEED must be an integer, got {raw!r}") from None


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(command: str, path: Optional[str], preset: Optional[str], overrides: dict) -> dict:
    user = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!r} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
    validate(user)
    preset = preset or user.get("preset")
    cfg = copy.deepcopy(DEFAULTS[command])
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        if PRESETS[preset]["command"] != command:
            raise ConfigError(f"preset {preset!r} belongs to command {PRESETS[preset]['command']!r}")
        cfg = merge(cfg, PRESETS[preset])
        cfg["preset"] = preset
    cfg = merge(cfg, user)
    cfg = merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    cfg.setdefault("command", command)
    if cfg["command"] != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def chart_from(cfg: dict):
    spec = dict(cfg["chart"])
    kind = spec.pop("kind")
    dim = spec.pop("dim", 2)
    try:
        return build_chart(kind, dim, **spec)
    except VarcalcError as exc:
        raise ConfigError(str(exc)) from None


def functional_from(cfg: dict, chart):
    name = cfg.get("functional", "perelman")
    if name == "perelman":
        if chart.kind != "hypersphere":
            raise ConfigError("the Perelman functional needs a hypersphere chart")
        return make_perelman(chart)
    E = make_dirichlet(chart)
    if name == "dirichlet_neumann":
        if chart.kind != "flat_box":
            raise ConfigError("boundary integrands need a flat_box chart")
        E = E.with_boundary(lambda x, v: 2.0 * v, lambda x, v: np.full(np.shape(v), 2.0))
    return E


def latitude_axis(chart) -> int:
    if chart.kind != "hypersphere" or chart.intrinsic_dim != 2:
        raise ConfigError("this field is defined on the 2-sphere only")
    return 1 - chart.cyclic_axis


def field_from(cfg: dict, chart) -> ScalarField:
    spec = cfg.get("field", {"name": "zero"})
    name = spec["name"]
    if name == "zero":
        return constant(chart, 0.0)
    if name == "constant":
        return constant(chart, spec.get("k", 0.0))
    if name == "x1":
        return coordinate(chart, 0)
    if name == "x1_squared":
        return ScalarField(chart, lambda u: u[0] ** 2, lambda u: np.stack([2 * u[0]] + [0 * u[0]] * (len(u) - 1)), label="x1^2")
    if name == "ln_r":
        if chart.kind not in ("annulus", "flat_box"):
            raise ConfigError("ln_r needs a planar chart")
        v, grad = radial_harmonic(2).ambient()
        return ScalarField.from_ambient(chart, v, grad, label="ln_r")
    if name == "probe":
        coeffs = spec.get("coeffs")
        if not coeffs:
            raise ConfigError("probe fields need a non-empty coeffs list")
        basis = probe_basis(chart, len(coeffs))
        out = 0.0 * basis[0]
        for c, b in zip(coeffs, basis):
            out = out + c * b
        return ScalarField(chart, out.f, out.partials, label="probe")
    if name == "steep_patch":
        ax = latitude_axis(chart)
        return _latitude_field(chart, ax, lambda t: -2 * t - 0.6 * np.cos(t), lambda t: -2 + 0.6 * np.sin(t), "steep_patch")
    if name == "gentle_slope":
        ax = latitude_axis(chart)
        return _latitude_field(chart, ax, lambda t: -1.42 * t, lambda t: np.full_like(t, -1.42), "gentle_slope")
    raise ConfigError(f"field {name!r} is not available for this command")


def _latitude_field(chart, ax, f, df, label):
    def partials(u):
        out = np.zeros(u.shape)
        out[ax] = df(u[ax])
        return out

    return ScalarField(chart, lambda u: f(u[ax]), partials, label=label)


# ---------------------------------------------------------------------------
# commands


def cmd_energy(cfg: dict):
    chart = chart_from(cfg)
    E = functional_from(cfg, chart)
    grid = gauss_grid(chart, cfg.get("grid_order", 32))
    if "k_values" in cfg:
        table = Table(["k", "energy"])
        values = []
        for k in cfg["k_values"]:
            e = eval_energy(E, constant(chart, k), grid)
            values.append(e)
            table.rows.append([float(k), e])
        table.footer["strictly_decreasing"] = bool(np.all(np.diff(values) < 0))
        return table
    v = field_from(cfg, chart)
    return Table(["field", "energy"], [[v.label, eval_energy(E, v, grid)]])


def cmd_residual(cfg: dict):
    chart = chart_from(cfg)
    E = functional_from(cfg, chart)
    v = field_from(cfg, chart)
    order = cfg.get("grid_order", 8)
    if E.boundary is not None:
        table = Table(["face", "s", "residual"])
        sup = {}
        for face in boundary_faces(chart, order):
            s_nodes = np.delete(face.nodes, face.axis, axis=0)
            for j in range(s_nodes.shape[1]):
                r = neumann_residual(E, v, face.face_id, s_nodes[:, j])
                table.rows.append([face.face_id, ";".join(fmt(x) for x in s_nodes[:, j]), r])
                sup[face.face_id] = max(sup.get(face.face_id, 0.0), abs(r))
        for fid, val in sup.items():
            table.footer[f"sup_{fid}"] = val
        return table
    grid = gauss_grid(chart, order)
    res = np.atleast_1d(el_residual(E, v, grid.nodes))
    m = chart.intrinsic_dim
    table = Table([f"u{i + 1}" for i in range(m)] + ["residual"])
    for j in range(res.size):
        table.rows.append(list(grid.nodes[:, j]) + [res[j]])
    table.footer["sup"] = float(np.max(np.abs(res)))
    return table


def cmd_perelman_profile(cfg: dict):
    eps, tol = cfg.get("eps", 1e-6), cfg.get("tol", 1e-10)
    try:
        sol = perelman_s2_profile(eps, tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if sol.status == "step_failure":
        raise VarcalcError(f"profile integration failed: {sol.message}")
    table = Table(["u2", "w", "f"])
    for t, (w, f) in zip(sol.ts, sol.ys):
        table.rows.append([t, w, f])
    table.footer["status"] = sol.status
    table.footer["blow_up_t"] = sol.t_stop if sol.status == "blew_up" else float("nan")
    table.footer["u2_star_sqrt2"] = find_parallel_crossing(sol, math.sqrt(2))
    table.footer["w_at_0"] = float(sol(0.0)[0])
    return table


def cmd_classify(cfg: dict):
    spec = cfg.get("field", {"name": "zero"})
    order = cfg.get("grid_order", 32)
    extra = {}
    if spec["name"] == "profile_cap":
        eps, tol = cfg.get("eps", 1e-6), cfg.get("tol", 1e-10)
        sol = perelman_s2_profile(eps, tol)
        u_star = find_parallel_crossing(sol, math.sqrt(2))
        chart = build_chart("hypersphere", 2, domain=[(0.0, TWO_PI), (-HALF_PI + eps, u_star)])
        v = profile_field(chart, sol, axis=1)
        extra = {"u2_star_sqrt2": u_star, "band": [-HALF_PI + eps, u_star]}
    else:
        chart = chart_from(cfg)
        v = field_from(cfg, chart)
    if chart.kind != "hypersphere":
        raise ConfigError("classification needs a hypersphere chart")
    E = make_perelman(chart)
    grid = gauss_grid(chart, order)
    count = cfg.get("probes", 25)
    seed = seed_from_env() if cfg.get("random_probes", False) else None
    report = classify_critical_point(E, v, grid, probe_basis(chart, count, seed))
    doc = {"field": v.label, **report.to_dict(), **extra}
    if seed is not None:
        doc["seed"] = seed
    return doc


def cmd_geodesic(cfg: dict):
    g = cfg["geodesic"]
    dim, mode = g.get("dim", 3), g.get("mode", "closed_form")
    samples = g.get("samples", 2001)
    tol = cfg.get("tol", 1e-12)
    chart = geodesic_chart(dim)
    footer = {}
    gamma = g.get("gamma", math.sqrt(2) / 2)
    try:
        params = GeodesicParams(gamma, g.get("phase", 0.0), g.get("branch", "principal"))
    except VarcalcError as exc:
        raise ConfigError(str(exc)) from None
    if mode == "shoot":
        a = g.get("start", [0.0] * dim)
        psi = g.get("velocity", [1.0] + [0.0] * (dim - 1))
        if len(a) != dim or len(psi) != dim:
            raise ConfigError(f"start and velocity need {dim} entries")
        curve = geodesic_shoot(chart, a, psi, g.get("length", math.pi), tol, samples)
        footer["status"] = curve.status
        arc = curve
    else:
        if dim == 3 and abs(gamma) >= 1:
            raise ConfigError("S^3 closed forms need |gamma| < 1")
        make = s2_geodesic_closed_form if dim == 2 else s3_geodesic_closed_form
        curve = make(params, samples)
        arc = curve if curve.param_kind == "arclength" and curve.trace is None else reparametrize_by_arclength(chart, curve)
        if mode == "compare":
            if dim != 2 or not 0 < abs(gamma) < 1:
                raise ConfigError("compare mode needs an S^2 geodesic with 0 < |gamma| < 1")
            footer["sup_deviation"] = compare_with_shooting(params, 2, tol, samples)[0]
    footer["length"] = curve_length(chart, curve)
    footer["planarity"] = planarity_defect(curve.ambient_pts)
    footer["defect"] = geodesic_defect(chart, arc)
    if dim == 3 and 0 < abs(gamma) < 1 and mode != "shoot":
        T = params.half_width(3)
        t = np.linspace(-T, T, 102)[1:-1]
        footer["eq1_max"] = float(np.max(np.abs(eq1_residual(params, t))))
        footer["eq3prime_max"] = float(np.max(np.abs(eq3prime_residual(params, t))))
    else:
        footer["eq1_max"] = float("nan")
        footer["eq3prime_max"] = float("nan")
    n = chart.ambient_dim
    table = Table(["t"] + [f"u{i + 1}" for i in range(dim)] + [f"x{i + 1}" for i in range(n)], footer=footer)
    for j in range(len(curve)):
        table.rows.append([curve.ts[j]] + list(curve.chart_pts[:, j]) + list(curve.ambient_pts[:, j]))
    return table


def cmd_verify_all(cfg: dict):
    """Quick end-to-end battery; exit code 1 when any check fails."""
    checks = {}

    def record(name, value, threshold, ok):
        checks[name] = {"value": float(value), "threshold": float(threshold), "pass": bool(ok)}

    S2 = build_chart("hypersphere", 2)
    S3 = build_chart("hypersphere", 3)
    for chart, exact in ((S2, 4 * math.pi), (S3, 2 * math.pi**2)):
        err = abs(surface_integral(chart, gauss_grid(chart, 32), lambda u: 1.0) - exact)
        record(f"volume_{chart.name}", err, 1e-10, err < 1e-10)
    E = make_perelman(S2)
    grid = gauss_grid(S2, 32)
    errs = [abs(eval_energy(E, constant(S2, k), grid) / (8 * math.pi * math.exp(-k)) - 1) for k in range(11)]
    record("perelman_kscan_rel", max(errs), 1e-8, max(errs) < 1e-8)

    A = build_chart("annulus", 2)
    v, grad = radial_harmonic(2).ambient()
    lnr = ScalarField.from_ambient(A, v, grad)
    res = float(np.max(np.abs(el_residual(make_dirichlet(A), lnr, gauss_grid(A, 8).nodes))))
    record("laplace_ln_r_sup", res, 1e-5, res < 1e-5)

    sol = perelman_s2_profile(1e-6, 1e-10)
    ok = sol.status == "blew_up" and sol.t_stop < HALF_PI and sol.ys[-1, 0] <= -1e3
    record("profile_blow_up_t", sol.t_stop, HALF_PI, ok)
    u_star = find_parallel_crossing(sol, math.sqrt(2))
    u_star2 = find_parallel_crossing(perelman_s2_profile(1e-6, 5e-11), math.sqrt(2))
    record("u2_star_tol_halving", abs(u_star - u_star2), 1e-8, abs(u_star - u_star2) < 1e-8)

    dev = max(compare_with_shooting(GeodesicParams(g), 2)[0] for g in (0.25, 0.5, 0.75))
    record("s2_shoot_vs_closed", dev, 1e-6, dev < 1e-6)
    for g in (0.3, 0.5, math.sqrt(2) / 2):
        c = s3_geodesic_closed_form(GeodesicParams(g))
        L = curve_length(None, c)
        record(f"s3_length_gamma_{g:.4f}", abs(L - math.pi), 1e-6, abs(L - math.pi) < 1e-6)
        p = planarity_defect(c.ambient_pts)
        record(f"s3_planarity_gamma_{g:.4f}", p, 1e-8, p < 1e-8)
    ok_all = all(c["pass"] for c in checks.values())
    return {"all_pass": ok_all, "checks": checks}


HANDLERS = {
    "energy": cmd_energy,
    "residual": cmd_residual,
    "perelman-profile": cmd_perelman_profile,
    "classify": cmd_classify,
    "geodesic": cmd_geodesic,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varcalc", description="Variational-calculus numerical workbench.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named experiment preset")
    parser.add_argument("--grid-order", type=int, dest="grid_order", help="Gauss order per axis")
    parser.add_argument("--tol", type=float, help="integrator tolerance")
    parser.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), dest="format", help="table format")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"grid_order": args.grid_order, "tol": args.tol, "out": args.out, "format": args.format}
    try:
        cfg = load_config(args.command, args.config, args.preset, overrides)
        result = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"varcalc: config error: {exc}", file=sys.stderr)
        return 2
    except (VarcalcError, ValueError, ArithmeticError) as exc:
        print(f"varcalc: numerical failure: {exc}", file=sys.stderr)
        return 1
    text = render(result, cfg.get("format", "csv"))
    out = cfg.get("out")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if isinstance(result, dict) and result.get("all_pass") is False:
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
