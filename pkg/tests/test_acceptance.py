"""End-to-end acceptance battery; each test prints one PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest
from helpers import random_quadratic, trig_field

from varcalc import cli
from varcalc.fields import ScalarField, constant
from varcalc.functionals import eval_energy, make_dirichlet, make_perelman
from varcalc.geodesics import (
    GeodesicParams,
    compare_with_shooting,
    curve_length,
    eq1_residual,
    eq3prime_residual,
    geodesic_defect,
    planarity_defect,
    reparametrize_by_arclength,
    s2_geodesic_closed_form,
    s3_geodesic_closed_form,
)
from varcalc.geometry import HALF_PI, TWO_PI, build_chart, gauss_grid, surface_integral
from varcalc.reduced_odes import (
    find_parallel_crossing,
    perelman_s2_profile,
    profile_field,
    radial_harmonic,
    radial_laplace_residual,
)
from varcalc.variations import (
    classify_critical_point,
    el_residual,
    gateaux_fd,
    gateaux_first,
    o2_split,
    perelman_second_variation_o1,
    second_variation,
)

GATEAUX_STEPS = (1e-3, 5e-4, 2.5e-4)


def test_criterion_01_quadrature(acceptance):
    start = time.perf_counter()
    s2 = build_chart("hypersphere", 2)
    s3 = build_chart("hypersphere", 3)
    e2 = abs(surface_integral(s2, gauss_grid(s2, 32), lambda u: 1.0) - 4 * math.pi)
    e3 = abs(surface_integral(s3, gauss_grid(s3, 32), lambda u: 1.0) - 2 * math.pi**2)
    elapsed = time.perf_counter() - start
    ok = e2 < 1e-10 and e3 < 1e-10 and elapsed < 1.0
    acceptance(1, "quadrature ground truth", ok, f"err S2={e2:.1e}, S3={e3:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_perelman_kscan(acceptance):
    start = time.perf_counter()
    s2 = build_chart("hypersphere", 2)
    E = make_perelman(s2)
    grid = gauss_grid(s2, 32)
    values = np.array([eval_energy(E, constant(s2, k), grid) for k in range(11)])
    exact = 8 * math.pi * np.exp(-np.arange(11.0))
    rel = float(np.max(np.abs(values / exact - 1)))
    decreasing = bool(np.all(np.diff(values) < 0))
    elapsed = time.perf_counter() - start
    ok = rel < 1e-8 and decreasing and elapsed < 1.0
    acceptance(2, "Perelman infimum scan", ok, f"max rel err={rel:.1e}, decreasing={decreasing}, {elapsed:.2f}s")
    assert ok


def _gateaux_errors(E, v, phi, grid):
    exact = gateaux_first(E, v, phi, grid)
    errs = [abs(gateaux_fd(E, v, phi, grid, h) - exact) for h in GATEAUX_STEPS]
    return exact, errs


def test_criterion_03_gateaux_consistency(acceptance):
    rng = np.random.default_rng(3)
    s2 = build_chart("hypersphere", 2)
    box = build_chart("flat_box", 2)
    PE, DE = make_perelman(s2), make_dirichlet(box)
    gs2, gbox = gauss_grid(s2, 24), gauss_grid(box, 16)
    worst_order = math.inf
    worst_dirichlet = 0.0
    for i in range(5):
        v, phi = trig_field(s2, rng), random_quadratic(s2, rng)
        _, errs = _gateaux_errors(PE, v, phi, gs2)
        orders = [math.log2(errs[j] / errs[j + 1]) for j in range(2)]
        worst_order = min(worst_order, *orders)

        v, phi = random_quadratic(box, rng), trig_field(box, rng)
        exact, errs = _gateaux_errors(DE, v, phi, gbox)
        # E is quadratic: the central difference is exact, so the error must
        # sit at the rounding floor for every h (an unbounded order).
        worst_dirichlet = max(worst_dirichlet, max(errs) / max(1.0, abs(exact)))
    ok = worst_order >= 1.8 and worst_dirichlet < 1e-9
    acceptance(
        3,
        "Gateaux consistency",
        ok,
        f"Perelman min order={worst_order:.3f}, Dirichlet rel err={worst_dirichlet:.1e} (exact for quadratic E)",
    )
    assert ok


def test_criterion_04_euler_lagrange(acceptance):
    ann = build_chart("annulus", 2)
    v, grad = radial_harmonic(2).ambient()
    lnr = ScalarField.from_ambient(ann, v, grad)
    sup = float(np.max(np.abs(el_residual(make_dirichlet(ann), lnr, gauss_grid(ann, 12).nodes))))
    r = np.linspace(0.5, 2.0, 31)
    radial = max(float(np.max(np.abs(radial_laplace_residual(radial_harmonic(n, 1.3, 0.2), r)))) for n in range(2, 6))
    ok = sup < 1e-5 and radial < 1e-12
    acceptance(4, "Euler-Lagrange residual", ok, f"ln r sup={sup:.1e}, radial n=2..5 max={radial:.1e}")
    assert ok


def test_criterion_05_perelman_profile(acceptance):
    start = time.perf_counter()
    fine = perelman_s2_profile(1e-8, 1e-12)
    law = []
    for eps in (1e-4, 1e-5, 1e-6):
        sol = perelman_s2_profile(eps)
        # start value set from the expansion, and the value reached by a run
        # started much closer to the pole
        law.append(abs(sol.ys[0, 0] / (-eps / 2) - 1))
        law.append(abs(fine(-HALF_PI + eps)[0] / (-eps / 2) - 1))
    sol = perelman_s2_profile(1e-6, 1e-10)
    sol_tight = perelman_s2_profile(1e-6, 1e-12)
    sol_half = perelman_s2_profile(1e-6, 5e-11)
    blew = sol.status == "blew_up" and sol.t_stop < HALF_PI and sol.ys[-1, 0] <= -1e3
    dw0 = abs(sol(0.0)[0] - sol_tight(0.0)[0])
    du = abs(find_parallel_crossing(sol, math.sqrt(2)) - find_parallel_crossing(sol_half, math.sqrt(2)))
    elapsed = time.perf_counter() - start
    ok = max(law) <= 0.1 and blew and dw0 < 1e-8 and du < 1e-8 and elapsed < 2.0
    acceptance(
        5,
        "Perelman profile ODE",
        ok,
        f"start-law dev={max(law):.1e}, t_stop=pi/2-{HALF_PI - sol.t_stop:.2e}, "
        f"w(0) diff={dw0:.1e}, u2* diff={du:.1e}, {elapsed:.2f}s",
    )
    assert ok


def test_criterion_06_truncation_classification(acceptance):
    eps = 1e-6
    sol = perelman_s2_profile(eps, 1e-10)
    u_star = find_parallel_crossing(sol, math.sqrt(2))
    band = build_chart("hypersphere", 2, domain=[(0.0, TWO_PI), (-HALF_PI + eps, u_star)])
    v = profile_field(band, sol, axis=1)
    cap = classify_critical_point(make_perelman(band), v, gauss_grid(band, 32))

    s2 = build_chart("hypersphere", 2)
    steep = ScalarField(
        s2,
        lambda u: -2 * u[1] - 0.6 * np.cos(u[1]),
        lambda u: np.stack([np.zeros_like(u[0]), -2 + 0.6 * np.sin(u[1])]),
    )
    saddle = classify_critical_point(make_perelman(s2), steep, gauss_grid(s2, 32))
    ok = (
        cap.sup_grad_sq < 2
        and cap.verdict == "strict_local_min_candidate"
        and saddle.verdict == "saddle"
        and saddle.witness_value < 0
    )
    acceptance(
        6,
        "truncation-classification chain",
        ok,
        f"cap sup={cap.sup_grad_sq:.4f} -> {cap.verdict}; patch -> {saddle.verdict}, witness={saddle.witness_value:.3g}",
    )
    assert ok


def test_criterion_07_second_variation(acceptance):
    rng = np.random.default_rng(7)
    s2 = build_chart("hypersphere", 2)
    E = make_perelman(s2)
    grid = gauss_grid(s2, 32)
    agree, slack, const_min, integral_gap = 0.0, math.inf, math.inf, 0.0
    w = grid.weights * np.cos(grid.nodes[1])
    for _ in range(5):
        v, phi = trig_field(s2, rng, scale=0.8), random_quadratic(s2, rng)
        agree = max(agree, abs(second_variation(E, v, phi, grid) - perelman_second_variation_o1(E, v, phi, grid)))
        lhs, rhs = o2_split(v, phi, grid.nodes)
        slack = min(slack, float(np.min(lhs - rhs + 1e-12 * (1 + np.abs(lhs)))))
        ev = np.exp(-v(grid.nodes))
        integral_gap = max(integral_gap, abs(np.dot(w, ev * lhs) - np.dot(w, ev * rhs)))
        for c in (1.0, -2.5, 0.1):
            const_min = min(const_min, second_variation(E, v, constant(s2, c), grid))
    ok = agree < 1e-10 and slack >= 0 and integral_gap < 1e-10 and const_min > 0
    acceptance(
        7,
        "second-variation identities",
        ok,
        f"general-vs-O1={agree:.1e}, O2 min slack={slack:.1e}, O2 integral gap={integral_gap:.1e}, "
        f"min const value={const_min:.3g}",
    )
    assert ok


def test_criterion_08_s2_geodesics(acceptance):
    devs = []
    for g in (0.25, 0.5, 0.75):
        for branch in ("principal", "extended"):
            devs.append(compare_with_shooting(GeodesicParams(g, 0.3, branch), 2)[0])
    meridian = s2_geodesic_closed_form(GeodesicParams(0.0, 0.4))
    merid_ok = bool(np.all(meridian.chart_pts[1] == 0.4)) and planarity_defect(meridian.ambient_pts) < 1e-14
    equator = s2_geodesic_closed_form(GeodesicParams(1.0))
    eq_ok = bool(np.all(equator.chart_pts[0] == 0.0)) and abs(curve_length(None, equator) - TWO_PI) < 1e-12
    ok = max(devs) < 1e-6 and merid_ok and eq_ok
    acceptance(8, "S2 geodesics", ok, f"max shoot deviation={max(devs):.1e}, meridian={merid_ok}, equator={eq_ok}")
    assert ok


def test_criterion_09_s3_battery(acceptance):
    start = time.perf_counter()
    worst = {"eq1": 0.0, "eq3p": 0.0, "plan": 0.0, "len": 0.0, "defect": 0.0}
    for g in (0.3, 0.5, math.sqrt(2) / 2):
        for branch in ("principal", "extended"):
            p = GeodesicParams(g, 0.0, branch)
            T = p.half_width(3)
            t = np.linspace(-T, T, 102)[1:-1]
            worst["eq1"] = max(worst["eq1"], float(np.max(np.abs(eq1_residual(p, t)))))
            worst["eq3p"] = max(worst["eq3p"], float(np.max(np.abs(eq3prime_residual(p, t)))))
            c = s3_geodesic_closed_form(p)
            worst["plan"] = max(worst["plan"], planarity_defect(c.ambient_pts))
            worst["len"] = max(worst["len"], abs(curve_length(None, c) - math.pi))
            worst["defect"] = max(worst["defect"], geodesic_defect(None, reparametrize_by_arclength(None, c)))
    elapsed = time.perf_counter() - start
    ok = (
        worst["eq1"] < 1e-8
        and worst["eq3p"] < 1e-8
        and worst["plan"] < 1e-8
        and worst["len"] < 1e-6
        and worst["defect"] < 1e-4
        and elapsed < 5.0
    )
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {elapsed:.2f}s"
    acceptance(9, "S3 geodesic battery", ok, detail)
    assert ok


PRESET_COMMANDS = [(p["command"], name) for name, p in cli.PRESETS.items()]


def test_criterion_10_cli_contract(acceptance, tmp_path, monkeypatch):
    same = True
    for command, preset in PRESET_COMMANDS:
        a, b = tmp_path / f"{preset}-a.out", tmp_path / f"{preset}-b.out"
        assert cli.main([command, "--preset", preset, "--out", str(a)]) == 0
        assert cli.main([command, "--preset", preset, "--out", str(b)]) == 0
        same &= a.read_bytes() == b.read_bytes()

    bad_schema = tmp_path / "bad.json"
    bad_schema.write_text(json.dumps({"grid_order": "many"}))
    malformed = tmp_path / "malformed.json"
    malformed.write_text("{not json")
    overflow = tmp_path / "overflow.json"
    overflow.write_text(json.dumps({"field": {"name": "constant", "k": -1000}}))
    codes = {
        "ok": cli.main(["energy", "--preset", "perelman-kscan", "--out", str(tmp_path / "x")]),
        "schema": cli.main(["energy", "--config", str(bad_schema)]),
        "malformed": cli.main(["energy", "--config", str(malformed)]),
        "wrong_preset": cli.main(["geodesic", "--preset", "perelman-kscan"]),
    }
    with np.errstate(over="ignore"):
        codes["numerical"] = cli.main(["energy", "--config", str(overflow)])
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    codes["argparse"] = exc.value.code
    expected = {"ok": 0, "schema": 2, "malformed": 2, "wrong_preset": 2, "numerical": 1, "argparse": 2}
    ok = same and codes == expected
    acceptance(10, "CLI determinism and exit codes", ok, f"byte-identical={same}, codes={codes}")
    assert ok
