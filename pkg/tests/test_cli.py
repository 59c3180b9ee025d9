import csv
import io
import json
import math

import pytest

from varcalc.cli import PRESETS, load_config, main
from varcalc.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    body = [line for line in text.splitlines() if line and not line.startswith("#")]
    footer = dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))
    return list(csv.DictReader(io.StringIO("\n".join(body)))), footer


def write_config(tmp_path, doc):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestConfig:
    def test_precedence(self, tmp_path):
        path = write_config(tmp_path, {"grid_order": 12, "field": {"name": "constant", "k": 2.0}})
        cfg = load_config("energy", path, "perelman-kscan", {"grid_order": 20, "tol": None})
        assert cfg["grid_order"] == 20  # flag beats file
        assert cfg["field"]["k"] == 2.0  # file beats preset / defaults
        assert cfg["functional"] == "perelman"  # from the preset
        assert "tol" not in cfg or cfg["tol"] is not None

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config("energy", write_config(tmp_path, {"gridorder": 3}), None, {})

    def test_wrong_preset(self):
        with pytest.raises(ConfigError):
            load_config("energy", None, "s3-geodesic", {})

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config("energy", str(path), None, {})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config("energy", str(tmp_path / "absent.json"), None, {})


class TestEnergy:
    def test_kscan(self, capsys):
        code, out, _ = run(capsys, "energy", "--preset", "perelman-kscan")
        assert code == 0
        rows, footer = parse_csv(out)
        assert len(rows) == 11
        for r in rows:
            assert float(r["energy"]) == pytest.approx(8 * math.pi * math.exp(-float(r["k"])), rel=1e-10)
        assert footer["strictly_decreasing"] == "True"
        assert "\r\n" in out

    def test_single_field(self, capsys, tmp_path):
        path = write_config(tmp_path, {"chart": {"kind": "flat_box", "dim": 2}, "functional": "dirichlet", "field": {"name": "x1"}})
        code, out, _ = run(capsys, "energy", "--config", path, "--grid-order", "6")
        rows, _ = parse_csv(out)
        assert code == 0 and float(rows[0]["energy"]) == pytest.approx(1.0, abs=1e-12)

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "energy", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert doc["rows"][0][1] == pytest.approx(8 * math.pi, abs=1e-8)


class TestResidual:
    def test_laplace_radial(self, capsys):
        code, out, _ = run(capsys, "residual", "--preset", "laplace-radial")
        _, footer = parse_csv(out)
        assert code == 0 and float(footer["sup"]) < 1e-5

    def test_neumann(self, capsys):
        code, out, _ = run(capsys, "residual", "--preset", "neumann-demo")
        rows, footer = parse_csv(out)
        assert code == 0
        assert abs(float(footer["sup_x1+"])) < 1e-10
        assert float(footer["sup_x1-"]) == pytest.approx(4.0, abs=1e-10)
        assert {r["face"] for r in rows} == {"x1-", "x1+", "x2-", "x2+"}

    def test_perelman_zero(self, capsys):
        _, out, _ = run(capsys, "residual")
        rows, _ = parse_csv(out)
        assert all(float(r["residual"]) == pytest.approx(-2.0) for r in rows)


class TestProfile:
    def test_footer(self, capsys, tmp_path):
        target = tmp_path / "profile.csv"
        code, out, _ = run(capsys, "perelman-profile", "--preset", "perelman-profile", "--out", str(target))
        assert code == 0 and out == ""
        rows, footer = parse_csv(target.read_text())
        assert footer["status"] == "blew_up"
        assert float(footer["blow_up_t"]) < math.pi / 2
        assert -math.pi / 2 < float(footer["u2_star_sqrt2"]) < math.pi / 2
        assert float(rows[0]["w"]) == pytest.approx(-0.5e-6)

    def test_bad_eps_is_config_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "perelman-profile", "--config", write_config(tmp_path, {"eps": 0.5}))
        assert code == 2 and "eps" in err


class TestClassify:
    @pytest.mark.parametrize(
        "field,verdict",
        [("zero", "strict_local_min_candidate"), ("steep_patch", "saddle"), ("gentle_slope", "inconclusive"), ("profile_cap", "strict_local_min_candidate")],
    )
    def test_verdicts(self, capsys, tmp_path, field, verdict):
        code, out, _ = run(capsys, "classify", "--config", write_config(tmp_path, {"field": {"name": field}, "probes": 3}))
        doc = json.loads(out)
        assert code == 0 and doc["verdict"] == verdict
        if verdict == "saddle":
            assert doc["witness_value"] < 0

    def test_random_probes_seeded(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("VARCALC_SEED", "11")
        path = write_config(tmp_path, {"random_probes": True, "probes": 3, "grid_order": 12})
        _, a, _ = run(capsys, "classify", "--config", path)
        _, b, _ = run(capsys, "classify", "--config", path)
        assert a == b and json.loads(a)["seed"] == 11

    def test_flat_chart_rejected(self, capsys, tmp_path):
        code, _, _ = run(capsys, "classify", "--config", write_config(tmp_path, {"chart": {"kind": "flat_box", "dim": 2}}))
        assert code == 2


class TestGeodesic:
    def test_s3(self, capsys):
        code, out, _ = run(capsys, "geodesic", "--preset", "s3-geodesic")
        rows, footer = parse_csv(out)
        assert code == 0 and len(rows) == 2001
        assert abs(float(footer["length"]) - math.pi) < 1e-6
        assert float(footer["planarity"]) < 1e-8
        assert float(footer["eq1_max"]) < 1e-8 and float(footer["eq3prime_max"]) < 1e-8
        assert float(rows[0]["u1"]) == pytest.approx(-math.pi / 6 + 1e-6)

    def test_compare(self, capsys, tmp_path):
        doc = {"geodesic": {"dim": 2, "gamma": 0.5, "mode": "compare", "samples": 401}}
        code, out, _ = run(capsys, "geodesic", "--config", write_config(tmp_path, doc))
        _, footer = parse_csv(out)
        assert code == 0 and float(footer["sup_deviation"]) < 1e-6

    def test_shoot(self, capsys, tmp_path):
        doc = {"geodesic": {"dim": 2, "mode": "shoot", "start": [0, 0], "velocity": [0, 1], "length": 6.283185307179586, "samples": 201}}
        code, out, _ = run(capsys, "geodesic", "--config", write_config(tmp_path, doc))
        _, footer = parse_csv(out)
        assert code == 0 and footer["status"] == "completed"
        assert float(footer["length"]) == pytest.approx(2 * math.pi, abs=1e-6)

    def test_equator(self, capsys, tmp_path):
        doc = {"geodesic": {"dim": 2, "gamma": 1.0, "samples": 501}}
        code, out, _ = run(capsys, "geodesic", "--config", write_config(tmp_path, doc))
        _, footer = parse_csv(out)
        assert code == 0 and float(footer["length"]) == pytest.approx(2 * math.pi, abs=1e-8)

    def test_bad_gamma(self, capsys, tmp_path):
        code, _, _ = run(capsys, "geodesic", "--config", write_config(tmp_path, {"geodesic": {"gamma": 1.5}}))
        assert code == 2


class TestExitCodes:
    def test_verify_all(self, capsys):
        code, out, _ = run(capsys, "verify-all")
        doc = json.loads(out)
        assert code == 0 and doc["all_pass"] is True

    def test_numerical_failure(self, capsys, tmp_path):
        doc = {"field": {"name": "constant", "k": -1000}}
        code, _, err = run(capsys, "energy", "--config", write_config(tmp_path, doc))
        assert code == 1 and "numerical" in err

    def test_argparse(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["nonsense"])
        assert exc.value.code == 2

    @pytest.mark.parametrize("preset", sorted(PRESETS))
    def test_presets_deterministic(self, capsys, preset):
        command = PRESETS[preset]["command"]
        a = run(capsys, command, "--preset", preset)
        b = run(capsys, command, "--preset", preset)
        assert a[0] == 0 and a == b
