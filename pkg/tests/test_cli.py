import csv
import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tanconn import __version__
from tanconn.cli import COMMANDS, ConfigError, RunConfig, main

ROOT = Path(__file__).resolve().parents[1]
STANDARD = str(ROOT / "programs" / "standard.tc")


def run(capsys, *argv):
    code = main([STANDARD, *argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ("check", "sphere_conn"), ("check", "tangent_sphere"), ("check", "principal"),
        ("curvature", "flat_conn"), ("torsion", "curved_plane"), ("bianchi", "flat_conn"),
        ("decompose", "sphere_conn"), ("almost-complex", "sphere_conn"), ("axioms",),
    ], ids=lambda a: "-".join(a))
    def test_pass(self, capsys, argv):
        code, doc = report(capsys, *argv)
        assert code == 0 and doc["pass"] is True

    @pytest.mark.parametrize("argv", [("curvature", "curved_plane"), ("torsion", "twisted_plane")],
                             ids=lambda a: "-".join(a))
    def test_check_failure(self, capsys, argv):
        code, doc = report(capsys, *argv)
        assert code == 1 and doc["pass"] is False
        assert max(i["max_residual"] for i in doc["items"]) >= 0.1

    @pytest.mark.parametrize("argv", [
        ("check", "nowhere"), ("frobnicate", "x"), ("check",), ("check", "a", "b"),
        ("check", "flat_conn", "--tol", "0"), ("check", "flat_conn", "--samples", "0"),
        ("check", "flat_conn", "--tol", "abc"), ("transport", "sphere_conn", "equator", "1,2"),
        ("transport", "sphere_conn", "line_curve", "e0"), ("torsion", "principal"),
    ], ids=lambda a: "-".join(a))
    def test_config_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2 and out == ""
        assert err.startswith("tanconn: error:")

    def test_no_command(self, capsys):
        assert run(capsys)[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        assert main([str(tmp_path / "absent.tc"), "axioms"]) == 2

    def test_parse_error_is_positioned(self, capsys, tmp_path):
        bad = tmp_path / "bad.tc"
        bad.write_text("space a = R(2);\nmap f : a -> a = (x[0], x[5]);\n", encoding="utf-8")
        assert main([str(bad), "--list"]) == 2
        err = capsys.readouterr().err
        assert f"{bad}:2:" in err and "x[5]" in err

    def test_base_point_mismatch_is_config(self, capsys):
        code, _, err = run(capsys, "transport", "sphere_conn", "colatitude1", "e0", "--steps", "8")
        assert code == 2 and "e0 lies over" in err

    def test_run_config_invariants(self):
        with pytest.raises(ConfigError):
            RunConfig("f", "check", ("x",), tol=-1.0)
        with pytest.raises(ConfigError):
            RunConfig("f", "check", ("x",), samples=0)
        cfg = RunConfig("f", "axioms")
        assert (cfg.samples, cfg.seed, cfg.tol, cfg.steps, cfg.format) == (64, 42, 1e-8, 4096, "json")


class TestReports:
    def test_json_schema(self, capsys):
        _, doc = report(capsys, "check", "sphere_conn", "--samples", "64", "--seed", "42")
        assert {"command", "items", "pass", "seed", "version"} <= set(doc)
        assert doc["command"] == "check sphere_conn"
        assert doc["seed"] == 42 and doc["version"] == __version__
        for item in doc["items"]:
            assert {"equation", "max_residual", "worst_point"} <= set(item)
            assert item["max_residual"] <= 1e-8

    def test_bianchi_flat_is_tiny(self, capsys):
        _, doc = report(capsys, "bianchi", "flat_conn")
        names = {i["equation"]: i for i in doc["items"]}
        for key in ("bianchi-antisym", "bianchi-first", "bianchi-second"):
            assert names[key]["max_residual"] <= 1e-14
        assert "bianchi-first-statement" in names

    def test_csv_items(self, capsys):
        code, out, _ = run(capsys, "decompose", "flat_conn", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0 and rows[0] == ["equation", "max_residual", "pass"]
        assert rows[1][2] == "true"

    def test_human(self, capsys):
        code, out, _ = run(capsys, "curvature", "flat_conn", "--format", "human")
        assert code == 0 and "seed 42" in out and __version__ in out

    def test_transport_csv_returns_to_start(self, capsys):
        code, out, _ = run(capsys, "transport", "sphere_conn", "equator", "e0", "--steps", "4096",
                           "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert rows[0] == ["t", "e0", "e1", "e2", "e3", "e4", "e5"]
        assert len(rows) == 4098
        final = np.array([float(v) for v in rows[-1][1:]])
        assert np.max(np.abs(final - [0, 1, 0, 1, 0, 0])) <= 1e-6

    def test_transport_json_extras(self, capsys):
        code, doc = report(capsys, "transport", "flat_conn", "line_curve", "e_plane",
                           "--steps", "64", "--interval", "0,1")
        assert code == 0 and doc["closed"] is False
        assert np.allclose(doc["final"], [1, -2, 1, 0.5], atol=1e-10)

    def test_literal_vector(self, capsys):
        code, doc = report(capsys, "transport", "flat_conn", "line_curve", "3,4,0,0",
                           "--steps", "16", "--interval=-1,1")
        assert code == 0 and np.allclose(doc["final"][:2], [3, 4])

    def test_list(self, capsys):
        code, out, _ = run(capsys, "--list", "--format", "csv")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "name,kind"
        assert lines[1] == "line,space" and "sphere_conn,connection" in lines

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "r.json"
        assert main([STANDARD, "axioms", "--out", str(dest)]) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(dest.read_text(encoding="utf-8"))["pass"] is True

    def test_suite_order_follows_declarations(self, capsys):
        _, doc = report(capsys, "suite")
        prefixes = []
        for item in doc["items"]:
            name = item["equation"].split(":")[0]
            if name not in prefixes:
                prefixes.append(name)
        assert prefixes[:2] == ["tangent_line", "tangent_sphere"]
        assert prefixes[-1] == "t_flat"


class TestDeterminism:
    @pytest.mark.parametrize("argv", [("suite",), ("check", "sphere_conn", "--seed", "7"),
                                      ("transport", "sphere_conn", "equator", "e0", "--steps", "256")],
                             ids=["suite", "check", "transport"])
    def test_byte_identical(self, capsys, argv):
        first = run(capsys, *argv)[1]
        second = run(capsys, *argv)[1]
        assert first == second

    def test_seed_changes_points(self, capsys):
        a = report(capsys, "check", "sphere_conn", "--seed", "1")[1]
        b = report(capsys, "check", "sphere_conn", "--seed", "2")[1]
        assert a["items"][0]["worst_point"] != b["items"][0]["worst_point"]


@pytest.mark.skipif(shutil.which("tanconn") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["tanconn", STANDARD, "bianchi", "flat_conn"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["pass"]
    out = subprocess.run(["tanconn", "--version"], capture_output=True, text=True)
    assert __version__ in out.stdout


def test_module_entry():
    out = subprocess.run([sys.executable, "-m", "tanconn.cli", STANDARD, "--list"],
                         capture_output=True, text=True)
    assert out.returncode == 0


def test_command_table():
    assert set(COMMANDS) >= {"check", "curvature", "torsion", "bianchi", "decompose",
                             "almost-complex", "transport", "axioms"}
