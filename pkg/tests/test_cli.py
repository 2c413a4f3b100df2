import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from qfrac import SpectralModel
from qfrac.cli import (
    EXIT_COMPUTE,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    RunConfig,
    coefficients_csv,
    main,
    parse_config,
    read_coefficients,
    read_config_file,
)
from qfrac.errors import ConfigError, IoError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_coeffs(path, values):
    path.write_text(coefficients_csv(values))
    return str(path)


class TestEval:
    def test_qgamma_two(self, capsys):
        code, out, _ = run(capsys, "eval", "--fn", "qgamma", "--x", "2", "--q", "0.5")
        assert code == EXIT_OK
        assert out == "1\n"

    def test_json(self, capsys):
        code, out, _ = run(capsys, "eval", "--fn", "ml", "--x", "-0.5", "--alpha", "0.5", "--format", "json")
        data = json.loads(out)
        assert code == EXIT_OK and data["status"] == "converged" and 0 < data["value"] < 1

    def test_translated_needs_points(self, capsys):
        code, _, err = run(capsys, "eval", "--fn", "ml-translated", "--x", "-1")
        assert code == EXIT_CONFIG
        assert json.loads(err)["error"] == "ConfigError"

    def test_strict_outside_radius(self, capsys):
        code, _, err = run(capsys, "eval", "--fn", "ml", "--x", "-3", "--accelerate", "off")
        obj = json.loads(err)
        assert code == EXIT_COMPUTE
        assert obj["module"] == "qspecial" and obj["operation"]

    def test_domain_error(self, capsys):
        code, _, err = run(capsys, "eval", "--fn", "qgamma", "--x", "2", "--q", "1.5")
        assert code == EXIT_CONFIG


class TestConfig:
    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"command": "eval", "fn": "qgamma", "x": 1, "colour": "red"})

    def test_missing_required(self):
        with pytest.raises(ConfigError):
            RunConfig(command="solve-inverse", alpha=0.5, T=1.0)

    def test_bad_flag(self, capsys):
        code, _, err = run(capsys, "eval", "--frobnicate")
        assert code == EXIT_CONFIG
        assert json.loads(err)["operation"] == "parse_args"

    def test_json_round_trip(self, tmp_path):
        cfg, _ = parse_config(["bounds-scan", "--alpha", "0.5", "--q", "0.3", "--zpoints", "5"])
        path = tmp_path / "run.json"
        path.write_text(cfg.to_json())
        again = RunConfig.from_mapping(read_config_file(path))
        assert again == cfg

    def test_key_value_file_and_flag_precedence(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("# a comment\nfn = qgamma\nx = 3\nq = 0.3\n")
        cfg, _ = parse_config(["eval", "--config", str(path), "--q", "0.5"])
        assert (cfg.fn, cfg.x, cfg.q) == ("qgamma", 3.0, 0.5)
        code, out, _ = run(capsys, "eval", "--config", str(path), "--q", "0.5")
        assert float(out) == pytest.approx(1.5)

    def test_save_config_reproduces_run(self, tmp_path, capsys):
        saved = tmp_path / "saved.json"
        _, first, _ = run(capsys, "eval", "--fn", "qexp", "--x", "0.4", "--q", "0.7", "--save-config", str(saved))
        _, second, _ = run(capsys, "eval", "--config", str(saved))
        assert first == second

    def test_config_for_other_command(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("command = verify\n")
        code, _, _ = run(capsys, "eval", "--config", str(path), "--fn", "qgamma", "--x", "1")
        assert code == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "eval", "--config", str(tmp_path / "nope.cfg"))
        assert code == EXIT_IO and json.loads(err)["error"] == "IoError"


class TestFiles:
    def test_coefficients_round_trip(self, tmp_path):
        p = write_coeffs(tmp_path / "c.csv", [0.1, -2.5, 1e-30])
        assert list(read_coefficients(p).coefficients) == [0.1, -2.5, 1e-30]
        assert list(read_coefficients(p, K=2).coefficients) == [0.1, -2.5]

    def test_bad_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("mode,u\n1,2\n")
        with pytest.raises(IoError):
            read_coefficients(str(p))

    def test_out_of_order(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("k,value\n2,1\n1,2\n")
        with pytest.raises(IoError):
            read_coefficients(str(p))

    def test_too_short(self, tmp_path):
        with pytest.raises(IoError):
            read_coefficients(write_coeffs(tmp_path / "c.csv", [1.0]), K=3)


class TestSolve:
    def test_inverse_with_equal_data(self, tmp_path, capsys):
        K = 6
        data = [0.5 / k**3 for k in range(1, K + 1)]
        phi = write_coeffs(tmp_path / "phi.csv", data)
        rho = write_coeffs(tmp_path / "rho.csv", data)
        out = tmp_path / "f.csv"
        code, _, _ = run(
            capsys, "solve-inverse", "--alpha", "0.5", "--T", "0.001", "--modes", str(K),
            "--phi", phi, "--rho", rho, "--out", str(out),
        )
        assert code == EXIT_OK
        f = read_coefficients(str(out)).coefficients
        lam = SpectralModel.dirichlet_sine(K).shifted
        assert np.array_equal(f, lam * np.array(data))
        diag = json.loads((tmp_path / "f.diagnostics.json").read_text())
        assert diag["kind"] == "inverse" and diag["residual_max"] <= 1e-6
        traces = list(csv.reader((tmp_path / "f.traces.csv").open()))
        assert traces[0] == ["mode", "t", "u"]

    def test_direct_suborder(self, tmp_path, capsys):
        phi = write_coeffs(tmp_path / "phi.csv", [1.0, 0.5])
        out = tmp_path / "u.csv"
        code, _, err = run(capsys, "solve-direct", "--alpha", "0.5", "--T", "0.05", "--modes", "2", "--phi", phi, "--out", str(out))
        assert code == EXIT_OK, err
        rows = list(csv.DictReader(out.open()))
        assert rows[0]["mode"] == "1" and float(rows[0]["t"]) == 0.05
        diag = json.loads((tmp_path / "u.diagnostics.json").read_text())
        assert diag["residual_max"] <= 1e-6
        assert set(diag["estimate"]) >= {"lhs", "rhs", "ratio"}

    def test_direct_superorder_from_eigenvalue_file(self, tmp_path, capsys):
        eig = tmp_path / "eig.csv"
        eig.write_text("k,lambda\n1,0.5\n2,2\n")
        phi = write_coeffs(tmp_path / "phi.csv", [1.0, 0.0])
        rho = write_coeffs(tmp_path / "rho.csv", [0.0, 1.0])
        code, out, err = run(
            capsys, "solve-direct", "--alpha", "1.3", "--T", "0.2", "--model", f"file:{eig}",
            "--phi", phi, "--rho", rho, "--format", "json",
        )
        assert code == EXIT_OK, err
        body = json.loads(out)
        assert body["diagnostics"]["residual_max"] <= 1e-5
        assert len(body["u"]) == 2 and body["u"][1][-1] == 0.0

    def test_failed_mode_exit(self, tmp_path, capsys):
        phi = write_coeffs(tmp_path / "phi.csv", [1.0] * 3)
        code, _, err = run(
            capsys, "solve-direct", "--alpha", "0.5", "--T", "0.25", "--modes", "3",
            "--phi", phi, "--accelerate", "off", "--out", str(tmp_path / "u.csv"),
        )
        assert code == EXIT_COMPUTE
        assert json.loads(err)["module"] == "spectral"
        diag = json.loads((tmp_path / "u.diagnostics.json").read_text())
        assert [m["status"] for m in diag["modes"]] == ["converged", "outside_radius", "outside_radius"]

    def test_rho_rejected_for_suborder(self, tmp_path, capsys):
        phi = write_coeffs(tmp_path / "phi.csv", [1.0])
        code, _, _ = run(capsys, "solve-direct", "--alpha", "0.5", "--T", "1", "--modes", "1", "--phi", phi, "--rho", phi)
        assert code == EXIT_CONFIG

    def test_missing_input(self, tmp_path, capsys):
        code, _, _ = run(
            capsys, "solve-inverse", "--alpha", "0.5", "--T", "1", "--modes", "2",
            "--phi", str(tmp_path / "no.csv"), "--rho", str(tmp_path / "no.csv"),
        )
        assert code == EXIT_IO


class TestReports:
    def test_bounds_scan_default_grid(self, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        code, _, _ = run(capsys, "bounds-scan", "--out", str(out))
        assert code == EXIT_OK
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 5 * 3 * 20
        summary = json.loads((tmp_path / "scan.summary.json").read_text())
        assert summary["rows"] == 300
        assert summary["pass_rate"]["holds_range"] == 1.0
        assert set(summary["worst_margin"]) == {"margin_lower", "margin_upper"}

    def test_verify_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, "verify", "--out", str(a))[0] == EXIT_OK
        assert run(capsys, "verify", "--out", str(b))[0] == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.DictReader(a.open()))
        assert {r["module"] for r in rows} == {"qcore", "qspecial", "qcalculus", "bounds", "spectral"}
        assert all(r["passed"] == "true" for r in rows)

    def test_selftest(self, capsys):
        code, out, _ = run(capsys, "selftest", "--format", "json")
        data = json.loads(out)
        assert code == EXIT_OK and data["failed"] == 0 and data["passed"] > 20


@pytest.mark.skipif(shutil.which("qfrac") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["qfrac", "eval", "--fn", "qnumber", "--x", "2", "--q", "0.5"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "1.5\n"


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "qfrac.cli", "eval", "--fn", "qgamma", "--x", "3", "--q", "0.5"], capture_output=True, text=True
    )
    assert r.returncode == 0 and float(r.stdout) == 1.5
