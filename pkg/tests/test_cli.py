import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spectral_asymptotics.cli import main, parse_config, parse_grid
from spectral_asymptotics.errors import ConfigError, UsageError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = text.strip().splitlines()
    return lines[0], lines[1].split(","), [line.split(",") for line in lines[2:]]


class TestParsing:
    def test_trace_config(self):
        cfg = parse_config(["trace", "--spectrum", "primes:1000000", "--t", "1e-4:1e-1:40", "--power", "0"])
        assert cfg.command == "trace"
        assert cfg.spectrum == {"model": "primes", "params": {"limit": 1000000}}
        assert cfg.t_grid.size == 121
        assert cfg.t_grid[0] == pytest.approx(1e-4) and cfg.t_grid[-1] == pytest.approx(0.1)
        assert np.allclose(np.diff(np.log10(cfg.t_grid)), 1 / 40)
        assert cfg.max_terms == 10**7 and cfg.rel_tol == 1e-12

    def test_fit_config(self):
        cfg = parse_config(["fit", "--spectrum", "power_law:p=2,C=1", "--t", "1e-5:1e-2:40"])
        assert cfg.command == "fit" and cfg.spectrum["params"] == {"p": 2.0, "C": 1.0}

    def test_grid_forms(self):
        assert parse_grid("0.1,0.2,0.5", "--t").tolist() == [0.1, 0.2, 0.5]
        assert parse_grid("0.5", "--t").tolist() == [0.5]
        with pytest.raises(UsageError, match="--t"):
            parse_grid("5:1:10", "--t")
        with pytest.raises(UsageError, match="--lam"):
            parse_grid("1,3,2", "--lam")

    def test_bad_descriptor(self):
        with pytest.raises(ConfigError):
            parse_config(["trace", "--spectrum", "power_law:p=-1", "--t", "0.1"])

    def test_config_file_overridden_by_flags(self, tmp_path):
        conf = tmp_path / "run.json"
        conf.write_text(json.dumps({"spectrum": "power_law:p=1", "t": "0.1,0.2", "power": "1"}))
        cfg = parse_config(["trace", "--config", str(conf), "--power", "2"])
        assert cfg.t_grid.tolist() == [0.1, 0.2]
        assert cfg.options["power"] == "2"

    def test_config_unknown_key(self, tmp_path):
        conf = tmp_path / "run.json"
        conf.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(ConfigError, match="bogus"):
            parse_config(["trace", "--config", str(conf)])


class TestExitCodes:
    def test_non_monotone_grid(self, capsys):
        code, _, err = run_cli(capsys, "trace", "--spectrum", "power_law:p=1", "--t", "5:1:10")
        assert code == 2 and "--t" in err

    def test_unknown_flag(self, capsys):
        code, _, _ = run_cli(capsys, "trace", "--spectrum", "power_law:p=1", "--t", "0.1", "--bogus")
        assert code == 2

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == 2

    def test_invalid_spectrum(self, capsys):
        code, _, err = run_cli(capsys, "trace", "--spectrum", "counterexample:levels=9", "--t", "0.1")
        assert code == 2 and "levels" in err

    def test_missing_grid(self, capsys):
        assert run_cli(capsys, "trace", "--spectrum", "power_law:p=1")[0] == 2

    def test_budget_is_analysis_error(self, capsys):
        code, out, err = run_cli(capsys, "trace", "--spectrum", "primes:1000", "--t", "1e-3")
        assert code == 1 and "budget" in err and out == ""

    def test_divergence_is_analysis_error(self, capsys):
        code, _, _ = run_cli(capsys, "ideals", "--spectrum", "triangular_complex", "--eps", "0.5")
        assert code == 1

    def test_bad_thread_env(self, capsys, monkeypatch):
        monkeypatch.setenv("SPECTRAL_ASYMPTOTICS_THREADS", "zero")
        assert run_cli(capsys, "primes", "--limit", "100")[0] == 2

    def test_failed_run_leaves_no_file(self, capsys, tmp_path):
        target = tmp_path / "out.csv"
        code, _, _ = run_cli(capsys, "trace", "--spectrum", "primes:1000", "--t", "1e-3", "--out", str(target))
        assert code == 1
        assert list(tmp_path.iterdir()) == []


class TestCommands:
    def test_trace_csv(self, capsys):
        code, out, _ = run_cli(capsys, "trace", "--spectrum", "power_law:p=1", "--t", "0.01,0.1,1", "--power", "0,1")
        assert code == 0
        header, cols, rows = csv_rows(out)
        assert header == "# spectral-asymptotics v1 trace"
        assert cols == ["t", "n", "re", "im", "norm", "truncation_index", "tail_bound", "certified"]
        assert len(rows) == 6
        for row in rows:
            t, n, re = float(row[0]), int(row[1]), float(row[2])
            ref = 1 / math.expm1(t) if n == 0 else math.exp(t) / math.expm1(t) ** 2
            assert re == pytest.approx(ref, rel=1e-11)
            assert row[7] == "true"

    def test_trace_json(self, capsys):
        code, out, _ = run_cli(capsys, "trace", "--spectrum", "triangular_complex", "--t", "0.1", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert set(doc) >= {"command", "parameters", "headline_numbers", "tail_certified", "tolerances"}
        assert doc["tail_certified"] is True
        assert doc["parameters"]["spectrum"]["model"] == "triangular_complex"

    def test_fit(self, capsys):
        code, out, _ = run_cli(capsys, "fit", "--spectrum", "power_law:p=2,C=1", "--format", "json")
        assert code == 0
        h = json.loads(out)["headline_numbers"]
        assert abs(h["p_hat"] - 2) <= 0.02 and abs(h["r_hat"]) <= 0.05 and abs(h["C_hat"] - 1) <= 0.03

    def test_fit_synthetic_seeded(self, capsys):
        args = ("fit", "--synthetic", "50", "--seed", "9", "--t", "1e-8:1e-2:40")
        code, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert code == 0 and out1 == out2
        _, _, rows = csv_rows(out1)
        assert len(rows) == 50 and max(float(r[-1]) for r in rows) <= 1e-6

    def test_tauberian(self, capsys):
        code, out, _ = run_cli(
            capsys, "tauberian", "--spectrum", "power_law:p=2", "--p", "2", "--c", "0.9", "--format", "json"
        )
        assert code == 0
        h = json.loads(out)["headline_numbers"]
        assert h["forward_last"] == pytest.approx(2.0, rel=1e-3)
        assert h["liminf"]["verdict"] == "pass"

    def test_tauberian_needs_law(self, capsys):
        assert run_cli(capsys, "tauberian", "--spectrum", "power_law:p=2")[0] == 2

    def test_ideals_counterexample(self, capsys):
        code, out, _ = run_cli(capsys, "ideals", "--spectrum", "counterexample:levels=4", "--p", "1", "--format", "json")
        assert code == 0
        h = json.loads(out)["headline_numbers"]
        assert h["verdicts"]["macaev"] == "BOUNDED_SO_FAR"
        assert h["verdicts"]["weak"] == "DIVERGING"

    def test_ideals_eps_scan(self, capsys):
        code, out, _ = run_cli(capsys, "ideals", "--spectrum", "power_law:p=1", "--eps", "1e-2,1e-3")
        assert code == 0
        _, cols, rows = csv_rows(out)
        assert cols[:2] == ["eps", "scan_value"]
        for row in rows:
            assert abs(float(row[1]) - 1) <= 3 * float(row[0])

    def test_derivatives(self, capsys):
        code, out, _ = run_cli(capsys, "derivatives", "--spectrum", "power_law:p=1", "--n", "2", "--t", "0.5")
        assert code == 0
        _, cols, rows = csv_rows(out)
        assert cols == ["t", "n", "analytic", "numeric", "rel_err"]
        assert float(rows[0][4]) <= 1e-6

    def test_primes(self, capsys):
        code, out, _ = run_cli(capsys, "primes", "--limit", "1000000", "--lam", "10,100,1000000")
        assert code == 0
        _, _, rows = csv_rows(out)
        assert [int(r[1]) for r in rows] == [4, 25, 78498]

    def test_counterexample(self, capsys):
        code, out, _ = run_cli(capsys, "counterexample", "--levels", "4", "--c", "2,3", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["headline_numbers"]["macaev_at_boundaries_max"] <= 1 / (2 * math.log(2)) + 0.05
        assert all(w["holds"] for w in doc["headline_numbers"]["witnesses"])
        assert doc["rows"][0][2] == "1/14"

    def test_report(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "report", "--spectrum", "primes:1000000", "--out-dir", str(tmp_path))
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["fit.json", "trace.csv"]
        h = json.loads((tmp_path / "fit.json").read_text())["headline_numbers"]
        assert abs(h["p_hat"] - 1) <= 0.1
        assert abs(h["r_hat"] + 1) <= 0.2
        assert (tmp_path / "trace.csv").read_text().startswith("# spectral-asymptotics v1 report\n")

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "primes.csv"
        code, out, _ = run_cli(capsys, "primes", "--limit", "100", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_text().splitlines()[-1] == "100,25"


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "spectral_asymptotics", "primes", "--limit", "100"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0 and out.stdout.splitlines()[-1] == "100,25"
