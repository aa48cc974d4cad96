import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

from awcga import cli
from awcga.config import ConfigError, load_config, parse_config, sweep_cells
from awcga.errors import ProjectionError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
[space]
r = 2.0
dim = 3
[target]
coords = [0.5, 0.3, 0.2]
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestRun:
    def test_minimal(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        code = cli.main(["run", "--config", write(tmp_path, MINIMAL), "--out", str(out)])
        assert code == 0
        recs = rows(out.read_text())
        assert len(recs) == 3
        assert [int(r["chosen_id"]) for r in recs] == [0, 1, 2]
        summary = capsys.readouterr().out
        assert summary.startswith("converged at step 3")
        assert "final_residual=0" in summary and "wall_time=" in summary

    def test_stdout_and_quiet(self, tmp_path, capsys):
        assert cli.main(["run", "--config", write(tmp_path, MINIMAL), "--quiet"]) == 0
        captured = capsys.readouterr()
        assert captured.out.splitlines()[0].startswith("n,t_n,delta,eta")
        assert captured.err == ""

    def test_nonsmooth_preset(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        assert cli.main(["run", "--config", str(CONFIGS / "nonsmooth.toml"), "--out", str(out)]) == 0
        recs = rows(out.read_text())
        assert len(recs) == 50 and {r["residual_norm"] for r in recs} == {"1"}
        assert "not_converged" in capsys.readouterr().out

    def test_weakness_out_of_range(self, tmp_path, capsys):
        bad = MINIMAL + '[schedules.t]\nkind = "constant"\nvalue = 1.5\n'
        assert cli.main(["run", "--config", write(tmp_path, bad)]) == 2
        err = capsys.readouterr().err
        assert "weakness" in err and "[0, 1]" in err

    @pytest.mark.parametrize("text, field", [
        ("[space]\nr = 0.5\ndim = 3\n[target]\ncoords = [1, 0, 0]\n", "exponent r"),
        ("[space]\nr = 2.0\ndim = 3\n[target]\ncoords = [1, 0]\n", "target"),
        ("[space]\nr = 2.0\ndim = 3\n", "target"),
        ('scenario = "nope"\n', "scenario"),
        ("n_max = 0\n" + MINIMAL, "n_max"),
        ("this is not toml", "TOML"),
    ])
    def test_config_errors_name_the_field(self, tmp_path, capsys, text, field):
        assert cli.main(["run", "--config", write(tmp_path, text)]) == 2
        assert field in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "absent.toml")]) == 2

    def test_solver_failure_exit(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise ProjectionError("did not converge")
        monkeypatch.setattr(cli, "_execute", boom)
        assert cli.main(["run", "--config", write(tmp_path, MINIMAL)]) == 4

    def test_failed_scenario_checks_exit(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "_execute", lambda cfg: (cli.run(cfg.target, cfg.dictionary, cfg.space,
                                                                  cfg.schedules, n_max=3), False))
        assert cli.main(["run", "--config", write(tmp_path, MINIMAL), "--quiet"]) == 3

    def test_determinism(self, tmp_path):
        cfg = str(CONFIGS / "convergence_l3.toml")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["run", "--config", cfg, "--out", str(a), "--quiet"]) == 0
        assert cli.main(["run", "--config", cfg, "--out", str(b), "--quiet"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_target(self, tmp_path):
        cfg = str(CONFIGS / "convergence_l3.toml")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["run", "--config", cfg, "--out", str(a), "--quiet", "--seed", "1"])
        cli.main(["run", "--config", cfg, "--out", str(b), "--quiet", "--seed", "2"])
        assert a.read_bytes() != b.read_bytes()
        assert load_config(cfg, seed=5).seed == 5

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "awcga", "run", "--config",
                               str(CONFIGS / "wcga_l2.toml"), "--quiet"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert len(proc.stdout.splitlines()) == 4


class TestCheck:
    def test_duality(self, capsys):
        assert cli.main(["check", "duality"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 4 and "4/4 checks passed" in out

    def test_unknown_suite(self, capsys):
        assert cli.main(["check", "nope"]) == 2

    def test_failure_exit(self, monkeypatch, capsys):
        from awcga import checks
        monkeypatch.setitem(checks.SUITES, "duality", lambda: [checks.CheckResult("x", False, "bad")])
        assert cli.main(["check", "duality"]) == 3
        assert "FAIL  x: bad" in capsys.readouterr().out


class TestSweep:
    def test_delta_eta_grid(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert cli.main(["sweep", "--config", str(CONFIGS / "sweep_delta_eta.toml"),
                         "--out", str(out), "--quiet"]) == 0
        recs = rows(out.read_text())
        assert [float(r["delta"]) for r in recs] == [0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
        assert all(r["delta"] == r["eta"] for r in recs)
        assert recs[0]["verdict"] == "converged"
        assert float(recs[0]["final_residual"]) <= 1e-6

    def test_empty_grid(self, tmp_path, capsys):
        cfg = write(tmp_path, MINIMAL + "[sweep]\ndelta = []\n")
        assert cli.main(["sweep", "--config", cfg, "--quiet"]) == 0
        out = capsys.readouterr().out
        assert out == "delta,verdict,final_residual,steps,steps_to_tolerance,error\n"

    def test_single_cell_matches_run(self, tmp_path, capsys):
        base = MINIMAL + '[schedules.t]\nkind = "constant"\nvalue = 0.7\n'
        cfg_sweep = write(tmp_path, base + "[sweep]\neta = [0.2]\n", "s.toml")
        cfg_run = write(tmp_path, base + '[schedules.eta]\nkind = "constant"\nvalue = 0.2\n', "r.toml")
        out = tmp_path / "sweep.csv"
        cli.main(["sweep", "--config", cfg_sweep, "--out", str(out), "--quiet"])
        cell = rows(out.read_text())[0]
        trace, _ = cli._execute(load_config(cfg_run))
        assert cell["verdict"] == trace.verdict
        assert int(cell["steps"]) == len(trace)
        assert float(cell["final_residual"]) == trace.residual_norms[-1]

    def test_cell_failure_recorded(self, tmp_path):
        cfg = write(tmp_path, MINIMAL + "[sweep]\nt = [0.5, 1.5]\n")
        out = tmp_path / "sweep.csv"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        recs = rows(out.read_text())
        assert recs[0]["verdict"] == "converged"
        assert recs[1]["verdict"] == "failed" and "weakness" in recs[1]["error"]

    def test_grid_order_and_limit(self):
        raw = {"space": {"r": 2.0, "dim": 3}, "target": {"coords": [1, 0, 0]},
               "sweep": {"t": [0.5, 1.0], "eta": [0.0, 0.1, 0.2]}}
        cells = sweep_cells(parse_config(raw))
        assert [(c["t"], c["eta"]) for c in cells][:3] == [(0.5, 0.0), (0.5, 0.1), (0.5, 0.2)]
        raw["sweep"] = {"t": [0.5] * 101, "eta": [0.0] * 100}
        with pytest.raises(ConfigError):
            sweep_cells(parse_config(raw))

    def test_unknown_axis(self):
        raw = {"space": {"r": 2.0, "dim": 3}, "target": {"coords": [1, 0, 0]}, "sweep": {"colour": [1]}}
        with pytest.raises(ConfigError, match="sweep"):
            parse_config(raw)
