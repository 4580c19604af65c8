import csv
import hashlib
from pathlib import Path

import pytest

from dnls.cli import main
from dnls.errors import ConfigError
from dnls.experiments import ExperimentConfig, run, validate


def read_manifest(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        k, v = line.split("=", 1)
        out[k] = v
    return out


class TestBreatherTable:
    def test_golden_and_exit_code(self, tmp_path):
        cfg = ExperimentConfig("breather-table", tmp_path / "a", n_sites=3, order=3)
        res = run(cfg)
        assert res.exit_code == 0
        assert all(e.passed for e in res.expectations)
        rows = list(csv.reader(open(tmp_path / "a" / "breather_series.csv")))
        assert rows[0] == ["site", "power", "numerator", "denominator"]
        assert rows[1:5] == [
            ["1", "0", "1", "1"],
            ["1", "1", "-1", "2"],
            ["1", "2", "-5", "8"],
            ["1", "3", "-21", "16"],
        ]

    def test_reproducible_outputs(self, tmp_path):
        cfg1 = ExperimentConfig("breather-table", tmp_path / "r1", n_sites=4, order=5)
        cfg2 = ExperimentConfig("breather-table", tmp_path / "r2", n_sites=4, order=5)
        run(cfg1)
        run(cfg2)
        b1 = (tmp_path / "r1" / "breather_series.csv").read_bytes()
        b2 = (tmp_path / "r2" / "breather_series.csv").read_bytes()
        assert b1 == b2


class TestManifest:
    def test_hashes_cover_all_outputs(self, tmp_path):
        cfg = ExperimentConfig("spectrum-report", tmp_path / "m", n_sites=3, epsilon=0.01, gamma=0.2)
        res = run(cfg)
        assert res.exit_code == 0
        manifest = read_manifest(res.manifest)
        outdir = tmp_path / "m"
        produced = {
            p.name for p in outdir.iterdir() if p.name != "manifest.txt"
        }
        hashed = {k.split(":", 1)[1] for k in manifest if k.startswith("sha256:")}
        assert hashed == produced
        for name in produced:
            digest = hashlib.sha256((outdir / name).read_bytes()).hexdigest()
            assert manifest[f"sha256:{name}"] == digest

    def test_manifest_echoes_config(self, tmp_path):
        cfg = ExperimentConfig("spectrum-report", tmp_path / "e", n_sites=4, epsilon=0.02, gamma=0.1)
        res = run(cfg)
        manifest = read_manifest(res.manifest)
        assert manifest["experiment"] == "spectrum-report"
        assert float(manifest["epsilon"]) == 0.02
        assert manifest["status"] == "complete"
        assert "package_version" in manifest


class TestExitCodes:
    def test_unknown_experiment_is_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig("fig9-nope", tmp_path)

    def test_numerical_failure_exit_code(self, tmp_path):
        # epsilon far outside the solver basin -> BasinViolation inside the run
        cfg = ExperimentConfig(
            "fig3-crossings", tmp_path / "nf", n_sites=3, epsilons=(0.3,), t_end=10.0
        )
        res = run(cfg)
        assert res.exit_code == 3
        manifest = read_manifest(res.manifest)
        assert manifest["status"].startswith("incomplete")

    def test_expectation_failure_exit_code(self, tmp_path):
        # the N=3, eps=0.1 decay case sits ~6% below 2N-1, outside the 5% bar
        cfg = ExperimentConfig("fig4-decay", tmp_path / "xf", n_sites=3, epsilons=(0.1,))
        res = run(cfg)
        assert res.exit_code == 1
        assert any(not e.passed for e in res.expectations)


class TestValidate:
    def test_ok_with_step_estimate(self, tmp_path):
        cfg = ExperimentConfig("fig3-crossings", tmp_path, epsilon=0.1, t_end=100.0)
        notes = validate(cfg)
        assert notes[0] == "ok"
        assert any("integration steps" in n for n in notes)

    def test_basin_warning(self, tmp_path):
        cfg = ExperimentConfig("fig4-decay", tmp_path, epsilon=0.5)
        notes = validate(cfg)
        assert any("basin" in n for n in notes)

    def test_dt_warning(self, tmp_path):
        cfg = ExperimentConfig("fig3-crossings", tmp_path, epsilon=0.1, dt=0.5, t_end=100.0)
        notes = validate(cfg)
        assert any("conservation probe" in n for n in notes)


class TestCli:
    def test_validate_only(self, tmp_path, capsys):
        code = main([
            "fig3-crossings", "--epsilon", "0.1", "--t-end", "100",
            "--out", str(tmp_path / "v"), "--validate-only",
        ])
        assert code == 0
        assert "ok" in capsys.readouterr().out

    def test_breather_table_cli(self, tmp_path, capsys):
        code = main([
            "breather-table", "--n-sites", "3", "--order", "3",
            "--out", str(tmp_path / "cli"),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert (tmp_path / "cli" / "breather_series.csv").exists()
        assert (tmp_path / "cli" / "manifest.txt").exists()

    def test_config_file_overrides_flags(self, tmp_path, capsys):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("n_sites = 4\norder = 2\n# comment\n")
        code = main([
            "breather-table", "--n-sites", "3", "--order", "5",
            "--config", str(cfgfile), "--out", str(tmp_path / "c"),
        ])
        assert code == 0
        rows = list(csv.reader(open(tmp_path / "c" / "breather_series.csv")))
        sites = {r[0] for r in rows[1:]}
        powers = {r[1] for r in rows[1:]}
        assert sites == {"1", "2", "3", "4"}
        assert powers == {"0", "1", "2"}

    def test_epsilons_sweep_flag(self, tmp_path):
        code = main([
            "fig4-decay", "--n-sites", "2", "--epsilons", "0.05",
            "--out", str(tmp_path / "sw"),
        ])
        assert code == 0
        rows = (tmp_path / "sw" / "decay_exponents.csv").read_text().splitlines()
        assert len(rows) == 2  # header + one case
        assert rows[1].startswith("2,0.05")

    def test_bad_config_key(self, tmp_path, capsys):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("not_a_key = 1\n")
        code = main([
            "breather-table", "--config", str(cfgfile), "--out", str(tmp_path / "b"),
        ])
        assert code == 2

    def test_summary_written(self, tmp_path):
        code = main([
            "fig5-spectrum", "--gamma-points", "5",
            "--out", str(tmp_path / "s"),
        ])
        assert code == 0
        summary = (tmp_path / "s" / "summary.txt").read_text()
        assert "slope" in summary
        assert "failed=0" in summary
        assert (tmp_path / "s" / "plot_fig5.gp").exists()
        with open(tmp_path / "s" / "spectrum_vs_gamma.csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["gamma", "eigenvalue_index", "re", "im"]
        with open(tmp_path / "s" / "slopes.csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["pair", "slope_re_vs_gamma", "intercept", "is_zero_pair"]


class TestCsvSchemas:
    def test_fig3_crossing_and_prediction_tables(self, tmp_path):
        cfg = ExperimentConfig(
            "fig3-crossings", tmp_path / "f3", n_sites=3, epsilons=(0.1,), t_end=6500.0
        )
        res = run(cfg)
        names = {f.name for f in res.files}
        assert {"crossings_eps0.1.csv", "crossings_predicted_eps0.1.csv",
                "drift_predicted_eps0.1.csv"} <= names
        with open(tmp_path / "f3" / "crossings_eps0.1.csv") as fh:
            assert fh.readline().strip() == "k,T_k,X_k"
        with open(tmp_path / "f3" / "drift_predicted_eps0.1.csv") as fh:
            assert fh.readline().strip() == "t,phi,theta"

    def test_fig1_trajectory_schema(self, tmp_path):
        cfg = ExperimentConfig(
            "fig1-energies", tmp_path / "f1", n_sites=2, epsilon=0.01,
            gamma=0.2, t_end=50.0,
        )
        res = run(cfg)
        with open(tmp_path / "f1" / "trajectory.csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["t", "p_1", "p_2", "q_1", "q_2", "H", "E", "e_1", "e_2"]

    def test_trajectory_experiment_reproducible(self, tmp_path):
        kw = dict(n_sites=2, epsilon=0.01, gamma=0.2, t_end=100.0, seed=5)
        run(ExperimentConfig("fig1-energies", tmp_path / "a", **kw))
        run(ExperimentConfig("fig1-energies", tmp_path / "b", **kw))
        a = (tmp_path / "a" / "trajectory.csv").read_bytes()
        b = (tmp_path / "b" / "trajectory.csv").read_bytes()
        assert a == b
