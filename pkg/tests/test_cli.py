import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sparsefdr.cli import main, read_numeric_csv, InputError
from sparsefdr.monotone import nonmonotone_pair

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_column(path, values, header="y"):
    lines = [header] if header else []
    lines += [repr(float(v)) for v in values]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_estimate(out_dir):
    lines = (Path(out_dir) / "estimate.csv").read_text().splitlines()
    assert lines[0] == "index,value,selected"
    return [line.split(",") for line in lines[1:]]


class TestEstimate:
    def test_zero_input(self, tmp_path, capsys):
        src = write_column(tmp_path / "y.csv", np.zeros(10))
        assert main(["estimate", str(src), "log-factorial", "--gamma", "2.1", "--out", str(tmp_path)]) == 0
        rows = read_estimate(tmp_path)
        assert len(rows) == 10 and all(r[2] == "false" for r in rows)
        out = capsys.readouterr().out
        assert "selected_k: 0" in out and "objective: 0.0" in out

    @pytest.mark.parametrize("which,expected", [(0, {"0", "1"}), (1, {"1"})])
    def test_counterexample_pair(self, tmp_path, which, expected):
        y = nonmonotone_pair(40, 2.5)[which]
        src = write_column(tmp_path / "y.csv", y)
        assert main(["estimate", str(src), "counterexample", "--gamma", "2.5", "--out", str(tmp_path)]) == 0
        rows = read_estimate(tmp_path)
        assert {r[0] for r in rows if r[2] == "true"} == expected
        for r in rows:
            if r[2] == "true":
                assert float(r[1]) == y[int(r[0])]

    def test_golden_bytes(self, tmp_path):
        y = np.random.default_rng(5).normal(size=30) * 3
        src = write_column(tmp_path / "y.csv", y)
        for d in ("a", "b"):
            assert main(["estimate", str(src), "bh", "--q", "0.2", "--seed", "5", "--out", str(tmp_path / d)]) == 0
        assert (tmp_path / "a" / "estimate.csv").read_bytes() == (tmp_path / "b" / "estimate.csv").read_bytes()

    def test_regression_input(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 6))
        y = 3 * X[:, 2] + rng.standard_normal(40)
        src = tmp_path / "xy.csv"
        np.savetxt(src, np.column_stack([X, y]), delimiter=",")
        assert main(["estimate", str(src), "log_factorial", "--gamma", "2.0", "--p-tilde", "3",
                     "--out", str(tmp_path)]) == 0
        rows = read_estimate(tmp_path)
        assert len(rows) == 6 and rows[2][2] == "true"
        assert main(["estimate", str(src), "log_factorial", "--gamma", "2.0", "--method", "greedy",
                     "--out", str(tmp_path)]) == 0
        assert "heuristic" in capsys.readouterr().out

    def test_regression_budget(self, tmp_path):
        rng = np.random.default_rng(3)
        src = tmp_path / "xy.csv"
        np.savetxt(src, rng.standard_normal((30, 21)), delimiter=",")
        code = main(["estimate", str(src), "log_factorial", "--gamma", "2.0", "--p-tilde", "6",
                     "--guard-limit", "100", "--out", str(tmp_path)])
        assert code == 4

    def test_bad_input_line_number(self, tmp_path, capsys):
        src = tmp_path / "y.csv"
        src.write_text("y\n1.0\n2.0\nabc\n")
        assert main(["estimate", str(src), "bh", "--q", "0.1", "--out", str(tmp_path)]) == 2
        assert f"{src}:4" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "nope.csv"), "bh", "--q", "0.1"]) == 2

    def test_ragged_rows(self, tmp_path):
        src = tmp_path / "y.csv"
        src.write_text("1,2\n3\n")
        with pytest.raises(InputError, match="y.csv:2"):
            read_numeric_csv(src)

    @pytest.mark.parametrize("args", [
        ["lasso"],
        ["hard_threshold", "--gamma", "2"],
        ["bh", "--q", "1.5"],
        ["fixed_threshold", "--t", "1", "--gamma", "2"],
    ])
    def test_config_errors(self, tmp_path, args):
        src = write_column(tmp_path / "y.csv", [1.0, 2.0, 3.0])
        assert main(["estimate", str(src), *args, "--out", str(tmp_path)]) == 3


class TestExperimentCommands:
    def test_experiment_outputs(self, tmp_path, capsys):
        assert main(["experiment", str(CONFIGS / "regression_small.cfg"), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "replicates.csv").exists() and (tmp_path / "summary.csv").exists()
        assert "fdr:" in capsys.readouterr().out

    def test_zero_replicates(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text('n = 100\nreplicates = 0\n[estimator]\nname = "bh"\nq = 0.1\n')
        assert main(["experiment", str(cfg), "--out", str(tmp_path)]) == 3

    def test_budget_exit(self, tmp_path):
        cfg = tmp_path / "big.cfg"
        cfg.write_text('model = "regression"\nn = 40\np = 30\nsparsity_rule = "fixed(2)"\nreplicates = 2\n'
                       '[estimator]\nname = "log_factorial"\ngamma = 2.0\np_tilde = 8\n')
        assert main(["experiment", str(cfg), "--out", str(tmp_path)]) == 4

    def test_seed_override_and_threads(self, tmp_path):
        cfg = CONFIGS / "null_hard_threshold.cfg"
        main(["experiment", str(cfg), "--seed", "3", "--threads", "1", "--out", str(tmp_path / "a")])
        main(["experiment", str(cfg), "--seed", "3", "--threads", "4", "--out", str(tmp_path / "b")])
        main(["experiment", str(cfg), "--out", str(tmp_path / "c")])
        a = (tmp_path / "a" / "replicates.csv").read_bytes()
        assert a == (tmp_path / "b" / "replicates.csv").read_bytes()
        assert a != (tmp_path / "c" / "replicates.csv").read_bytes()

    def test_bad_threads(self, tmp_path):
        assert main(["experiment", str(CONFIGS / "fig1.cfg"), "--threads", "0", "--out", str(tmp_path)]) == 3

    def test_sweep_writes_svg(self, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text('sparsity_rule = "sqrt_n"\nreplicates = 10\nn_values = [1024, 4096, 16384]\n'
                       '[estimator]\nname = "log_factorial"\ngamma = 2.1\n')
        assert main(["sweep", str(cfg), "--out", str(tmp_path)]) == 0
        svg = (tmp_path / "fdr_trend.svg").read_text()
        assert svg.startswith("<?xml") and "<polyline" in svg and svg.rstrip().endswith("</svg>")
        assert (tmp_path / "fit.csv").exists()

    def test_sweep_degenerate(self, tmp_path, capsys):
        cfg = tmp_path / "null.cfg"
        cfg.write_text('sparsity_rule = "fixed(10)"\ntruth = "null"\nreplicates = 5\n'
                       'n_values = [1000, 2000, 4000]\n[estimator]\nname = "fixed_threshold"\nt = 8.0\n')
        assert main(["sweep", str(cfg), "--out", str(tmp_path)]) == 1
        assert "fit degenerate" in capsys.readouterr().err
        assert (tmp_path / "summary.csv").exists() and not (tmp_path / "fit.csv").exists()


class TestAudit:
    def test_hard_threshold_clean(self, capsys):
        assert main(["audit", "hard-threshold", "--gamma", "2", "--s", "10", "--trials", "10000"]) == 0
        assert "selection_violations: 0" in capsys.readouterr().out

    def test_injected_pair(self, tmp_path, capsys):
        code = main(["audit", "counterexample", "--gamma", "2.5", "--trials", "10000",
                     "--inject-paper-pair", "--out", str(tmp_path)])
        assert code == 1
        dump = (tmp_path / "counterexample.csv").read_text().splitlines()
        assert dump[0].startswith("# estimator=counterexample trial=0")
        small_y, large_y = nonmonotone_pair(50, 2.5)
        assert float(dump[2].split(",")[1]) == large_y[0]

    def test_zero_trials(self):
        assert main(["audit", "fixed_threshold", "--t", "1", "--trials", "0"]) == 3

    def test_unknown(self):
        assert main(["audit", "ridge"]) == 3

    def test_inject_requires_gamma(self):
        assert main(["audit", "top_s", "--s", "3", "--inject-paper-pair", "--trials", "2"]) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sparsefdr.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("estimate", "experiment", "sweep", "audit"):
        assert cmd in proc.stdout
