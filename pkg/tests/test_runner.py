"""Batch runner and CLI: rows, serialization, determinism, exit codes."""

import math
from pathlib import Path

import numpy as np
import pytest

from fracctrl.cli import main
from fracctrl.config import parse_config
from fracctrl.runner import (
    CSV_HEADER,
    ResultRow,
    read_results,
    render_csv,
    render_table,
    run_experiment,
    write_results,
    write_table,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestRunExperiment:
    def test_linear_scalar_fixture(self):
        cfg = parse_config((CONFIG_DIR / "linear_scalar.yaml").read_text())
        rows = run_experiment(cfg)
        got = [r.terminal_error for r in rows]
        want = [0.5, 0.1 / 1.1, 0.01 / 1.01]
        np.testing.assert_allclose(got, want, atol=1e-12)
        assert all(r.converged for r in rows)
        assert all(r.picard_iters == 0 for r in rows)

    def test_numeric_columns_deterministic(self):
        cfg = parse_config((CONFIG_DIR / "linear_scalar.yaml").read_text())
        r1 = run_experiment(cfg)
        r2 = run_experiment(cfg)
        for a, b in zip(r1, r2):
            assert a.a == b.a
            assert a.terminal_error == b.terminal_error
            assert a.control_energy == b.control_energy
            assert a.picard_iters == b.picard_iters

    def test_semilinear_config_runs(self):
        text = (CONFIG_DIR / "diffusion.yaml").read_text()
        # shrink for test speed: fewer rows, coarser system
        text = text.replace("N: 16", "N: 6").replace(
            "a_values: [1.0e-1, 1.0e-2, 1.0e-3, 1.0e-4, 1.0e-5, 1.0e-6]",
            "a_values: [1.0e-2, 1.0e-4]",
        )
        rows = run_experiment(parse_config(text))
        assert len(rows) == 2
        assert all(r.converged for r in rows)
        assert rows[1].terminal_error < rows[0].terminal_error

    def test_shipped_benchmark_stable_under_refinement(self):
        """Doubling modes and grid moves every sweep row by under 1%."""
        text = (CONFIG_DIR / "diffusion.yaml").read_text()
        rows = run_experiment(parse_config(text))
        refined = run_experiment(
            parse_config(
                text.replace("N: 16", "N: 32").replace("grid_K: 64", "grid_K: 128")
            )
        )
        assert [r.terminal_error for r in rows] == pytest.approx(
            [r.terminal_error for r in refined], rel=1e-2
        )
        errs = [r.terminal_error for r in rows]
        assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
        assert errs[-1] < 1e-3


class TestSerialization:
    def make_rows(self):
        return [
            ResultRow(a=0.1, terminal_error=0.25, control_energy=1.5,
                      picard_iters=3, converged=True, wall_time=0.0),
            ResultRow(a=0.01, terminal_error=1.0 / 3.0, control_energy=2.0 / 7.0,
                      picard_iters=12, converged=False, wall_time=0.0),
        ]

    def test_header_only_for_empty(self):
        text = render_csv([])
        assert text == ",".join(CSV_HEADER) + "\n"

    def test_round_trip(self, tmp_path):
        rows = self.make_rows()
        path = tmp_path / "rows.csv"
        write_results(rows, path)
        back = read_results(path)
        assert back == rows

    def test_single_row_two_lines(self, tmp_path):
        path = tmp_path / "one.csv"
        write_results(self.make_rows()[:1], path)
        assert path.read_text().count("\n") == 2

    def test_io_error_carries_path(self):
        with pytest.raises(OSError, match="no/such/dir"):
            write_results(self.make_rows(), "no/such/dir/out.csv")

    def test_table_contains_all_rows(self, tmp_path):
        path = tmp_path / "table.txt"
        write_table(self.make_rows(), path)
        text = path.read_text()
        assert "terminal_error" in text
        assert "NO" in text  # non-converged marker

    def test_timing_zeroed_by_default(self):
        row = ResultRow(a=0.1, terminal_error=0.1, control_energy=0.1,
                        picard_iters=1, converged=True, wall_time=123.4)
        assert "1.23" not in render_csv([row])
        assert "1.23400000000000006e+02" in render_csv([row], include_timing=True)

    def test_nan_rows_round_trip(self, tmp_path):
        row = ResultRow(a=0.1, terminal_error=math.nan, control_energy=math.nan,
                        picard_iters=0, converged=False, wall_time=0.0)
        path = tmp_path / "nan.csv"
        write_results([row], path)
        back = read_results(path)[0]
        assert math.isnan(back.terminal_error)
        assert back.converged is False


class TestCLI:
    def test_check_valid(self, capsys):
        rc = main(["check", "--config", str(CONFIG_DIR / "linear_scalar.yaml")])
        assert rc == 0
        assert "ok" in capsys.readouterr().out

    def test_check_invalid(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text(
            (CONFIG_DIR / "linear_scalar.yaml")
            .read_text()
            .replace("[1.0, 0.1, 0.01]", "[0.1, 0.2]")
        )
        rc = main(["check", "--config", str(bad)])
        assert rc == 1
        assert "sweep.a_values: not decreasing" in capsys.readouterr().out

    def test_run_writes_csv(self, tmp_path):
        out = tmp_path / "rows.csv"
        rc = main([
            "run", "--config", str(CONFIG_DIR / "linear_scalar.yaml"),
            "--out", str(out),
        ])
        assert rc == 0
        rows = read_results(out)
        assert len(rows) == 3
        assert rows[0].terminal_error == pytest.approx(0.5, abs=1e-12)

    def test_run_byte_identical(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        cfg = str(CONFIG_DIR / "linear_scalar.yaml")
        assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["run", "--config", cfg, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_run_table_format(self, capsys):
        rc = main([
            "run", "--config", str(CONFIG_DIR / "linear_scalar.yaml"),
            "--format", "table",
        ])
        assert rc == 0
        assert "terminal_error" in capsys.readouterr().out

    def test_run_missing_config(self, capsys):
        rc = main(["run", "--config", "/no/such/file.yaml"])
        assert rc == 1

    def test_kernel_subcommand(self, capsys):
        rc = main(["kernel", "--alpha", "1.5", "--z", "-2.0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "branch=series" in out
        assert "0.029430685602826" in out

    def test_decay_subcommand(self, capsys):
        rc = main(["decay", "--alpha", "1.5", "--mu", "-1.0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "fitted_slope=-1.49999999" in out

    def test_gramian_subcommand(self, capsys):
        rc = main(["gramian", "--config", str(CONFIG_DIR / "linear_scalar.yaml")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "lambda_1=0.99999999" in out
        assert "eig_min=" in out

    def test_exit_code_2_on_row_failure(self, tmp_path, capsys):
        text = (CONFIG_DIR / "diffusion.yaml").read_text()
        text = text.replace("N: 16", "N: 4").replace("max_iter: 50", "max_iter: 1")
        text = text.replace("selection: midpoint", "selection: upper")
        text = text.replace(
            "a_values: [1.0e-1, 1.0e-2, 1.0e-3, 1.0e-4, 1.0e-5, 1.0e-6]",
            "a_values: [1.0e-3]",
        )
        cfg = tmp_path / "hard.yaml"
        cfg.write_text(text)
        rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")])
        assert rc == 2
