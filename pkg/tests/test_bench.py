import csv

import numpy as np
import pytest
from click.testing import CliRunner

from tfc import bench
from tfc.artifacts import read_records
from tfc.bench import CSV_FIELDS, ResultRow, RunConfig, acceptance_misses, export_surface, run
from tfc.cli import cli
from tfc.errors import InvalidArgumentError, UnknownProblemError
from tfc.problems import get_problem
from tfc.ui import print_rank_warnings


def small_config(out, **kwargs) -> RunConfig:
    defaults = dict(problem="problem1", n_values=[6, 7], m_values=[4, 8], out=out, repeats=1, threads=2)
    defaults.update(kwargs)
    return RunConfig(**defaults)


def read_csv(path):
    with open(path) as f:
        return list(csv.reader(f))


def row(**kwargs) -> ResultRow:
    values = dict(
        problem="problem1",
        basis="chebyshev",
        n=10,
        m=10,
        num_features=62,
        max_train_err=1e-10,
        max_test_err=1.2e-10,
        ls_time_ms=1.0,
        total_time_s=0.1,
        converged=True,
        gn_iters=0,
    )
    values.update(kwargs)
    return ResultRow(**values)


class TestRunConfig:
    def test_cells_skip_m_above_n(self):
        cells, skipped = RunConfig("problem1", n_values=[10, 5], m_values=[5, 10, 15]).cells()
        assert cells == [(5, 5), (10, 5), (10, 10)]
        assert skipped == [(5, 10), (5, 15), (10, 15)]

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            RunConfig("problem1", n_values=[0])
        with pytest.raises(InvalidArgumentError):
            RunConfig("problem1", basis="hermite")


class TestRun:
    def test_rows_csv_and_solutions(self, tmp_path):
        out = tmp_path / "res" / "p1.csv"
        skipped = []
        rows = run(small_config(out), on_skip=lambda n, m: skipped.append((n, m)))
        assert [(r.n, r.m) for r in rows] == [(6, 4), (7, 4)]
        assert skipped == [(6, 8), (7, 8)]
        assert all(r.constraint_residual < 1e-12 for r in rows)

        lines = read_csv(out)
        assert tuple(lines[0]) == CSV_FIELDS
        assert len(lines) == 3
        assert lines[1][:5] == ["problem1", "chebyshev", "6", "4", str(rows[0].num_features)]
        assert lines[1][9] == "true"
        assert "e" in lines[1][6]

        records = read_records(out.parent)
        assert [(r.n, r.m) for r in records] == [(6, 4), (7, 4)]
        assert all(r.seed == 0 for r in records)
        assert [r.rank for r in rows] == [r.report.rank for r in rows]
        assert len(records[0].xi) == rows[0].num_features

    def test_csv_deterministic_except_timings(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(small_config(a, threads=1))
        run(small_config(b, threads=3))
        timing = {CSV_FIELDS.index("ls_time_ms"), CSV_FIELDS.index("total_time_s")}
        strip = lambda rows: [[v for i, v in enumerate(r) if i not in timing] for r in rows]
        assert strip(read_csv(a)) == strip(read_csv(b))

    def test_seed_stored_with_solutions(self, tmp_path):
        out = tmp_path / "p1.csv"
        run(small_config(out, n_values=[6], m_values=[4], seed=17))
        assert [r.seed for r in read_records(tmp_path)] == [17]

    def test_nonlinear_problem_reports_iterations(self, tmp_path):
        rows = run(small_config(tmp_path / "p2.csv", problem="problem2", n_values=[6], m_values=[4]))
        assert rows[0].gn_iters >= 1

    def test_unknown_problem(self):
        with pytest.raises(UnknownProblemError):
            run(RunConfig("problem9", n_values=[5], m_values=[5]))


class TestAcceptance:
    def test_within_bounds(self):
        assert acceptance_misses([row()]) == []

    def test_out_of_bounds(self):
        misses = acceptance_misses([row(max_test_err=1e-5)])
        assert len(misses) == 1
        assert "n=10 m=10" in misses[0]

    def test_basis_specific_bound(self):
        assert acceptance_misses([row(problem="problem2", basis="chebyshev", n=25, m=25, max_test_err=1e-12)]) == []
        assert len(acceptance_misses([row(problem="problem2", basis="legendre", n=25, m=25, max_test_err=1e-12)])) == 1

    def test_constraint_residual(self):
        assert len(acceptance_misses([row(n=7, m=3, constraint_residual=1e-9)])) == 1


class TestSurface:
    def test_export(self, tmp_path):
        out = tmp_path / "p1.csv"
        run(small_config(out, n_values=[8], m_values=[6]))
        record = read_records(tmp_path)[-1]
        surf = tmp_path / "surf.dat"
        table = export_surface(get_problem("problem1"), record, 5, surf)

        with open(surf) as f:
            assert f.readline().strip() == "x y u u_true abs_err"
        data = np.loadtxt(surf, skiprows=1)
        assert data.shape == (25, 5)
        np.testing.assert_array_equal(data, table)
        # corners lie on constrained boundaries
        assert data[0, 2] == pytest.approx(0.0, abs=1e-14)
        assert data[0, 3] == 0.0
        assert data[-1, 3] == pytest.approx(2 / np.e)
        assert data[-1, 2] == pytest.approx(2 / np.e, abs=1e-12)

    def test_mismatched_record(self, tmp_path):
        run(small_config(tmp_path / "p1.csv", n_values=[6], m_values=[4]))
        record = read_records(tmp_path)[-1]
        record.m = 5
        with pytest.raises(InvalidArgumentError):
            export_surface(get_problem("problem1"), record, 5, tmp_path / "s.dat")


class TestCli:
    def test_run_and_surface(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "results" / "p1.csv"
        result = runner.invoke(
            cli,
            ["run", "--problem", "problem1", "--n", "6", "--m", "4,9", "--out", str(out), "--repeats", "1", "--threads", "1"],
        )
        assert result.exit_code == 0, result.output
        assert "skipping n=6 m=9" in result.output
        assert out.exists()

        surf = tmp_path / "surf.dat"
        result = runner.invoke(
            cli, ["surface", "--problem", "problem1", "--from", str(out.parent), "--res", "4", "--out", str(surf)]
        )
        assert result.exit_code == 0, result.output
        assert len(surf.read_text().splitlines()) == 17

    def test_strict_miss_exits_one(self, tmp_path, monkeypatch):
        monkeypatch.setitem(bench.ACCEPTANCE_BOUNDS, ("problem1", None, 6, 4), (0.0, 1e-30))
        result = CliRunner().invoke(
            cli,
            ["run", "-p", "problem1", "--n", "6", "--m", "4", "--out", str(tmp_path / "r.csv"), "--repeats", "1", "--strict"],
        )
        assert result.exit_code == 1
        assert "Acceptance misses" in result.output

    @pytest.mark.parametrize(
        "args",
        [
            ["run", "--problem", "problem9"],
            ["run", "--problem", "problem1", "--n", "a,b"],
            ["run", "--problem", "problem1", "--basis", "hermite"],
        ],
    )
    def test_usage_errors(self, args):
        assert CliRunner().invoke(cli, args).exit_code == 2

    def test_surface_without_artifact(self, tmp_path):
        result = CliRunner().invoke(
            cli, ["surface", "--problem", "problem1", "--from", str(tmp_path), "--out", str(tmp_path / "s.dat")]
        )
        assert result.exit_code == 2
        assert "no stored solution" in result.output

    def test_check_passes(self):
        result = CliRunner().invoke(cli, ["check", "--cases", "3", "--quiet"])
        assert result.exit_code == 0, result.output
        assert "All checks passed" in result.output

    @pytest.mark.slow
    def test_check_default_run(self):
        result = CliRunner().invoke(cli, ["check", "--quiet"])
        assert result.exit_code == 0, result.output
        assert "All checks passed" in result.output

    def test_check_corrupted(self):
        result = CliRunner().invoke(cli, ["check", "--cases", "1", "--corrupt-alpha", "--quiet"])
        assert result.exit_code == 1
        assert "switching-delta" in result.output

    def test_problems(self):
        result = CliRunner().invoke(cli, ["problems"])
        assert result.exit_code == 0
        for name in ("problem1", "problem2", "uni1", "multi2"):
            assert name in result.output


class TestOutput:
    def test_rank_warnings(self, capsys):
        print_rank_warnings([row(rank=50, rank_deficient=True), row(n=12, rank=62)])
        out = capsys.readouterr().out
        assert "n=10 m=10: rank 50 of 62 columns" in out
        assert "n=12" not in out

    def test_no_warning_at_full_rank(self, capsys):
        print_rank_warnings([row(rank=62)])
        assert capsys.readouterr().out == ""
