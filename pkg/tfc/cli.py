"""CLI interface for the TFC solver."""

import sys
from pathlib import Path

import click

from . import __version__
from .artifacts import find_record, solutions_path
from .bench import RunConfig, acceptance_misses, export_surface, run as run_sweep
from .checks import run_checks
from .config import config_file, get_or_create_config, save_config
from .errors import InvalidArgumentError, TfcError, UnknownProblemError
from .pde_solver import GaussNewtonOptions
from .poly_basis import BasisKind
from .problems import EXAMPLES, PROBLEMS, get_problem
from .ui import (
    console,
    create_problems_table,
    create_results_table,
    print_check_result,
    print_check_summary,
    print_error,
    print_misses,
    print_rank_warnings,
    print_row_done,
    print_run_header,
    print_skip,
)
from .utils import get_system_stats, thread_limit


BASIS_CHOICE = click.Choice([k.value for k in BasisKind])


def parse_int_list(value: str, name: str) -> list[int]:
    try:
        values = [int(v) for v in value.replace(" ", "").split(",") if v]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{value}'", param_hint=name)
    if not values or any(v < 1 for v in values):
        raise click.BadParameter("values must be positive integers", param_hint=name)
    return values


def _fail(e: TfcError) -> None:
    """Input problems become usage errors (exit 2); anything else exits 1."""
    if isinstance(e, (InvalidArgumentError, UnknownProblemError)):
        raise click.UsageError(str(e))
    print_error(str(e))
    sys.exit(1)


@click.group()
@click.version_option(version=__version__)
def cli():
    """Constrained-expression PDE solver and benchmark harness."""
    pass


# ============================================================================
# Sweeps
# ============================================================================


@cli.command()
@click.option("--problem", "-p", required=True, type=click.Choice(list(PROBLEMS)), help="Problem to solve")
@click.option("--basis", "-b", type=BASIS_CHOICE, default=None, help="Polynomial basis")
@click.option("--n", "n_list", default=None, help="Nodes per axis, e.g. 5,10,15")
@click.option("--m", "m_list", default=None, help="Basis degrees, e.g. 5,10")
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV output file")
@click.option("--strict", is_flag=True, help="Exit 1 when a cell misses its acceptance bound")
@click.option("--repeats", type=int, default=None, help="Timing repeats per cell (median reported)")
@click.option("--threads", type=int, default=None, help="Worker threads (TFC_THREADS overrides)")
@click.option("--seed", type=int, default=0, help="Stored with each solution in solutions.jsonl")
def run(problem, basis, n_list, m_list, out, strict, repeats, threads, seed):
    """Sweep (n, m) for a problem and write a CSV.

    Example: tfc run --problem problem1 --n 10,15 --m 5,10,15 --out results/p1.csv
    """
    cfg = get_or_create_config()
    try:
        config = RunConfig(
            problem=problem,
            basis=basis or cfg.default_basis,
            n_values=parse_int_list(n_list, "--n") if n_list else list(cfg.n_values),
            m_values=parse_int_list(m_list, "--m") if m_list else list(cfg.m_values),
            out=out or Path(cfg.results_dir) / f"{problem}_{basis or cfg.default_basis}.csv",
            seed=seed,
            strict=strict,
            repeats=repeats if repeats is not None else cfg.repeats,
            threads=threads if threads is not None else cfg.threads,
            test_points=cfg.test_points,
            gn=GaussNewtonOptions(max_iter=cfg.max_iter, step_tol=cfg.step_tol, res_tol=cfg.res_tol),
        )
    except TfcError as e:
        _fail(e)

    cells, _ = config.cells()
    workers = min(thread_limit(config.threads), max(len(cells), 1))
    print_run_header(problem, config.basis, len(cells), workers, get_system_stats())

    try:
        rows = run_sweep(config, on_row=print_row_done, on_skip=print_skip)
    except TfcError as e:
        _fail(e)

    console.print()
    console.print(create_results_table(rows))
    print_rank_warnings(rows)
    console.print()
    console.print(f"[green]✓[/] Wrote {len(rows)} rows to [cyan]{config.out}[/]")
    console.print(f"[dim]Solutions: {solutions_path(config.out.parent)}[/]")

    if strict:
        misses = acceptance_misses(rows)
        if misses:
            print_misses(misses)
            sys.exit(1)


@cli.command()
@click.option("--seed", type=int, default=0, help="Seed for random constraint sets and oracles")
@click.option("--cases", type=int, default=50, help="Number of random constraint sets")
@click.option("--corrupt-alpha", is_flag=True, hidden=True)
@click.option("--quiet", "-q", is_flag=True, help="Only print failures and the summary")
def check(seed, cases, corrupt_alpha, quiet):
    """Run the worked-example and invariant suite."""

    def show(result):
        if not quiet or not result.passed:
            print_check_result(result)

    try:
        results = run_checks(seed=seed, random_count=cases, corrupt_alpha=corrupt_alpha, on_result=show)
    except TfcError as e:
        _fail(e)
    console.print()
    print_check_summary(results)
    if not all(r.passed for r in results):
        sys.exit(1)


@cli.command()
@click.option("--problem", "-p", required=True, type=click.Choice(list(PROBLEMS)), help="Problem the solution belongs to")
@click.option("--from", "source", required=True, type=click.Path(file_okay=False, path_type=Path), help="Results directory of a prior run")
@click.option("--res", type=int, default=100, help="Grid points per axis")
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Output grid file")
@click.option("--basis", "-b", type=BASIS_CHOICE, default=None, help="Pick the solution with this basis")
@click.option("--n", "n", type=int, default=None, help="Pick the solution with this n")
@click.option("--m", "m", type=int, default=None, help="Pick the solution with this m")
def surface(problem, source, res, out, basis, n, m):
    """Export the solved surface on a uniform grid."""
    record = find_record(source, problem, basis, n, m)
    if record is None:
        raise click.UsageError(f"no stored solution for {problem} in {solutions_path(source)}")
    try:
        table = export_surface(get_problem(problem), record, res, out)
    except TfcError as e:
        _fail(e)
    worst = float(table[:, 4].max())
    console.print(
        f"[green]✓[/] Wrote {len(table)} points to [cyan]{out}[/] "
        f"[dim]({record.basis}, n={record.n}, m={record.m}, max abs err {worst:.2e})[/]"
    )


@cli.command()
def problems():
    """List registered problems and worked examples."""
    console.print(create_problems_table(PROBLEMS, EXAMPLES))


# ============================================================================
# Configuration
# ============================================================================


@cli.command()
@click.option("--basis", type=BASIS_CHOICE, help="Default basis")
@click.option("--n", "n_list", help="Default n list, e.g. 5,10,15")
@click.option("--m", "m_list", help="Default m list")
@click.option("--repeats", type=int, help="Timing repeats per cell")
@click.option("--threads", type=int, help="Worker threads (0 = all cores)")
@click.option("--results-dir", help="Default output directory")
def config(basis, n_list, m_list, repeats, threads, results_dir):
    """Show or update configuration."""
    cfg = get_or_create_config()

    changed = False
    if basis is not None:
        cfg.default_basis = basis
        changed = True
        console.print(f"[green]✓[/] Default basis set to {basis}")
    if n_list is not None:
        cfg.n_values = parse_int_list(n_list, "--n")
        changed = True
        console.print(f"[green]✓[/] Default n set to {cfg.n_values}")
    if m_list is not None:
        cfg.m_values = parse_int_list(m_list, "--m")
        changed = True
        console.print(f"[green]✓[/] Default m set to {cfg.m_values}")
    if repeats is not None:
        if repeats < 1:
            raise click.BadParameter("must be >= 1", param_hint="--repeats")
        cfg.repeats = repeats
        changed = True
        console.print(f"[green]✓[/] Repeats set to {repeats}")
    if threads is not None:
        cfg.threads = max(threads, 0)
        changed = True
        console.print(f"[green]✓[/] Threads set to {cfg.threads or 'all cores'}")
    if results_dir is not None:
        cfg.results_dir = results_dir
        changed = True
        console.print(f"[green]✓[/] Results directory set to {results_dir}")

    if changed:
        save_config(cfg)
        console.print()

    console.print("[bold]Current Configuration[/]")
    console.print()
    console.print(f"  [dim]Basis:[/]        {cfg.default_basis}")
    console.print(f"  [dim]n values:[/]     {', '.join(map(str, cfg.n_values))}")
    console.print(f"  [dim]m values:[/]     {', '.join(map(str, cfg.m_values))}")
    console.print(f"  [dim]Repeats:[/]      {cfg.repeats}")
    console.print(f"  [dim]Threads:[/]      {cfg.threads or 'all cores'}")
    console.print(f"  [dim]Test grid:[/]    {cfg.test_points} per axis")
    console.print(f"  [dim]Gauss-Newton:[/] max_iter {cfg.max_iter}, step_tol {cfg.step_tol:g}, res_tol {cfg.res_tol:g}")
    console.print(f"  [dim]Results dir:[/]  {cfg.results_dir}")
    console.print()
    console.print(f"[dim]Config file: {config_file()}[/]")


if __name__ == "__main__":
    cli()
