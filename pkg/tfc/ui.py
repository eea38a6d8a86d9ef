"""Terminal output using rich."""

from typing import Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from .utils import SystemStats


console = Console()


def _sci(value) -> str:
    return "—" if value is None else f"{value:.2e}"


def print_run_header(problem: str, basis: str, cells: int, workers: int, stats: SystemStats) -> None:
    content = Text()
    content.append("Problem: ", style="dim")
    content.append(f"{problem}\n", style="cyan")
    content.append("Basis:   ", style="dim")
    content.append(f"{basis}\n")
    content.append("Cells:   ", style="dim")
    content.append(f"{cells}\n")
    content.append("Machine: ", style="dim")
    content.append(f"{stats.hostname}, {stats.cpu_count} cores, {stats.ram_total_gb:.1f} GB RAM, {workers} worker(s)")
    console.print(Panel(content, title="[bold]TFC sweep[/]", border_style="cyan"))


def print_row_done(row) -> None:
    mark = "[green]✓[/]" if row.converged else "[yellow]![/]"
    console.print(
        f"  {mark} n={row.n:<3} m={row.m:<3} test err {_sci(row.max_test_err)}  [dim]{row.total_time_s:.2f}s[/]"
    )


def print_skip(n: int, m: int) -> None:
    console.print(f"  [dim]skipping n={n} m={m} (m > n)[/]")


def create_results_table(rows: Sequence) -> Table:
    table = Table(show_header=True, header_style="bold cyan", box=None)
    table.add_column("N", justify="right")
    table.add_column("M", justify="right")
    table.add_column("FEATURES", justify="right")
    table.add_column("RANK", justify="right")
    table.add_column("TRAIN ERR", justify="right")
    table.add_column("TEST ERR", justify="right", style="yellow")
    table.add_column("CONSTRAINT", justify="right", style="dim")
    table.add_column("LS (ms)", justify="right")
    table.add_column("TOTAL (s)", justify="right")
    table.add_column("GN", justify="right")
    table.add_column("STATUS", justify="center")

    for row in rows:
        status = Text("✓ converged", style="green") if row.converged else Text("✗ not converged", style="red")
        table.add_row(
            str(row.n),
            str(row.m),
            str(row.num_features),
            Text(str(row.rank), style="yellow" if row.rank_deficient else ""),
            _sci(row.max_train_err),
            _sci(row.max_test_err),
            _sci(row.constraint_residual),
            f"{row.ls_time_ms:.2f}",
            f"{row.total_time_s:.3f}",
            str(row.gn_iters),
            status,
        )
    return table


def print_rank_warnings(rows: Sequence) -> None:
    deficient = [r for r in rows if r.rank_deficient]
    if not deficient:
        return
    console.print()
    for r in deficient:
        console.print(f"  [yellow]![/] n={r.n} m={r.m}: rank {r.rank} of {r.num_features} columns")
    console.print("  [dim]Rank-deficient cells were solved on the retained singular values.[/]")


def print_misses(misses: Sequence[str]) -> None:
    body = Text("\n".join(misses), style="red")
    console.print()
    console.print(Panel(body, title="[bold red]✗ Acceptance misses[/]", border_style="red"))


def print_check_result(result) -> None:
    mark = "[green]✓[/]" if result.passed else "[red]✗[/]"
    detail = f"  [dim]{result.detail}[/]" if result.detail else ""
    console.print(f"  {mark} {result.case:<10} {result.check:<24} {result.error:.1e}{detail}")


def print_check_summary(results: Sequence) -> None:
    failed = [r for r in results if not r.passed]
    cases = len({r.case for r in results})
    if failed:
        body = Text(f"{len(failed)} of {len(results)} checks failed across {cases} cases", style="red")
        console.print(Panel(body, title="[bold red]✗ Checks failed[/]", border_style="red"))
    else:
        body = Text(f"{len(results)} checks passed across {cases} cases")
        console.print(Panel(body, title="[bold green]✓ All checks passed[/]", border_style="green"))


def create_problems_table(problems: dict, examples: dict) -> Table:
    table = Table(show_header=True, header_style="bold cyan", box=None)
    table.add_column("NAME", style="cyan", no_wrap=True)
    table.add_column("KIND")
    table.add_column("DESCRIPTION", style="dim")
    for name, factory in problems.items():
        p = factory()
        kind = "linear PDE" if p.linear else "nonlinear PDE"
        table.add_row(name, kind, p.description)
    for name, factory in examples.items():
        table.add_row(name, "example", factory().description)
    return table


def print_error(message: str) -> None:
    console.print(f"[red]✗[/] {message}")
