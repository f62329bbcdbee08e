from typing import Optional

import pandas as pd
from InquirerPy import inquirer
from InquirerPy.base.control import Choice
from InquirerPy.separator import Separator
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..database.repository import Experiment


console = Console()


TASKS = [
    ("portfolio", "Robust portfolio (worst-case DRM over mixtures)"),
    ("dppo", "DRM policy optimization on the inventory chain"),
    ("tracker-bench", "Quantile tracker rate benchmark"),
    ("oracle", "Extreme-case quantile oracle"),
    ("runs", "Recent experiments"),
]

DISTORTIONS = [
    ("cvar:0.7", "CVaR, level 0.7"),
    ("wang:-0.85", "Wang transform, -0.85"),
    ("sshape:5", "S-shape, 5"),
    ("disc:5", "Discontinuous composite, 5"),
    ("cpt:0.7", "CPT weighting, 0.7"),
    ("var:0.7", "VaR, level 0.7"),
    ("mean", "Expectation"),
]

ALGORITHMS = [
    ("hybrid", "Hybrid (smooth part QF, jumps DM)"),
    ("qf", "QF-form two-timescale"),
    ("dm", "DM-form three-timescale"),
    ("batching", "Single-timescale batching baseline"),
]


class MenuUI:

    @staticmethod
    def show_welcome() -> None:
        console.print()
        console.print(Panel.fit(
            "[bold cyan]drm-opt[/bold cyan]\n"
            "[dim]Multi-timescale optimizers for distortion risk measures[/dim]",
            border_style="cyan"
        ))
        console.print()

    @staticmethod
    async def _select(message: str, options: list[tuple[str, str]], default: Optional[str] = None) -> str:
        choices = [Choice(value=value, name=f"{value} - {description}") for value, description in options]
        return await inquirer.select(
            message=message,
            choices=choices,
            default=default,
            pointer="→",
            amark="✓",
        ).execute_async()

    @staticmethod
    async def select_task() -> Optional[str]:
        choices = [Choice(value=value, name=description) for value, description in TASKS]
        choices.append(Separator())
        choices.append(Choice(value=None, name="← Quit"))
        return await inquirer.select(
            message="What would you like to run?",
            choices=choices,
            pointer="→",
            amark="✓",
        ).execute_async()

    @staticmethod
    async def select_distortion(default: str = "cvar:0.7") -> str:
        return await MenuUI._select("Distortion function:", DISTORTIONS, default)

    @staticmethod
    async def select_algorithm(default: str = "hybrid") -> str:
        return await MenuUI._select("Algorithm:", ALGORITHMS, default)

    @staticmethod
    async def ask_number(message: str, default: int, minimum: int = 1, maximum: int = 10_000_000) -> int:
        result = await inquirer.number(
            message=message,
            min_allowed=minimum,
            max_allowed=maximum,
            default=default,
            validate=lambda x: x.isdigit() and int(x) >= minimum
        ).execute_async()
        return int(result)

    @staticmethod
    async def ask_output(default: str) -> str:
        return await inquirer.text(message="Output directory:", default=default).execute_async()

    @staticmethod
    async def confirm(message: str, default: bool = True) -> bool:
        return await inquirer.confirm(message=message, default=default).execute_async()

    @staticmethod
    def show_config(text: str) -> None:
        console.print(Panel(text.rstrip(), title="[bold]config.env[/bold]", border_style="dim", padding=(0, 1)))

    @staticmethod
    def show_summary(
        title: str,
        metric: str,
        rows: list[tuple[int, int, float, float]],
        aggregate: Optional[tuple[float, float, float]] = None,
    ) -> None:
        """``rows`` hold (replication, seed, final metric, final DRM)."""
        console.print(f"\n[bold cyan]{title}[/bold cyan]\n")

        table = Table(show_header=True, header_style="bold", box=None, padding=(0, 2))
        table.add_column("Run", justify="right")
        table.add_column("Seed", justify="right")
        table.add_column(metric, justify="right", style="cyan")
        table.add_column("DRM", justify="right")
        for index, seed, final_metric, final_drm in rows:
            table.add_row(str(index), str(seed), f"{final_metric:.6g}", f"{final_drm:.6g}")
        console.print(table)

        if aggregate:
            mean, lower, upper = aggregate
            console.print(f"\n[bold]{metric}[/bold] mean {mean:.6g}  [dim]95% band [{lower:.6g}, {upper:.6g}][/dim]")
        console.print()

    @staticmethod
    def show_returns(rows: list[tuple[str, float, dict[float, float]]]) -> None:
        """Evaluation summaries: (policy label, mean, quantiles by level)."""
        if not rows:
            return
        levels = sorted(rows[0][2])
        table = Table(show_header=True, header_style="bold", box=None, padding=(0, 2))
        table.add_column("Policy")
        table.add_column("Mean", justify="right", style="cyan")
        for level in levels:
            table.add_column(f"q{level:g}", justify="right")
        for label, mean, quantiles in rows:
            table.add_row(label, f"{mean:.2f}", *(f"{quantiles[level]:.2f}" for level in levels))
        console.print(table)
        console.print()

    @staticmethod
    def show_oracle(spec: str, levels: list[float], values: list[float], drm: float, moments: tuple[float, float]) -> None:
        console.print(f"\n[bold cyan]Extreme-case quantiles for {spec}[/bold cyan]\n")
        table = Table(show_header=False, box=None, padding=(0, 2))
        table.add_column("z", style="cyan", justify="right")
        table.add_column("F*^-1(z)", justify="right")
        for z, v in zip(levels, values):
            table.add_row(f"{z:g}", f"{v:.9f}")
        console.print(table)
        console.print(f"\nDRM of the extreme law: [bold]{drm:.6f}[/bold]")
        console.print(f"[dim]mean {moments[0]:.2e}, second moment {moments[1]:.6f}[/dim]\n")

    @staticmethod
    def show_timing(frame: pd.DataFrame) -> None:
        table = Table(show_header=True, header_style="bold", box=None, padding=(0, 2))
        for column in ("algorithm", "N", "d", "params", "ms_per_iter"):
            table.add_column(column, justify="left" if column == "algorithm" else "right")
        for row in frame.itertuples(index=False):
            table.add_row(row.algorithm, str(row.N), str(row.d), str(row.params), f"{row.ms_per_iter:.4f}")
        console.print(table)
        console.print()

    @staticmethod
    def show_experiments(experiments: list[Experiment]) -> None:
        if not experiments:
            console.print("[dim]No experiments recorded yet.[/dim]")
            return
        table = Table(show_header=True, header_style="bold", box=None, padding=(0, 2))
        table.add_column("ID", justify="right")
        table.add_column("Task")
        table.add_column("Reps", justify="right")
        table.add_column("Status")
        table.add_column("Median metric", justify="right", style="cyan")
        table.add_column("Started")
        table.add_column("Output", style="dim")
        for e in experiments:
            metric = "-" if e.median_metric is None else f"{e.median_metric:.6g}"
            style = {"done": "green", "failed": "red"}.get(e.status, "yellow")
            table.add_row(
                str(e.id), e.task, str(e.replications), f"[{style}]{e.status}[/{style}]",
                metric, e.created_at.strftime("%Y-%m-%d %H:%M"), e.output_dir,
            )
        console.print(table)
        console.print()

    @staticmethod
    def show_error(message: str) -> None:
        console.print(f"[bold red]Error:[/bold red] {message}")

    @staticmethod
    def show_info(message: str) -> None:
        console.print(f"[cyan]ℹ[/cyan] {message}")

    @staticmethod
    def show_success(message: str) -> None:
        console.print(f"[green]✓[/green] {message}")
