"""Rich rendering of analysis reports, simulation results and diagnostics."""

from dataclasses import dataclass
from typing import Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..models import RValueReport
from ..simulation.harness import SimResult
from ..tables import format_value


@dataclass
class Theme:
    """Console colors."""
    primary: str = "cyan"
    secondary: str = "magenta"
    success: str = "green"
    warning: str = "yellow"
    error: str = "red"
    info: str = "blue"
    text: str = "white"
    border: str = "bright_black"
    title: str = "bold cyan"


class Display:
    """Terminal display for summaries and diagnostics.

    Writes to stderr by default so that artifacts sent to stdout stay machine-readable.
    """

    def __init__(self, console: Optional[Console] = None, theme: Optional[Theme] = None):
        self.console = console or Console(stderr=True)
        self.theme = theme or Theme()

    def create_report_table(self, report: RValueReport, limit: int = 25) -> Table:
        """Table of the first ``limit`` rows of a report, claims highlighted."""
        table = Table(
            title=f"Replicability r-values (R1={len(report.rows)})",
            title_style=self.theme.title,
            border_style=self.theme.border,
        )
        table.add_column("Feature", style=self.theme.primary, no_wrap=True)
        table.add_column("Direction", style=self.theme.secondary)
        table.add_column("p'1", justify="right")
        table.add_column("p'2", justify="right")
        table.add_column("r FDR", justify="right")
        table.add_column("r FWER", justify="right")
        table.add_column("Claimed", justify="center")

        for row in report.rows[:limit]:
            style = self.theme.success if row.claimed else None
            table.add_row(
                row.feature_id,
                row.direction.value,
                format_value(row.p1_directed),
                format_value(row.p2_directed),
                format_value(row.r_fdr) or "-",
                format_value(row.r_fwer) or "-",
                "yes" if row.claimed else "no",
                style=style,
            )
        if len(report.rows) > limit:
            table.caption = f"{len(report.rows) - limit} more rows in the output artifact"
        return table

    def create_stat_table(self, title: str, stats: dict[str, str]) -> Table:
        """Two-column key/value table."""
        table = Table(
            title=title,
            title_style=self.theme.title,
            border_style=self.theme.border,
            show_header=False,
            padding=(0, 1),
        )
        table.add_column("Stat", style=self.theme.secondary, no_wrap=True)
        table.add_column("Value", style=self.theme.primary, justify="right")
        for stat, value in stats.items():
            table.add_row(stat, value)
        return table

    def show_report(self, report: RValueReport) -> None:
        """Print a report summary and its leading rows."""
        meta = report.metadata
        self.console.print(self.create_report_table(report))
        summary = {
            "m": str(meta.get("m")),
            "dependency": str(meta.get("dependency")),
            "level": str(meta.get("level")),
            "claims": str(len(report.claimed_ids)),
        }
        self.console.print(self.create_stat_table("Analysis", summary))
        for warning in meta.get("warnings", []):
            self.show_warning(warning)
        if meta.get("conservative_fallback"):
            self.show_warning(
                "conservative c1 fallback used for: " + ", ".join(meta["conservative_fallback"])
            )

    def show_sim_result(self, result: SimResult, level: float) -> None:
        """Print Monte Carlo estimates and the control guarantee stamp."""
        se_note = "" if result.se_defined else " (undefined)"
        stats = {
            "replications": str(result.replications_run),
            "directional FDR": f"{result.empirical_fdr:.4f} ± {result.mc_se_fdr:.4f}{se_note}",
            "directional FWER": f"{result.empirical_fwer:.4f} ± {result.mc_se_fwer:.4f}{se_note}",
            "mean power": f"{result.mean_power:.4f}",
            "bound": f"{result.theoretical_bound:.5f}",
            "refined bound": f"{result.refined_bound:.5f}",
            "level": f"{level:g}",
        }
        self.console.print(self.create_stat_table("Simulation", stats))
        if result.guarantee:
            self.show_success("control guaranteed for this scenario")
        else:
            self.console.print(
                Panel(
                    "\n".join(result.guarantee_notes),
                    title="no control guarantee",
                    border_style=self.theme.warning,
                )
            )

    def show_error(self, message: str):
        """Display an error message."""
        self.console.print(f"✗ {message}", style=self.theme.error, markup=False)

    def show_success(self, message: str):
        """Display a success message."""
        self.console.print(f"✓ {message}", style=self.theme.success, markup=False)

    def show_warning(self, message: str):
        """Display a warning message."""
        self.console.print(f"⚠ {message}", style=self.theme.warning, markup=False)
