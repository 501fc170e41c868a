"""Command-line interface for repliq."""

from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError

from . import __version__
from .cli_ui import Display
from .config import load_settings
from .errors import NumericalError, RepliqError
from .logging_config import get_logger, setup_logging
from .models import DependencyMode, ErrorFlavor, HypothesisConfig
from .pipeline import AnalyzeRequest, FlavorChoice, run_analyze, run_simulate
from .simulation import (
    scenario_f00,
    theoretical_fdr_bound,
    theoretical_fwer_bound,
)
from .tables import OutputFormat, format_value

app = typer.Typer(
    name="repliq",
    help="Directional replicability r-values for primary and follow-up studies",
    add_completion=False,
)

display = Display()
logger = get_logger(__name__)

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


@app.callback()
def main():
    """Configure logging before any command runs."""
    setup_logging()


def _exit_for(error: Exception) -> typer.Exit:
    """Report an error and map it to an exit code."""
    if isinstance(error, ValidationError):
        details = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or 'value'}: {err['msg']}"
            for err in error.errors()
        )
        display.show_error(f"Invalid parameters: {details}")
        return typer.Exit(EXIT_INPUT)
    display.show_error(f"Error: {error}")
    logger.error("command_failed", error=str(error), kind=type(error).__name__)
    return typer.Exit(EXIT_NUMERICAL if isinstance(error, NumericalError) else EXIT_INPUT)


@app.command()
def version():
    """Show the version."""
    typer.echo(f"repliq {__version__}")


@app.command()
def analyze(
    input_path: Path = typer.Option(..., "--input", help="CSV table of one-sided p-values"),
    m: int = typer.Option(..., "--m", help="Number of features examined in the primary study"),
    output: Optional[Path] = typer.Option(None, "--output", help="Output file (default: stdout)"),
    fmt: Optional[OutputFormat] = typer.Option(None, "--format", help="Output format: csv or json"),
    l00: Optional[float] = typer.Option(None, "--l00", help="Lower bound on the double-null fraction"),
    c2: Optional[float] = typer.Option(None, "--c2", help="Follow-up share of the level"),
    dep: Optional[DependencyMode] = typer.Option(None, "--dep", help="indep, mstar or threshold"),
    t: Optional[float] = typer.Option(None, "--t", help="Selection threshold (threshold mode only)"),
    flavor: Optional[FlavorChoice] = typer.Option(None, "--flavor", help="fdr, fwer or both"),
    level: Optional[float] = typer.Option(None, "--level", help="Nominal level for claims"),
    select: str = typer.Option(
        "provided", "--select", help="provided, threshold:<c>, bh:<q>, bonf:<a> or topk:<k>"
    ),
    quiet: bool = typer.Option(False, "--quiet", help="Suppress the console summary"),
):
    """Compute r-values and replicability claims from a p-value table."""
    settings = load_settings()
    try:
        request = AnalyzeRequest(
            input_path=input_path,
            m=m,
            l00=settings.l00 if l00 is None else l00,
            c2=settings.c2 if c2 is None else c2,
            dependency=dep or DependencyMode(settings.dependency),
            threshold=t,
            flavor=flavor or FlavorChoice(settings.flavor),
            level=settings.level if level is None else level,
            selection=select,
            output_path=output,
            output_format=fmt or OutputFormat(settings.output_format),
        )
        report, text = run_analyze(request)
    except (RepliqError, ValueError) as e:
        raise _exit_for(e)

    if output is None:
        typer.echo(text, nl=False)
    if not quiet:
        display.show_report(report)


@app.command()
def simulate(
    scenario_path: Path = typer.Argument(..., help="JSON scenario file"),
    output: Optional[Path] = typer.Option(None, "--output", help="Output file (default: stdout)"),
    fmt: Optional[OutputFormat] = typer.Option(None, "--format", help="Output format: csv or json"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed (REPLIQ_SEED takes precedence)"),
    reps: Optional[int] = typer.Option(None, "--reps", help="Number of replications"),
    quiet: bool = typer.Option(False, "--quiet", help="Suppress the console summary"),
):
    """Estimate directional FDR and FWER of a scenario by Monte Carlo."""
    settings = load_settings()
    try:
        scenario, result, text = run_simulate(
            scenario_path,
            seed=settings.seed if settings.seed is not None else seed,
            replications=reps,
            output_path=output,
            output_format=fmt or OutputFormat(settings.output_format),
        )
    except (RepliqError, ValueError) as e:
        raise _exit_for(e)

    if output is None:
        typer.echo(text, nl=False)
    if not quiet:
        display.show_sim_result(result, scenario.analysis.level)


def _parse_counts(text: str) -> dict[HypothesisConfig, int]:
    counts: dict[HypothesisConfig, int] = {}
    for entry in text.replace(";", " ").split():
        key, sep, value = entry.partition("=")
        if not sep:
            raise ValueError(f"Invalid count entry {entry!r}; expected h1,h2=n")
        counts[HypothesisConfig.parse(key)] = int(value)
    if not counts:
        raise ValueError("no configuration counts given")
    return counts


@app.command()
def bound(
    counts: str = typer.Option(
        ..., "--counts", help="Configuration counts, e.g. '0,0=425;1,1=20;1,0=5'"
    ),
    level: Optional[float] = typer.Option(None, "--level", help="Nominal level q or alpha"),
    l00: Optional[float] = typer.Option(None, "--l00", help="Lower bound on the double-null fraction"),
    c2: Optional[float] = typer.Option(None, "--c2", help="Follow-up share of the level"),
    flavor: ErrorFlavor = typer.Option(ErrorFlavor.FDR, "--flavor", help="fdr or fwer"),
    selected_fraction: float = typer.Option(
        1.0, "--selected-fraction", help="Expected non-replicated share of the follow-up set"
    ),
):
    """Evaluate the analytic upper bound on the directional error rate."""
    settings = load_settings()
    q = settings.level if level is None else level
    l00 = settings.l00 if l00 is None else l00
    c2 = settings.c2 if c2 is None else c2
    try:
        parsed = _parse_counts(counts)
        m = sum(parsed.values())
        if flavor is ErrorFlavor.FWER:
            value = theoretical_fwer_bound(parsed, q, l00, c2, m)
        else:
            value = theoretical_fdr_bound(
                parsed, q, l00, c2, m, selected_nonreplicated_fraction=selected_fraction
            )
    except (RepliqError, ValueError) as e:
        raise _exit_for(e)

    typer.echo(format_value(value))
    if l00 > scenario_f00(parsed):
        display.show_warning(f"l00={l00:g} exceeds f00={scenario_f00(parsed):g}: no control guarantee")


if __name__ == "__main__":
    app()
