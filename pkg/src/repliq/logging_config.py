"""Logging configuration for repliq.

Provides structured JSON logging for batch runs and pretty console logging for
interactive use. Log output goes to stderr so that tables written to stdout stay
machine-readable.
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import structlog

from .config import Settings, load_settings


def get_log_level(config: Optional[Settings] = None) -> int:
    """Get log level from settings (REPLIQ_LOG_LEVEL)."""
    level_name = (config or load_settings()).log_level.upper()
    return getattr(logging, level_name, logging.INFO)


def get_log_format(config: Optional[Settings] = None) -> str:
    """Get log format from settings (REPLIQ_LOG_FORMAT)."""
    return "json" if (config or load_settings()).is_json_logging else "pretty"


def setup_logging(config: Optional[Settings] = None) -> None:
    """Configure logging from settings, read afresh from the environment by default.

    With REPLIQ_LOG_FORMAT=json, uses structured JSON logging.
    With REPLIQ_LOG_FORMAT=pretty, uses colored console output.
    A rotating file handler is added only when REPLIQ_LOG_FILE is set.
    """
    config = config or load_settings()
    log_level = get_log_level(config)
    log_format = get_log_format(config)

    if log_format == "json":
        renderer = structlog.processors.JSONRenderer()
        timestamper = structlog.processors.TimeStamper(fmt="iso")
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=True)
        timestamper = structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S")

    processors = [
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        timestamper,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        renderer,
    ]

    structlog.configure(
        processors=processors,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=log_level,
    )
    logging.getLogger().setLevel(log_level)

    if not config.has_log_file:
        return

    Path(config.log_file).parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.handlers.RotatingFileHandler(
        config.log_file,
        maxBytes=config.log_max_bytes,
        backupCount=config.log_backup_count,
    )
    file_handler.setLevel(log_level)

    if log_format == "json":
        file_handler.setFormatter(logging.Formatter("%(message)s"))
    else:
        file_handler.setFormatter(
            logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
        )

    logging.getLogger().addHandler(file_handler)


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a logger instance with the given name.

    Args:
        name: Logger name (usually __name__ of the module)

    Returns:
        Configured structlog logger
    """
    return structlog.get_logger(name)


class AnalysisLogger:
    """Logger for selection, r-value and claim events."""

    def __init__(self):
        self.logger = get_logger("analysis")

    def log_selection(self, rule: str, selected: int, excluded: Sequence[str]) -> None:
        """Log the outcome of a selection rule.

        Args:
            rule: Selection rule (e.g. "bh:0.05")
            selected: Size of the follow-up set
            excluded: Features dropped because their directed primary p-value exceeds 0.5
        """
        self.logger.info(
            "selection",
            rule=rule,
            selected=selected,
            excluded=len(excluded),
            excluded_ids=list(excluded)[:10],
        )
        if selected == 0:
            self.logger.warning("empty_selection", rule=rule)

    def log_rvalues(self, flavor: str, n_features: int, claimed: int, level: float) -> None:
        """Log a completed r-value computation.

        Args:
            flavor: "fdr" or "fwer"
            n_features: Number of r-values computed
            claimed: Number of claims at the given level
            level: Nominal level used for the claim count
        """
        self.logger.info(
            "rvalues_computed",
            flavor=flavor,
            n_features=n_features,
            claimed=claimed,
            level=level,
        )

    def log_fallback(self, feature_id: str, x: float) -> None:
        """Log a conservative fallback of the threshold-mode constant."""
        self.logger.warning("c1_tilde_conservative_fallback", feature_id=feature_id, x=x)

    def log_discreteness(self, feature_id: str, deviation: float) -> None:
        """Log a primary p-value pair that does not sum to one."""
        self.logger.warning(
            "discrete_primary_pvalues",
            feature_id=feature_id,
            deviation=deviation,
        )


class SimulationLogger:
    """Logger for Monte Carlo runs."""

    def __init__(self):
        self.logger = get_logger("simulation")

    def log_progress(self, done: int, total: int) -> None:
        """Log replication progress."""
        self.logger.debug("replications_progress", done=done, total=total)

    def log_result(self, result) -> None:
        """Log the summary of a simulation run.

        Args:
            result: SimResult of the run
        """
        self.logger.info(
            "simulation_result",
            empirical_fdr=result.empirical_fdr,
            empirical_fwer=result.empirical_fwer,
            mean_power=result.mean_power,
            replications=result.replications_run,
            guarantee=result.guarantee,
        )

    def log_empty_selection(self, fraction: float) -> None:
        """Warn that the selection rule almost never picks anything."""
        self.logger.warning("selection_mostly_empty", empty_fraction=fraction)

    def log_guarantee(self, notes: Iterable[str]) -> None:
        """Log why a scenario carries no control guarantee."""
        notes = list(notes)
        if notes:
            self.logger.warning("no_control_guarantee", reasons=notes)


# Export logger instances
analysis_logger = AnalysisLogger()
simulation_logger = SimulationLogger()
