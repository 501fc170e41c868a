"""Analysis and simulation pipelines behind the command line."""

from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from . import __version__
from .directions import validate_input
from .errors import ConfigurationError, EmptySelectionError, InputValidationError
from .logging_config import analysis_logger
from .models import (
    AnalysisConfig,
    DependencyMode,
    ErrorFlavor,
    FeatureRecord,
    OpenUnit,
    ProcedureParameters,
    ReportRow,
    RValueReport,
)
from .rules.claims import claims_at_level
from .rules.rvalues import build_context, compute_rvalues, threshold_modification_needed
from .rules.selection import SelectionKind, SelectionRule, select, two_sided_p
from .simulation import (
    SimResult,
    SimScenario,
    estimate_error_rates,
    load_scenario,
    scenario_f00,
    scenario_f_dot0,
)
from .tables import OutputFormat, read_feature_table, render_sim_results, write_report


class FlavorChoice(str, Enum):
    """Which r-values an analysis computes."""
    FDR = "fdr"
    FWER = "fwer"
    BOTH = "both"

    @property
    def flavors(self) -> list[ErrorFlavor]:
        """Error flavors to compute, FDR first."""
        if self is FlavorChoice.BOTH:
            return [ErrorFlavor.FDR, ErrorFlavor.FWER]
        return [ErrorFlavor(self.value)]


class AnalyzeRequest(BaseModel):
    """Everything an ``analyze`` run needs."""

    model_config = ConfigDict(frozen=True)

    input_path: Optional[Path] = None
    m: PositiveInt
    l00: float = Field(default=0.8, ge=0.0, lt=1.0, allow_inf_nan=False)
    c2: OpenUnit = 0.5
    dependency: DependencyMode = DependencyMode.INDEPENDENT
    threshold: Optional[OpenUnit] = None
    flavor: FlavorChoice = FlavorChoice.BOTH
    level: OpenUnit = 0.05
    selection: SelectionRule = SelectionRule(kind=SelectionKind.PROVIDED)
    output_path: Optional[Path] = None
    output_format: OutputFormat = OutputFormat.CSV

    @field_validator("selection", mode="before")
    @classmethod
    def _parse_selection(cls, value):
        if not isinstance(value, str):
            return value
        try:
            return SelectionRule.parse(value)
        except ConfigurationError as e:
            raise ValueError(str(e)) from e

    @model_validator(mode="after")
    def _check_parameters(self) -> "AnalyzeRequest":
        try:
            self.parameters(ErrorFlavor.FDR)
        except ValidationError as e:
            raise ValueError(str(e)) from e
        return self

    def parameters(self, flavor: ErrorFlavor) -> ProcedureParameters:
        """Procedure parameters of this request for one flavor."""
        return ProcedureParameters(
            l00=self.l00,
            c2=self.c2,
            dependency=self.dependency,
            threshold=self.threshold,
            error_flavor=flavor,
            level=self.level,
        )

    def config(self, flavor: ErrorFlavor) -> AnalysisConfig:
        """Analysis configuration of this request for one flavor."""
        return AnalysisConfig.from_parameters(self.parameters(flavor), self.m)


def _check_threshold_bound(records: Sequence[FeatureRecord], request: AnalyzeRequest) -> None:
    for rec in records:
        p = two_sided_p(rec)
        if p > request.threshold:
            raise InputValidationError(
                f"two-sided primary p-value {p:.6g} exceeds the threshold t={request.threshold:g}",
                feature_id=rec.feature_id,
            )


def analyze(records: Sequence[FeatureRecord], request: AnalyzeRequest) -> RValueReport:
    """Run the replicability analysis on in-memory records.

    Args:
        records: All features of the primary study (follow-up p-values where available)
        request: Analysis parameters

    Returns:
        RValueReport with one row per follow-up feature and the effective parameters

    Raises:
        EmptySelectionError: If the follow-up set is empty
        InputValidationError: On invalid input or a selected feature above t in threshold mode
        NumericalError: If a root search fails
    """
    config = request.config(request.flavor.flavors[0])

    selection = select(records, request.selection, request.m)
    if selection.empty:
        raise EmptySelectionError(
            f"selection rule {request.selection} selected no features for follow-up"
        )
    selected_ids = list(selection.selected)
    excluded = list(selection.excluded)

    dataset = validate_input(records, config, selected_ids=selected_ids)
    if request.dependency is DependencyMode.THRESHOLD:
        _check_threshold_bound(dataset.selected, request)

    pairs = dataset.pairs
    ctx = build_context(config, len(pairs))

    rvalues = {}
    claimed = {}
    fallback_ids: list[str] = []
    for flavor in request.flavor.flavors:
        results = compute_rvalues(pairs, ctx, flavor)
        claims = claims_at_level(results, pairs, request.level, flavor)
        analysis_logger.log_rvalues(flavor.value, len(results), len(claims), request.level)
        rvalues[flavor] = {result.feature_id: result.r_value for result in results}
        claimed[flavor] = claims.feature_ids
        fallback_ids.extend(r.feature_id for r in results if r.conservative_fallback)

    primary_flavor = request.flavor.flavors[0]
    both = request.flavor is FlavorChoice.BOTH
    rows = tuple(
        ReportRow(
            feature_id=pair.feature_id,
            direction=pair.direction,
            p1_directed=pair.p1_directed,
            p2_directed=pair.p2_directed,
            r_fdr=rvalues.get(ErrorFlavor.FDR, {}).get(pair.feature_id),
            r_fwer=rvalues.get(ErrorFlavor.FWER, {}).get(pair.feature_id),
            claimed=pair.feature_id in claimed[primary_flavor],
            claimed_fwer=(pair.feature_id in claimed[ErrorFlavor.FWER]) if both else None,
        )
        for pair in pairs
    )

    metadata = {
        "repliq_version": __version__,
        "m": request.m,
        "l00": request.l00,
        "c2": request.c2,
        "dependency": request.dependency.value,
        "threshold": request.threshold,
        "flavor": request.flavor.value,
        "level": request.level,
        "selection": str(request.selection),
        "R1": len(pairs),
        "m_effective": ctx.m_effective,
        "claims_fdr": len(claimed[ErrorFlavor.FDR]) if ErrorFlavor.FDR in claimed else None,
        "claims_fwer": len(claimed[ErrorFlavor.FWER]) if ErrorFlavor.FWER in claimed else None,
        "excluded_p_above_half": excluded,
        "conservative_fallback": sorted(set(fallback_ids)),
        "warnings": list(dataset.warnings),
    }
    if request.dependency is DependencyMode.THRESHOLD:
        metadata["threshold_scale"] = "two-sided"
        metadata["threshold_modification_needed"] = threshold_modification_needed(
            request.threshold, request.level, request.m, request.l00, request.c2
        )
    return RValueReport(rows=rows, metadata=metadata)


def run_analyze(request: AnalyzeRequest) -> tuple[RValueReport, str]:
    """Read the request's input table, analyze it and write the artifact.

    Returns:
        The report and its rendered text (written to ``output_path`` when set)
    """
    if request.input_path is None:
        raise ConfigurationError("no input table given")
    records = read_feature_table(request.input_path)
    report = analyze(records, request)
    text = write_report(report, request.output_path, request.output_format)
    return report, text


def run_simulate(
    scenario_path: Path,
    seed: Optional[int] = None,
    replications: Optional[int] = None,
    output_path: Optional[Path] = None,
    output_format: OutputFormat = OutputFormat.CSV,
) -> tuple[SimScenario, SimResult, str]:
    """Load a scenario, estimate its error rates and write the result table.

    Args:
        scenario_path: JSON scenario file
        seed: Replaces the scenario's seed when given
        replications: Replaces the scenario's replication count when given
        output_path: Destination of the table (returned only when None)
        output_format: csv or json

    Returns:
        The effective scenario, its result and the rendered table

    Raises:
        ConfigurationError: If the scenario is invalid
    """
    scenario = load_scenario(scenario_path)
    if seed is not None:
        scenario = SimScenario.model_validate({**scenario.model_dump(), "seed": seed})
    result = estimate_error_rates(scenario, replications=replications)

    analysis = scenario.analysis
    row: dict[str, Any] = {
        "m": scenario.family_size,
        "f00": scenario_f00(scenario.counts),
        "f_dot0": scenario_f_dot0(scenario.counts),
        "effect_size": scenario.effect_size,
        "primary_dependence": str(scenario.primary_dependence),
        "followup_dependence": str(scenario.followup_dependence),
        "selection_rule": str(scenario.selection_rule),
        "flavor": analysis.error_flavor.value,
        "dependency": analysis.dependency.value,
        "level": analysis.level,
        "l00": analysis.l00,
        "c2": analysis.c2,
        "seed": scenario.seed,
        **result.model_dump(),
    }
    metadata = {"repliq_version": __version__, "scenario": scenario.model_dump(mode="json")}
    text = render_sim_results([row], metadata, output_format)
    if output_path is not None:
        output_path.write_text(text, encoding="utf-8")
    return scenario, result, text
