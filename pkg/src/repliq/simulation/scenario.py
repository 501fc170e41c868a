"""Simulation scenarios: true configuration counts, effects, dependence and analysis settings."""

import json
from pathlib import Path
from typing import Literal, Mapping, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)

from ..config import settings
from ..errors import ConfigurationError
from ..models import AnalysisConfig, DependencyMode, ErrorFlavor, HypothesisConfig, ProcedureParameters
from ..rules.selection import SelectionKind, SelectionRule


class Dependence(BaseModel):
    """Within-study dependence of the test statistics.

    ``equicorrelated`` draws every statistic from one shared Gaussian factor
    with weight sqrt(rho) plus independent noise, giving pairwise correlation rho.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["independent", "equicorrelated"] = "independent"
    rho: float = Field(default=0.0, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_rho(self) -> "Dependence":
        if self.kind == "independent" and self.rho != 0.0:
            raise ValueError("independent statistics take no correlation")
        return self

    @classmethod
    def parse(cls, text: str) -> "Dependence":
        """Parse ``independent`` or ``equicorrelated:<rho>``."""
        kind, _, value = text.strip().lower().partition(":")
        if kind == "independent" and not value:
            return cls()
        if kind == "equicorrelated" and value:
            try:
                return cls(kind="equicorrelated", rho=float(value))
            except ValueError as e:
                raise ValueError(f"Invalid dependence {text!r}: {e}") from e
        raise ValueError(f"Invalid dependence {text!r}")

    @property
    def is_independent(self) -> bool:
        """True when the statistics carry no shared factor."""
        return self.kind == "independent" or self.rho == 0.0

    def __str__(self) -> str:
        return self.kind if self.kind == "independent" else f"equicorrelated:{self.rho:g}"


class SimScenario(BaseModel):
    """A Monte Carlo scenario.

    Non-null coordinates have mean shift effect_size times their sign. Follow-up
    statistics are always drawn independently of the primary ones.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    counts: dict[HypothesisConfig, NonNegativeInt]
    effect_size: PositiveFloat
    primary_dependence: Dependence = Dependence()
    followup_dependence: Dependence = Dependence()
    selection_rule: SelectionRule
    analysis: ProcedureParameters = ProcedureParameters()
    replications: PositiveInt = Field(default_factory=lambda: settings.replications)
    seed: int = Field(default=0, ge=0, lt=2**64)
    m: Optional[PositiveInt] = None  # declared family size, checked against the counts

    @field_validator("counts", mode="before")
    @classmethod
    def _parse_counts(cls, value):
        if not isinstance(value, Mapping):
            return value
        counts = {config: 0 for config in HypothesisConfig.all()}
        for key, count in value.items():
            config = key if isinstance(key, HypothesisConfig) else HypothesisConfig.parse(str(key))
            counts[config] = count
        return counts

    @field_validator("primary_dependence", "followup_dependence", mode="before")
    @classmethod
    def _parse_dependence(cls, value):
        return Dependence.parse(value) if isinstance(value, str) else value

    @field_validator("selection_rule", mode="before")
    @classmethod
    def _parse_rule(cls, value):
        if not isinstance(value, str):
            return value
        try:
            return SelectionRule.parse(value)
        except ConfigurationError as e:
            raise ValueError(str(e)) from e

    @model_validator(mode="after")
    def _check_scenario(self) -> "SimScenario":
        total = sum(self.counts.values())
        if total < 1:
            raise ValueError("configuration counts must sum to at least one feature")
        if self.m is not None and self.m != total:
            raise ValueError(f"configuration counts sum to {total}, not m={self.m}")
        if self.selection_rule.kind is SelectionKind.PROVIDED:
            raise ValueError("simulated data has no provided follow-up set; choose a selection rule")
        return self

    @field_serializer("counts")
    def _dump_counts(self, counts: dict[HypothesisConfig, int]) -> dict[str, int]:
        return {str(config): count for config, count in counts.items()}

    @field_serializer("primary_dependence", "followup_dependence", "selection_rule")
    def _dump_as_text(self, value) -> str:
        return str(value)

    @property
    def family_size(self) -> int:
        """m, the number of simulated features."""
        return sum(self.counts.values())

    @property
    def analysis_config(self) -> AnalysisConfig:
        """Analysis configuration with m set to the family size."""
        return AnalysisConfig.from_parameters(self.analysis, self.family_size)

    def guarantee_notes(self) -> list[str]:
        """Reasons why the procedure carries no control guarantee here (empty when it does)."""
        notes = []
        f00 = scenario_f00(self.counts)
        if self.analysis.l00 > f00:
            notes.append(f"l00={self.analysis.l00:g} exceeds f00={f00:g}")
        if self.analysis.error_flavor is ErrorFlavor.FDR:
            dependent = not self.primary_dependence.is_independent
            if dependent and self.analysis.dependency is DependencyMode.INDEPENDENT:
                notes.append("dependent primary statistics analysed without the m* or threshold modification")
            if self.analysis.dependency is DependencyMode.THRESHOLD and not _bounded_by(
                self.selection_rule, self.analysis.threshold, self.family_size
            ):
                notes.append(
                    f"selection rule {self.selection_rule} does not keep selected p-values "
                    f"below t={self.analysis.threshold:g}"
                )
        return notes


def _bounded_by(rule: SelectionRule, t: float, m: int) -> bool:
    """True when every feature the rule selects has two-sided primary p-value at most t."""
    if rule.kind is SelectionKind.THRESHOLD:
        return rule.parameter <= t
    if rule.kind is SelectionKind.BONFERRONI:
        return rule.parameter / m <= t
    if rule.kind is SelectionKind.BH:
        return rule.parameter <= t
    return False


def scenario_f00(counts: Mapping[HypothesisConfig, int]) -> float:
    """f00, the fraction of features null in both studies."""
    total = sum(counts.values())
    return sum(n for config, n in counts.items() if config.is_double_null()) / total


def scenario_f_dot0(counts: Mapping[HypothesisConfig, int]) -> float:
    """f.0, the fraction of features null in the follow-up study."""
    total = sum(counts.values())
    return sum(n for config, n in counts.items() if config.is_null_in_followup()) / total


def load_scenario(path: Union[str, Path]) -> SimScenario:
    """Read a JSON scenario file.

    Raises:
        ConfigurationError: If the file is unreadable or describes an invalid scenario
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read scenario {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Scenario {path} must be a JSON object")

    try:
        return SimScenario.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid scenario {path}: {e}") from e
