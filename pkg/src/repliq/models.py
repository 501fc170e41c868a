"""Domain models shared by the replicability procedures."""

from enum import Enum
from itertools import product
from typing import Annotated, Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator


Probability = Annotated[float, Field(ge=0.0, le=1.0, allow_inf_nan=False)]
OpenUnit = Annotated[float, Field(gt=0.0, lt=1.0, allow_inf_nan=False)]


class Direction(str, Enum):
    """One-sided alternative favoured by the primary study."""
    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> int:
        """Sign of the effect this direction asserts."""
        return -1 if self is Direction.LEFT else 1


class ErrorFlavor(str, Enum):
    """Error rate controlled by a replicability procedure."""
    FDR = "fdr"
    FWER = "fwer"


class DependencyMode(str, Enum):
    """Assumption on the dependence among primary-study p-values."""
    INDEPENDENT = "indep"
    MSTAR = "mstar"  # arbitrary dependence, m replaced by m * H_m
    THRESHOLD = "threshold"  # arbitrary dependence, selected p-values bounded by t


class HypothesisConfig(BaseModel):
    """True state (H_1j, H_2j) of a feature in the primary and follow-up study.

    Each coordinate is -1 (left-sided alternative), 0 (null) or 1 (right-sided
    alternative), giving 9 configurations.
    """

    model_config = ConfigDict(frozen=True)

    h1: Literal[-1, 0, 1]
    h2: Literal[-1, 0, 1]

    @classmethod
    def parse(cls, text: str) -> "HypothesisConfig":
        """Parse the ``"h1,h2"`` notation used in scenario files."""
        cleaned = text.strip().strip("()[]")
        parts = [part.strip() for part in cleaned.split(",")]
        if len(parts) != 2:
            raise ValueError(f"Invalid hypothesis configuration: {text!r}")
        try:
            h1, h2 = int(parts[0]), int(parts[1])
        except ValueError as e:
            raise ValueError(f"Invalid hypothesis configuration: {text!r}") from e
        return cls(h1=h1, h2=h2)

    @classmethod
    def all(cls) -> list["HypothesisConfig"]:
        """All 9 configurations in lexicographic order."""
        return [cls(h1=h1, h2=h2) for h1, h2 in product((-1, 0, 1), repeat=2)]

    def is_replicated(self) -> bool:
        """True for (1,1) and (-1,-1): the effect is in the same direction in both studies."""
        return self.h1 == self.h2 and self.h1 != 0

    def is_null_in_followup(self) -> bool:
        """True when the follow-up null holds (second coordinate 0)."""
        return self.h2 == 0

    def is_double_null(self) -> bool:
        """True for (0,0)."""
        return self.h1 == 0 and self.h2 == 0

    def __str__(self) -> str:
        return f"{self.h1},{self.h2}"


class FeatureRecord(BaseModel):
    """Raw one-sided p-values of a feature in both studies.

    Follow-up p-values are absent for features that were not followed up.
    """

    model_config = ConfigDict(frozen=True)

    feature_id: str
    p1_left: Probability
    p1_right: Probability
    p2_left: Optional[Probability] = None
    p2_right: Optional[Probability] = None

    @model_validator(mode="after")
    def _check_followup_pairing(self) -> "FeatureRecord":
        if (self.p2_left is None) != (self.p2_right is None):
            raise ValueError("follow-up p-values must be both present or both absent")
        return self

    @property
    def is_followed_up(self) -> bool:
        """Check if follow-up p-values are present."""
        return self.p2_left is not None and self.p2_right is not None

    @property
    def primary_discreteness(self) -> float:
        """Deviation of the primary one-sided p-values from p_left + p_right = 1."""
        return abs(self.p1_left + self.p1_right - 1.0)


class DirectedPair(BaseModel):
    """One-sided p-values in the direction favoured by the primary study."""

    model_config = ConfigDict(frozen=True)

    feature_id: str
    p1_directed: Probability
    p2_directed: Probability
    direction: Direction


class ProcedureParameters(BaseModel):
    """Tuning of a replicability procedure, independent of the family size."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    l00: float = Field(default=0.8, ge=0.0, lt=1.0, allow_inf_nan=False)
    c2: OpenUnit = 0.5
    dependency: DependencyMode = DependencyMode.INDEPENDENT
    threshold: Optional[OpenUnit] = None
    error_flavor: ErrorFlavor = ErrorFlavor.FDR
    level: OpenUnit = 0.05

    @model_validator(mode="after")
    def _check_threshold(self) -> "ProcedureParameters":
        if self.dependency is DependencyMode.THRESHOLD and self.threshold is None:
            raise ValueError("threshold dependency mode requires a threshold t in (0,1)")
        if self.dependency is not DependencyMode.THRESHOLD and self.threshold is not None:
            raise ValueError("a threshold t is only meaningful in threshold dependency mode")
        return self


class AnalysisConfig(ProcedureParameters):
    """Full analysis configuration: procedure parameters plus the primary family size m."""

    m: PositiveInt

    @classmethod
    def from_parameters(cls, parameters: ProcedureParameters, m: int) -> "AnalysisConfig":
        """Attach a family size to procedure parameters."""
        return cls(m=m, **parameters.model_dump())

    def with_flavor(self, flavor: ErrorFlavor) -> "AnalysisConfig":
        """Copy of this configuration targeting another error rate."""
        return self.model_copy(update={"error_flavor": flavor})


class ValidatedDataset(BaseModel):
    """Records accepted by ``validate_input`` together with the derived directed pairs."""

    model_config = ConfigDict(frozen=True)

    records: tuple[FeatureRecord, ...]
    selected: tuple[FeatureRecord, ...]
    pairs: tuple[DirectedPair, ...]
    warnings: tuple[str, ...] = ()

    @property
    def selected_ids(self) -> list[str]:
        """Feature ids of the follow-up set, in input order."""
        return [pair.feature_id for pair in self.pairs]


class ReportRow(BaseModel):
    """One feature of an analysis report.

    ``claimed`` is the FDR claim when FDR r-values were computed, otherwise the
    FWER claim; ``claimed_fwer`` is set only when both flavors were computed.
    """

    model_config = ConfigDict(frozen=True)

    feature_id: str
    direction: Direction
    p1_directed: Probability
    p2_directed: Probability
    r_fdr: Optional[Probability] = None
    r_fwer: Optional[Probability] = None
    claimed: bool = False
    claimed_fwer: Optional[bool] = None


class RValueReport(BaseModel):
    """Rows of an analysis together with the effective parameters that produced them."""

    model_config = ConfigDict(frozen=True)

    rows: tuple[ReportRow, ...]
    metadata: dict[str, Any] = Field(default_factory=dict)

    @property
    def claimed_ids(self) -> list[str]:
        """Ids of the features with ``claimed`` set, in row order."""
        return [row.feature_id for row in self.rows if row.claimed]

    @property
    def has_both_flavors(self) -> bool:
        """Check if the report carries FDR and FWER r-values."""
        return any(row.claimed_fwer is not None for row in self.rows)
