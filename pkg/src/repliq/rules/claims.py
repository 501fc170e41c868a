"""Directional replicability claims and error accounting."""

from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from ..errors import ConfigurationError, DomainError, UnknownTruthError
from ..models import DependencyMode, DirectedPair, Direction, ErrorFlavor, HypothesisConfig
from .rvalues import (
    EvaluationContext,
    RValueResult,
    c1,
    check_single_context,
    fwer_values,
    m_star,
)


class ClaimSet(BaseModel):
    """Features declared replicated at a level, each with its claimed direction."""

    model_config = ConfigDict(frozen=True)

    level: float
    flavor: ErrorFlavor
    claims: tuple[tuple[str, Direction], ...] = ()

    @property
    def feature_ids(self) -> frozenset[str]:
        """Ids of the claimed features."""
        return frozenset(feature_id for feature_id, _ in self.claims)

    def direction_of(self, feature_id: str) -> Optional[Direction]:
        """Claimed direction of a feature, or None if it is not claimed."""
        for claimed_id, direction in self.claims:
            if claimed_id == feature_id:
                return direction
        return None

    def is_subset_of(self, other: "ClaimSet") -> bool:
        """Check that every claim here also appears, with the same direction, in ``other``."""
        return set(self.claims) <= set(other.claims)

    def __len__(self) -> int:
        return len(self.claims)


class ErrorTally(BaseModel):
    """Counts of claims (R), true directional claims (S) and false ones (V = R - S).

    V splits into directional errors (a replicated feature claimed in the wrong
    direction) and false replications (a feature null or sign-discordant in at
    least one study).
    """

    model_config = ConfigDict(frozen=True)

    R: int
    S: int
    V: int
    directional_errors: int = 0
    false_replications: int = 0

    @model_validator(mode="after")
    def _check_counts(self) -> "ErrorTally":
        if not 0 <= self.S <= self.R:
            raise ValueError(f"need 0 <= S <= R, got S={self.S}, R={self.R}")
        if self.V != self.R - self.S:
            raise ValueError(f"V must equal R - S, got V={self.V}")
        if self.directional_errors + self.false_replications != self.V:
            raise ValueError("directional errors and false replications must sum to V")
        return self

    @property
    def false_discovery_proportion(self) -> float:
        """(R - S) / max(R, 1)."""
        return self.V / max(self.R, 1)

    @property
    def any_false_claim(self) -> bool:
        """Indicator of R - S > 0."""
        return self.V > 0


class StepUpResult(NamedTuple):
    """Number of claims and claimed ids of the equivalent step-up procedure."""
    R2: int
    claims: frozenset[str]


def claims_at_level(
    rvalues: Sequence[RValueResult],
    pairs: Sequence[DirectedPair],
    level: float,
    flavor: Optional[ErrorFlavor] = None,
) -> ClaimSet:
    """Declare replicated every feature with r-value at most ``level``.

    Each claim carries the direction favoured by the primary study.

    Args:
        rvalues: r-values computed under one configuration
        pairs: Directed pairs the r-values were computed from
        level: Nominal FDR or FWER level
        flavor: Expected flavor of the r-values (checked when given)

    Returns:
        ClaimSet of the claimed features in r-value input order

    Raises:
        ConfigurationError: If the r-values mix configurations or flavors, or lack a pair
    """
    if not 0.0 <= level <= 1.0:
        raise DomainError(f"level must lie in [0,1], got {level}")
    _, computed_flavor = check_single_context(rvalues)
    if flavor is not None and ErrorFlavor(flavor) is not computed_flavor:
        raise ConfigurationError(
            f"expected {ErrorFlavor(flavor).value} r-values, got {computed_flavor.value}"
        )

    directions = {pair.feature_id: pair.direction for pair in pairs}
    claims = []
    for result in rvalues:
        if result.feature_id not in directions:
            raise ConfigurationError(f"no directed pair for feature '{result.feature_id}'")
        if result.r_value <= level:
            claims.append((result.feature_id, directions[result.feature_id]))
    return ClaimSet(level=level, flavor=computed_flavor, claims=tuple(claims))


def stepup_oracle(
    pairs: Sequence[DirectedPair],
    q: float,
    m: int,
    R1: int,
    l00: float,
    c2: float,
    dependency: DependencyMode = DependencyMode.INDEPENDENT,
) -> StepUpResult:
    """Step-up procedure equivalent to thresholding FDR r-values at q.

    R2 is the largest r such that exactly r features satisfy
    p'_1j <= r c1(q) q / m and p'_2j <= r c2 q / R1; the claims are those features
    at r = R2. Under the m* mode m is replaced by m*.

    Raises:
        ConfigurationError: Under the threshold mode, which has no step-up form
    """
    if dependency is DependencyMode.THRESHOLD:
        raise ConfigurationError("the step-up oracle is not defined for the threshold mode")
    m_used = m_star(m) if dependency is DependencyMode.MSTAR else float(m)
    primary_constant = c1(q, l00, c2)

    ids = np.array([pair.feature_id for pair in pairs], dtype=object)
    p1 = np.array([pair.p1_directed for pair in pairs], dtype=float)
    p2 = np.array([pair.p2_directed for pair in pairs], dtype=float)

    for r in range(R1, 0, -1):
        inside = (p1 <= r * primary_constant * q / m_used) & (p2 <= r * c2 * q / R1)
        if int(inside.sum()) == r:
            return StepUpResult(R2=r, claims=frozenset(ids[inside].tolist()))
    return StepUpResult(R2=0, claims=frozenset())


def bonferroni_oracle(
    pairs: Sequence[DirectedPair],
    alpha: float,
    ctx: EvaluationContext,
) -> frozenset[str]:
    """Features with f^Bonf_j(alpha) <= alpha, the FWER-equivalent claim rule."""
    values = fwer_values(alpha, pairs, ctx)
    return frozenset(pair.feature_id for pair, value in zip(pairs, values) if value <= alpha)


def directional_error_tally(
    claimset: ClaimSet,
    truth: Mapping[str, HypothesisConfig],
) -> ErrorTally:
    """Count true and false directional replicability claims against known truth.

    A claim is true when the feature is (1,1) and claimed Right, or (-1,-1) and
    claimed Left.

    Raises:
        UnknownTruthError: If a claimed feature has no truth entry
    """
    true_claims = directional_errors = false_replications = 0
    for feature_id, direction in claimset.claims:
        try:
            config = truth[feature_id]
        except KeyError:
            raise UnknownTruthError(f"no true configuration for claimed feature '{feature_id}'")
        if not config.is_replicated():
            false_replications += 1
        elif direction.sign == config.h1:
            true_claims += 1
        else:
            directional_errors += 1

    total = len(claimset.claims)
    return ErrorTally(
        R=total,
        S=true_claims,
        V=total - true_claims,
        directional_errors=directional_errors,
        false_replications=false_replications,
    )
