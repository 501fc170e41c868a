"""Stable selection of the follow-up set from primary-study p-values."""

from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from statsmodels.stats.multitest import multipletests

from ..errors import ConfigurationError
from ..logging_config import analysis_logger
from ..models import FeatureRecord


class SelectionKind(str, Enum):
    """Built-in selection rules."""
    PROVIDED = "provided"  # follow-up set given by the data
    THRESHOLD = "threshold"
    BH = "bh"
    BONFERRONI = "bonf"
    TOPK = "topk"


class SelectionRule(BaseModel):
    """A selection rule and its parameter.

    Cut-offs, BH and Bonferroni levels lie in (0,1); TopK takes k >= 1.
    """

    model_config = ConfigDict(frozen=True)

    kind: SelectionKind
    parameter: Optional[float] = None

    @model_validator(mode="after")
    def _check_parameter(self) -> "SelectionRule":
        if self.kind is SelectionKind.PROVIDED:
            if self.parameter is not None:
                raise ValueError("the provided rule takes no parameter")
        elif self.kind is SelectionKind.TOPK:
            if self.parameter is None or self.parameter < 1 or self.parameter != int(self.parameter):
                raise ValueError(f"topk needs an integer k >= 1, got {self.parameter}")
        elif self.parameter is None or not 0.0 < self.parameter < 1.0:
            raise ValueError(f"{self.kind.value} needs a parameter in (0,1), got {self.parameter}")
        return self

    @classmethod
    def parse(cls, text: str) -> "SelectionRule":
        """Parse ``provided``, ``threshold:<c>``, ``bh:<q>``, ``bonf:<a>`` or ``topk:<k>``.

        Raises:
            ConfigurationError: If the rule is malformed
        """
        name, _, value = text.strip().lower().partition(":")
        try:
            kind = SelectionKind(name)
        except ValueError as e:
            raise ConfigurationError(f"Unknown selection rule: {text!r}") from e
        try:
            parameter = float(value) if value else None
            return cls(kind=kind, parameter=parameter)
        except ValueError as e:
            raise ConfigurationError(f"Invalid selection rule {text!r}: {e}") from e

    @property
    def k(self) -> int:
        """k of a TopK rule."""
        return int(self.parameter)

    def __str__(self) -> str:
        if self.kind is SelectionKind.PROVIDED:
            return self.kind.value
        if self.kind is SelectionKind.TOPK:
            return f"topk:{self.k}"
        return f"{self.kind.value}:{self.parameter:g}"


class SelectionResult(BaseModel):
    """Follow-up set chosen by a rule, in input order."""

    model_config = ConfigDict(frozen=True)

    rule: SelectionRule
    selected: tuple[str, ...]
    excluded: tuple[str, ...] = ()  # chosen by the rule but with directed primary p-value > 0.5

    @property
    def empty(self) -> bool:
        """Check if nothing was selected."""
        return not self.selected


class StabilityViolation(BaseModel):
    """A perturbation of one selected feature that changed the follow-up set."""

    feature_id: str
    p1_left: float
    added: tuple[str, ...]
    removed: tuple[str, ...]


class StabilityReport(BaseModel):
    """Outcome of an empirical stability probe."""

    rule: SelectionRule
    selected_count: int
    perturbations_tested: int
    violations: list[StabilityViolation]

    @property
    def stable(self) -> bool:
        """True when no perturbation changed the follow-up set."""
        return not self.violations


def two_sided_p(rec: FeatureRecord) -> float:
    """Two-sided primary p-value by the doubling rule, min(1, 2 min(p_left, p_right))."""
    return min(1.0, 2.0 * min(rec.p1_left, rec.p1_right))


def _rule_mask(records: Sequence[FeatureRecord], rule: SelectionRule, m: int) -> np.ndarray:
    if rule.kind is SelectionKind.PROVIDED:
        return np.array([rec.is_followed_up for rec in records], dtype=bool)

    p = np.array([two_sided_p(rec) for rec in records], dtype=float)
    if rule.kind is SelectionKind.THRESHOLD:
        return p < rule.parameter
    if rule.kind is SelectionKind.BONFERRONI:
        return p <= rule.parameter / m
    if rule.kind is SelectionKind.BH:
        # unlisted features of the primary family enter as p = 1
        padded = np.concatenate([p, np.ones(max(0, m - len(p)))])
        reject = multipletests(padded, alpha=rule.parameter, method="fdr_bh")[0]
        return reject[:len(p)]

    # TopK: smallest two-sided p-values, ties broken by feature id
    if rule.k > len(records):
        raise ConfigurationError(f"topk:{rule.k} exceeds the {len(records)} available features")
    ids = np.array([rec.feature_id for rec in records], dtype=object)
    order = sorted(range(len(records)), key=lambda i: (p[i], ids[i]))
    mask = np.zeros(len(records), dtype=bool)
    mask[order[:rule.k]] = True
    return mask


def select(records: Sequence[FeatureRecord], rule: SelectionRule, m: int) -> SelectionResult:
    """Apply a selection rule to the primary-study p-values.

    Features whose directed primary p-value exceeds 0.5 are excluded from the
    follow-up set and reported separately.

    Args:
        records: Validated feature records
        rule: Selection rule
        m: Number of features examined in the primary study

    Returns:
        SelectionResult with selected and excluded feature ids

    Raises:
        ConfigurationError: If a TopK rule asks for more features than available
    """
    selected, excluded = apply_rule(records, rule, m)
    analysis_logger.log_selection(str(rule), len(selected), excluded)
    return SelectionResult(rule=rule, selected=tuple(selected), excluded=tuple(excluded))


def _perturbed_p_left(rng: np.random.Generator) -> float:
    # half uniform, half log-uniform to probe small p-values near selection boundaries
    if rng.random() < 0.5:
        return float(rng.uniform(0.0, 1.0))
    return float(10.0 ** rng.uniform(-10.0, 0.0))


def stability_check(
    records: Sequence[FeatureRecord],
    rule: SelectionRule,
    m: int,
    trials: int = 20,
    seed: int = 0,
) -> StabilityReport:
    """Probe the stability of a selection rule.

    For every selected feature, its primary left-sided p-value is redrawn
    ``trials`` times (with p_right = 1 - p_left); draws that keep the feature
    selected must leave the follow-up set unchanged.

    Args:
        records: Validated feature records
        rule: Selection rule under test
        m: Number of features examined in the primary study
        trials: Perturbations per selected feature
        seed: Seed of the perturbation stream

    Returns:
        StabilityReport listing any violations
    """
    base = select(records, rule, m)
    base_set = set(base.selected)
    rng = np.random.default_rng(seed)
    positions = {rec.feature_id: i for i, rec in enumerate(records)}

    tested = 0
    violations: list[StabilityViolation] = []
    for feature_id in base.selected:
        position = positions[feature_id]
        for _ in range(trials):
            p_left = _perturbed_p_left(rng)
            changed = records[position].model_copy(
                update={"p1_left": p_left, "p1_right": 1.0 - p_left}
            )
            perturbed = list(records)
            perturbed[position] = changed
            outcome = set(apply_rule(perturbed, rule, m)[0])
            if feature_id not in outcome:
                continue
            tested += 1
            if outcome != base_set:
                violations.append(
                    StabilityViolation(
                        feature_id=feature_id,
                        p1_left=p_left,
                        added=tuple(sorted(outcome - base_set)),
                        removed=tuple(sorted(base_set - outcome)),
                    )
                )

    return StabilityReport(
        rule=rule,
        selected_count=len(base.selected),
        perturbations_tested=tested,
        violations=violations,
    )


def _split(records: Sequence[FeatureRecord], mask: np.ndarray) -> tuple[list[str], list[str]]:
    """Split rule-chosen ids into (selected, excluded by the p'_1j <= 0.5 condition)."""
    selected, excluded = [], []
    for rec, chosen in zip(records, mask):
        if not chosen:
            continue
        if min(rec.p1_left, rec.p1_right) > 0.5:
            excluded.append(rec.feature_id)
        else:
            selected.append(rec.feature_id)
    return selected, excluded


def apply_rule(
    records: Sequence[FeatureRecord], rule: SelectionRule, m: int
) -> tuple[list[str], list[str]]:
    """Selected and excluded ids without logging (used in Monte Carlo loops)."""
    return _split(records, _rule_mask(records, rule, m))
