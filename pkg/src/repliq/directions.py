"""Favoured-direction derivation and input validation."""

import math
from collections import Counter
from typing import Collection, Optional, Sequence

from .config import settings
from .errors import EmptySelectionError, InputValidationError, NotFollowedUpError
from .logging_config import analysis_logger
from .models import AnalysisConfig, DirectedPair, Direction, FeatureRecord, ValidatedDataset


_PVALUE_FIELDS = ("p1_left", "p1_right", "p2_left", "p2_right")


def _check_probabilities(rec: FeatureRecord) -> None:
    """Re-check p-value ranges (records built with model_construct skip validation)."""
    for name in _PVALUE_FIELDS:
        value = getattr(rec, name)
        if value is None:
            continue
        if not isinstance(value, (int, float)) or math.isnan(value) or not 0.0 <= value <= 1.0:
            raise InputValidationError(
                f"{name}={value!r} is not a probability in [0,1]",
                feature_id=rec.feature_id,
            )
    if (rec.p2_left is None) != (rec.p2_right is None):
        raise InputValidationError(
            "follow-up p-values must be both present or both absent",
            feature_id=rec.feature_id,
        )


def derive_directed_pair(rec: FeatureRecord) -> DirectedPair:
    """Build the pair (p'_1j, p'_2j) in the direction favoured by the primary study.

    The direction is Left when p1_left <= p1_right (ties go Left) and Right
    otherwise; the follow-up p-value is taken in the same direction.

    Args:
        rec: Feature with both primary and follow-up p-values

    Returns:
        DirectedPair for the feature

    Raises:
        NotFollowedUpError: If the follow-up p-values are missing
        InputValidationError: If a p-value is NaN or outside [0,1]
    """
    _check_probabilities(rec)
    if not rec.is_followed_up:
        raise NotFollowedUpError("feature was not followed up", feature_id=rec.feature_id)

    if rec.p1_right < rec.p1_left:
        return DirectedPair(
            feature_id=rec.feature_id,
            p1_directed=rec.p1_right,
            p2_directed=rec.p2_right,
            direction=Direction.RIGHT,
        )
    return DirectedPair(
        feature_id=rec.feature_id,
        p1_directed=rec.p1_left,
        p2_directed=rec.p2_left,
        direction=Direction.LEFT,
    )


def validate_input(
    records: Sequence[FeatureRecord],
    config: AnalysisConfig,
    selected_ids: Optional[Collection[str]] = None,
    discreteness_tolerance: Optional[float] = None,
) -> ValidatedDataset:
    """Validate a dataset and derive the directed pairs of its follow-up set.

    Discrete primary statistics are allowed: a pair of one-sided p-values that
    does not sum to one only produces a warning.

    Args:
        records: All features read from the input
        config: Analysis configuration (supplies m)
        selected_ids: The follow-up set; defaults to every record with follow-up p-values
        discreteness_tolerance: Allowed |p_left + p_right - 1| before warning

    Returns:
        ValidatedDataset with records, selected records, pairs and warnings

    Raises:
        InputValidationError: On invalid p-values, duplicate ids or more features than m
        EmptySelectionError: If the follow-up set is empty
        NotFollowedUpError: If a selected feature has no follow-up p-values
    """
    tolerance = (
        settings.discreteness_tolerance if discreteness_tolerance is None
        else discreteness_tolerance
    )

    counts = Counter(rec.feature_id for rec in records)
    duplicates = sorted(fid for fid, n in counts.items() if n > 1)
    if duplicates:
        raise InputValidationError(f"duplicate feature_id values: {', '.join(duplicates)}")
    if len(records) > config.m:
        raise InputValidationError(
            f"{len(records)} features supplied but only m={config.m} were examined"
        )

    warnings: list[str] = []
    for rec in records:
        _check_probabilities(rec)
        deviation = rec.primary_discreteness
        if deviation > tolerance:
            warnings.append(
                f"feature '{rec.feature_id}': p1_left + p1_right deviates from 1 by "
                f"{deviation:.3g} (discrete statistic assumed)"
            )
            analysis_logger.log_discreteness(rec.feature_id, deviation)

    if selected_ids is None:
        selected = [rec for rec in records if rec.is_followed_up]
    else:
        wanted = set(selected_ids)
        unknown = wanted - set(counts)
        if unknown:
            raise InputValidationError(
                f"selected features not present in the input: {', '.join(sorted(unknown))}"
            )
        selected = [rec for rec in records if rec.feature_id in wanted]

    if not selected:
        raise EmptySelectionError("no features were selected for follow-up")
    if len(selected) > config.m:
        raise InputValidationError(
            f"{len(selected)} features selected but only m={config.m} were examined"
        )

    pairs = [derive_directed_pair(rec) for rec in selected]

    return ValidatedDataset(
        records=tuple(records),
        selected=tuple(selected),
        pairs=tuple(pairs),
        warnings=tuple(warnings),
    )
