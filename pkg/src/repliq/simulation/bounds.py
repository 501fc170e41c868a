"""Analytic upper bounds on the directional error rates of the replicability procedures."""

from typing import Mapping

from ..errors import DomainError
from ..models import HypothesisConfig
from ..rules.rvalues import c1
from .scenario import scenario_f_dot0


def _check_counts(counts: Mapping[HypothesisConfig, int], m: int) -> None:
    total = sum(counts.values())
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if total != m:
        raise DomainError(f"configuration counts sum to {total}, not m={m}")
    if any(n < 0 for n in counts.values()):
        raise DomainError("configuration counts must be non-negative")


def theoretical_fdr_bound(
    counts: Mapping[HypothesisConfig, int],
    q: float,
    l00: float,
    c2: float,
    m: int,
    selected_nonreplicated_fraction: float = 1.0,
) -> float:
    """Upper bound on the directional FDR of the level-q procedure.

    Evaluates c1(q) c2 q^2 f.0 + c1(q) q (1 - f.0) + c2 q E, where f.0 is the
    fraction of features null in the follow-up study and E is the expected
    fraction of the follow-up set that is not replicated. E defaults to its
    bound 1, which gives the relaxed form: equal to q when f.0 = l00 and at
    most q whenever f.0 >= l00.

    Args:
        counts: Number of features per true configuration
        q: Nominal level in (0,1]
        l00: Lower bound on f00 used by the procedure
        c2: Follow-up share of the level
        m: Number of features (must equal the sum of counts)
        selected_nonreplicated_fraction: Value of E in [0,1]

    Raises:
        DomainError: If the counts do not sum to m or a parameter is out of range
    """
    _check_counts(counts, m)
    if not 0.0 <= selected_nonreplicated_fraction <= 1.0:
        raise DomainError(
            f"selected non-replicated fraction must lie in [0,1], got {selected_nonreplicated_fraction}"
        )
    primary_constant = c1(q, l00, c2)
    f_dot0 = scenario_f_dot0(counts)
    return (
        primary_constant * c2 * q * q * f_dot0
        + primary_constant * q * (1.0 - f_dot0)
        + c2 * q * selected_nonreplicated_fraction
    )


def theoretical_fwer_bound(
    counts: Mapping[HypothesisConfig, int],
    alpha: float,
    l00: float,
    c2: float,
    m: int,
) -> float:
    """Upper bound on the directional FWER of the Bonferroni procedure at level alpha."""
    return theoretical_fdr_bound(counts, alpha, l00, c2, m)
