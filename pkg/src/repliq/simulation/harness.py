"""Monte Carlo estimation of directional FDR and FWER.

Every replication draws Gaussian statistics for both studies, selects the
follow-up set from the primary p-values, computes r-values and tallies the
claims against the known configurations. Replication i uses its own random
stream spawned from (seed, i), so results do not depend on execution order.
"""

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import norm

from ..config import settings
from ..directions import validate_input
from ..errors import ConfigurationError
from ..logging_config import simulation_logger
from ..models import AnalysisConfig, FeatureRecord, HypothesisConfig, Probability
from ..rules.claims import claims_at_level, directional_error_tally
from ..rules.rvalues import build_context, compute_rvalues
from ..rules.selection import apply_rule, stability_check
from .bounds import theoretical_fdr_bound
from .scenario import Dependence, SimScenario


PROGRESS_EVERY = 100
EMPTY_WARNING_FRACTION = 0.99


class SimResult(BaseModel):
    """Monte Carlo estimates for one scenario.

    Standard errors are the sample standard deviation over replications divided
    by sqrt(replications); with a single replication they are reported as 0 and
    ``se_defined`` is False.
    """

    model_config = ConfigDict(frozen=True)

    empirical_fdr: Probability
    empirical_fwer: Probability
    mc_se_fdr: float = Field(ge=0.0)
    mc_se_fwer: float = Field(ge=0.0)
    mean_power: Probability
    replications_run: int = Field(ge=1)
    mean_claims: float = Field(default=0.0, ge=0.0)
    mean_selected: float = Field(default=0.0, ge=0.0)
    empty_selection_fraction: Probability = 0.0
    theoretical_bound: float = 0.0
    refined_bound: float = 0.0
    guarantee: bool = True
    guarantee_notes: list[str] = Field(default_factory=list)
    se_defined: bool = True


class _Outcome(NamedTuple):
    """Per-replication quantities."""
    fdp: float
    any_error: float
    power: float
    claims: int
    selected: int
    nonreplicated_share: float


def one_sided_pvalues(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left- and right-sided p-values Phi(z) and 1 - Phi(z) of standard normal statistics."""
    z = np.asarray(z, dtype=float)
    return norm.cdf(z), norm.sf(z)


def feature_truth(scenario: SimScenario) -> dict[str, HypothesisConfig]:
    """Feature ids of a scenario mapped to their true configuration, in generation order."""
    truth: dict[str, HypothesisConfig] = {}
    for config, count in scenario.counts.items():
        for _ in range(count):
            truth[f"feat{len(truth):05d}"] = config
    return truth


def _replication_rng(seed: int, replication_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication_index,)))


def _noise(rng: np.random.Generator, size: int, dependence: Dependence) -> np.ndarray:
    if dependence.is_independent:
        return rng.standard_normal(size)
    shared = rng.standard_normal()
    return math.sqrt(dependence.rho) * shared + math.sqrt(1.0 - dependence.rho) * rng.standard_normal(size)


def generate_replication(scenario: SimScenario, replication_index: int) -> list[FeatureRecord]:
    """Draw one data set of the scenario.

    Statistics are z1 ~ N(mu h1, 1) and z2 ~ N(mu h2, 1), equicorrelated within
    a study when configured and independent across studies. Every feature gets
    follow-up p-values; the selection rule decides which ones are used.

    Args:
        scenario: Scenario to draw from
        replication_index: Index of the replication (selects the random stream)

    Returns:
        One FeatureRecord per feature, ids ``feat00000``, ``feat00001``, ...

    Raises:
        ConfigurationError: If the counts do not sum to the declared m
    """
    total = sum(scenario.counts.values())
    if scenario.m is not None and scenario.m != total:
        raise ConfigurationError(f"configuration counts sum to {total}, not m={scenario.m}")
    if replication_index < 0:
        raise ConfigurationError(f"replication index must be non-negative, got {replication_index}")

    truth = feature_truth(scenario)
    h1 = np.array([config.h1 for config in truth.values()], dtype=float)
    h2 = np.array([config.h2 for config in truth.values()], dtype=float)

    rng = _replication_rng(scenario.seed, replication_index)
    z1 = scenario.effect_size * h1 + _noise(rng, total, scenario.primary_dependence)
    z2 = scenario.effect_size * h2 + _noise(rng, total, scenario.followup_dependence)
    p1_left, p1_right = one_sided_pvalues(z1)
    p2_left, p2_right = one_sided_pvalues(z2)

    return [
        FeatureRecord(
            feature_id=feature_id,
            p1_left=float(p1_left[j]),
            p1_right=float(p1_right[j]),
            p2_left=float(p2_left[j]),
            p2_right=float(p2_right[j]),
        )
        for j, feature_id in enumerate(truth)
    ]


def _run_replication(
    scenario: SimScenario,
    config: AnalysisConfig,
    truth: dict[str, HypothesisConfig],
    n_replicated: int,
    index: int,
) -> _Outcome:
    records = generate_replication(scenario, index)
    selected, _ = apply_rule(records, scenario.selection_rule, config.m)
    if not selected:
        return _Outcome(0.0, 0.0, 0.0, 0, 0, 0.0)

    dataset = validate_input(records, config, selected_ids=selected)
    ctx = build_context(config, len(dataset.pairs))
    rvalues = compute_rvalues(dataset.pairs, ctx, config.error_flavor)
    claimset = claims_at_level(rvalues, dataset.pairs, config.level, config.error_flavor)
    tally = directional_error_tally(claimset, truth)

    nonreplicated = sum(1 for feature_id in selected if not truth[feature_id].is_replicated())
    return _Outcome(
        fdp=tally.false_discovery_proportion,
        any_error=1.0 if tally.any_false_claim else 0.0,
        power=tally.S / n_replicated if n_replicated else 0.0,
        claims=tally.R,
        selected=len(selected),
        nonreplicated_share=nonreplicated / len(selected),
    )


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _standard_error(values: Sequence[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = _mean(values)
    variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return math.sqrt(variance / n)


def estimate_error_rates(scenario: SimScenario, replications: Optional[int] = None) -> SimResult:
    """Estimate directional FDR, FWER and power of the scenario's procedure.

    The procedure is the one named by the scenario's analysis settings (FDR or
    FWER r-values thresholded at its level); both error rates are estimated for
    its claims. Replications with an empty follow-up set count as having no claims.
    The selection rule is probed for stability on the first replication; an
    unstable rule voids the control guarantee.

    Args:
        scenario: Scenario to run
        replications: Override of the scenario's replication count

    Returns:
        SimResult with estimates, standard errors, bounds and guarantee notes
    """
    n = scenario.replications if replications is None else replications
    if n < 1:
        raise ConfigurationError(f"replications must be positive, got {n}")

    config = scenario.analysis_config
    truth = feature_truth(scenario)
    n_replicated = sum(1 for h in truth.values() if h.is_replicated())
    notes = scenario.guarantee_notes()
    probe = stability_check(
        generate_replication(scenario, 0),
        scenario.selection_rule,
        config.m,
        trials=settings.stability_trials,
        seed=scenario.seed,
    )
    if not probe.stable:
        notes.append(
            f"selection rule {scenario.selection_rule} is not stable: "
            f"{len(probe.violations)} perturbation(s) changed the follow-up set"
        )
    simulation_logger.log_guarantee(notes)

    outcomes: list[_Outcome] = []
    for index in range(n):
        outcomes.append(_run_replication(scenario, config, truth, n_replicated, index))
        if (index + 1) % PROGRESS_EVERY == 0:
            simulation_logger.log_progress(index + 1, n)

    fdp = [o.fdp for o in outcomes]
    errors = [o.any_error for o in outcomes]
    empty_fraction = sum(1 for o in outcomes if o.selected == 0) / n
    if empty_fraction > EMPTY_WARNING_FRACTION:
        simulation_logger.log_empty_selection(empty_fraction)

    bound_args = (scenario.counts, config.level, config.l00, config.c2, config.m)
    result = SimResult(
        empirical_fdr=_mean(fdp),
        empirical_fwer=_mean(errors),
        mc_se_fdr=_standard_error(fdp),
        mc_se_fwer=_standard_error(errors),
        mean_power=_mean([o.power for o in outcomes]),
        replications_run=n,
        mean_claims=_mean([float(o.claims) for o in outcomes]),
        mean_selected=_mean([float(o.selected) for o in outcomes]),
        empty_selection_fraction=empty_fraction,
        theoretical_bound=theoretical_fdr_bound(*bound_args),
        refined_bound=theoretical_fdr_bound(
            *bound_args,
            selected_nonreplicated_fraction=min(1.0, _mean([o.nonreplicated_share for o in outcomes])),
        ),
        guarantee=not notes,
        guarantee_notes=notes,
        se_defined=n > 1,
    )
    simulation_logger.log_result(result)
    return result
