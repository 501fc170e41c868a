"""Tests for the Monte Carlo simulation harness."""

import json

import numpy as np
import pytest
from scipy.stats import norm

from repliq.errors import ConfigurationError
from repliq.models import ErrorFlavor, HypothesisConfig
from repliq.simulation import (
    Dependence,
    SimScenario,
    estimate_error_rates,
    generate_replication,
    load_scenario,
    theoretical_fdr_bound,
)
from repliq.simulation.harness import feature_truth, one_sided_pvalues


GWAS_COUNTS = {
    "0,0": 425,
    "1,1": 20,
    "-1,-1": 20,
    "1,0": 5,
    "-1,0": 5,
    "0,1": 5,
    "0,-1": 5,
    "1,-1": 8,
    "-1,1": 7,
}


def make_scenario(**overrides):
    """Small scenario with f00 = l00 = 0.8, overridable field by field."""
    data = {
        "counts": {"0,0": 40, "1,1": 5, "1,0": 3, "-1,-1": 2},
        "effect_size": 3.0,
        "selection_rule": "threshold:0.05",
        "analysis": {"l00": 0.8, "level": 0.05},
        "replications": 20,
        "seed": 7,
    }
    data.update(overrides)
    return SimScenario.model_validate(data)


class TestDependence:
    """Test dependence specifications."""

    def test_parse(self):
        """Test the accepted forms."""
        assert Dependence.parse("independent").is_independent
        dependence = Dependence.parse("equicorrelated:0.3")
        assert dependence.rho == 0.3
        assert not dependence.is_independent
        assert str(dependence) == "equicorrelated:0.3"

    @pytest.mark.parametrize("text", ["equicorrelated", "equicorrelated:1.0", "ar1:0.3", "independent:0.2"])
    def test_parse_invalid(self, text):
        """Test that malformed dependence raises."""
        with pytest.raises(ValueError):
            Dependence.parse(text)


class TestScenario:
    """Test scenario validation and loading."""

    def test_counts_cover_all_configurations(self):
        """Test that missing configurations are filled with zeros."""
        scenario = make_scenario()
        assert len(scenario.counts) == 9
        assert scenario.counts[HypothesisConfig(h1=0, h2=-1)] == 0
        assert scenario.family_size == 50
        assert scenario.analysis_config.m == 50

    def test_declared_m_must_match(self):
        """Test that a declared m must equal the sum of counts."""
        with pytest.raises(ValueError):
            make_scenario(m=60)
        assert make_scenario(m=50).family_size == 50

    def test_provided_rule_rejected(self):
        """Test that simulated data needs an explicit selection rule."""
        with pytest.raises(ValueError):
            make_scenario(selection_rule="provided")

    def test_dump_round_trip(self):
        """Test that a dumped scenario validates back to itself."""
        scenario = make_scenario(primary_dependence="equicorrelated:0.3")
        assert SimScenario.model_validate(scenario.model_dump()) == scenario
        assert SimScenario.model_validate(json.loads(scenario.model_dump_json())) == scenario

    def test_load_scenario(self, tmp_path):
        """Test reading a scenario file."""
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"counts": {"0,0": 9, "1,1": 1}, "effect_size": 2.0, "selection_rule": "bh:0.1"}))
        scenario = load_scenario(path)
        assert scenario.family_size == 10
        assert scenario.replications == 1000

    @pytest.mark.parametrize(
        "content",
        [
            "not json",
            "[1, 2]",
            json.dumps({"counts": {"0,0": 9}, "effect_size": 2.0, "selection_rule": "bh:0.1", "m": 5}),
            json.dumps({"counts": {"0,0": 9}, "effect_size": 2.0, "selection_rule": "provided"}),
            json.dumps({"counts": {"2,0": 9}, "effect_size": 2.0, "selection_rule": "bh:0.1"}),
            json.dumps({"counts": {"0,0": 9}, "effect_size": 2.0, "selection_rule": "bh:0.1", "colour": "red"}),
            json.dumps(
                {"counts": {"0,0": 9}, "effect_size": 2.0, "selection_rule": "bh:0.1", "analysis": {"levle": 0.01}}
            ),
        ],
    )
    def test_load_invalid(self, tmp_path, content):
        """Test that invalid scenario files raise ConfigurationError."""
        path = tmp_path / "scenario.json"
        path.write_text(content)
        with pytest.raises(ConfigurationError):
            load_scenario(path)

    def test_load_missing(self, tmp_path):
        """Test that a missing file raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            load_scenario(tmp_path / "absent.json")

    def test_guarantee_notes(self):
        """Test when the procedure carries a control guarantee."""
        assert make_scenario().guarantee_notes() == []
        assert make_scenario(analysis={"l00": 0.9}).guarantee_notes()
        dependent = make_scenario(primary_dependence="equicorrelated:0.3")
        assert any("m*" in note for note in dependent.guarantee_notes())
        assert make_scenario(
            primary_dependence="equicorrelated:0.3", analysis={"l00": 0.8, "dependency": "mstar"}
        ).guarantee_notes() == []
        assert make_scenario(
            primary_dependence="equicorrelated:0.3",
            analysis={"l00": 0.8, "dependency": "threshold", "threshold": 0.05},
        ).guarantee_notes() == []
        assert make_scenario(
            selection_rule="threshold:0.1",
            analysis={"l00": 0.8, "dependency": "threshold", "threshold": 0.05},
        ).guarantee_notes()
        assert make_scenario(
            primary_dependence="equicorrelated:0.3", analysis={"l00": 0.8, "error_flavor": "fwer"}
        ).guarantee_notes() == []


class TestGeneration:
    """Test data generation."""

    def test_one_sided_pvalues(self):
        """Test p-values of z = 0 and their complementarity."""
        left, right = one_sided_pvalues(np.array([0.0, 1.5, -2.0]))
        assert left[0] == 0.5
        assert right[0] == 0.5
        assert left + right == pytest.approx(np.ones(3))

    def test_deterministic(self):
        """Test that a replication depends only on the seed and its index."""
        scenario = make_scenario()
        assert generate_replication(scenario, 3) == generate_replication(scenario, 3)
        assert generate_replication(scenario, 3) != generate_replication(scenario, 4)
        assert generate_replication(scenario, 3) != generate_replication(make_scenario(seed=8), 3)

    def test_feature_ids_follow_counts(self):
        """Test ids and truth in generation order."""
        scenario = make_scenario()
        records = generate_replication(scenario, 0)
        truth = feature_truth(scenario)
        assert [rec.feature_id for rec in records] == list(truth)
        assert records[0].feature_id == "feat00000"
        assert all(rec.is_followed_up for rec in records)
        assert sum(1 for h in truth.values() if h.is_replicated()) == 7

    def test_effect_shifts_pvalues(self):
        """Test that a right-sided effect of size 4 gives small right-sided p-values."""
        scenario = make_scenario(counts={"1,1": 200}, effect_size=4.0, analysis={"l00": 0.0})
        records = generate_replication(scenario, 0)
        assert np.mean([rec.p1_right for rec in records]) < 0.05
        assert np.mean([rec.p2_right for rec in records]) < 0.05

    def test_negative_index(self):
        """Test that replication indices are non-negative."""
        with pytest.raises(ConfigurationError):
            generate_replication(make_scenario(), -1)

    def test_equicorrelated_noise(self):
        """Test that the shared factor induces correlation rho within a study only."""
        scenario = make_scenario(
            counts={"0,0": 2}, primary_dependence="equicorrelated:0.5", analysis={"l00": 0.0}
        )
        z1, z2 = [], []
        for index in range(2000):
            records = generate_replication(scenario, index)
            z1.append([norm.ppf(rec.p1_left) for rec in records])
            z2.append([norm.ppf(rec.p2_left) for rec in records])
        z1, z2 = np.array(z1), np.array(z2)
        assert np.corrcoef(z1[:, 0], z1[:, 1])[0, 1] == pytest.approx(0.5, abs=0.1)
        assert abs(np.corrcoef(z2[:, 0], z2[:, 1])[0, 1]) < 0.1
        assert abs(np.corrcoef(z1[:, 0], z2[:, 0])[0, 1]) < 0.1


class TestEstimation:
    """Test error-rate estimation."""

    def test_reproducible(self):
        """Test that the same scenario gives identical results."""
        scenario = make_scenario()
        assert estimate_error_rates(scenario) == estimate_error_rates(scenario)

    def test_single_replication(self):
        """Test that one replication reports undefined standard errors as zero."""
        result = estimate_error_rates(make_scenario(), replications=1)
        assert result.replications_run == 1
        assert not result.se_defined
        assert result.mc_se_fdr == 0.0
        assert result.mc_se_fwer == 0.0

    def test_invalid_replications(self):
        """Test that a non-positive override raises."""
        with pytest.raises(ConfigurationError):
            estimate_error_rates(make_scenario(), replications=0)

    def test_global_null(self):
        """Test that every claim is false when no feature is replicated."""
        scenario = make_scenario(counts={"0,0": 100}, selection_rule="threshold:0.1", replications=200)
        result = estimate_error_rates(scenario)
        assert result.empirical_fdr == result.empirical_fwer
        assert result.mean_power == 0.0
        assert result.guarantee
        assert result.empirical_fdr <= 0.05 + 3 * result.mc_se_fdr

    def test_empty_selection(self):
        """Test that replications with nothing selected count as having no claims."""
        scenario = make_scenario(counts={"0,0": 10}, selection_rule="threshold:1e-9", replications=5)
        result = estimate_error_rates(scenario)
        assert result.empty_selection_fraction == 1.0
        assert result.empirical_fdr == 0.0
        assert result.mean_selected == 0.0

    def test_guarantee_stamp(self):
        """Test that violated assumptions are reported on the result."""
        result = estimate_error_rates(make_scenario(analysis={"l00": 0.95}), replications=5)
        assert not result.guarantee
        assert result.guarantee_notes

    @pytest.mark.parametrize(
        "analysis",
        [
            {"l00": 0.8, "dependency": "mstar"},
            {"l00": 0.8, "dependency": "threshold", "threshold": 0.05},
        ],
    )
    def test_dependent_primary_modes(self, analysis):
        """Test FDR control with equicorrelated primary statistics under the adjusted modes."""
        scenario = make_scenario(
            counts=GWAS_COUNTS,
            primary_dependence="equicorrelated:0.3",
            analysis=analysis,
            replications=40,
            seed=2024,
        )
        result = estimate_error_rates(scenario)
        assert result.guarantee
        assert result.replications_run == 40
        assert result.empirical_fdr <= 0.05 + 3 * result.mc_se_fdr

    def test_bounds_reported(self):
        """Test the relaxed and refined bounds."""
        scenario = make_scenario()
        result = estimate_error_rates(scenario)
        expected = theoretical_fdr_bound(scenario.counts, 0.05, 0.8, 0.5, 50)
        assert result.theoretical_bound == pytest.approx(expected)
        assert result.theoretical_bound <= 0.05
        assert result.refined_bound <= result.theoretical_bound


@pytest.mark.slow
class TestErrorControl:
    """Monte Carlo checks of directional error control."""

    def gwas_scenario(self, **overrides):
        data = {
            "counts": GWAS_COUNTS,
            "effect_size": 3.0,
            "selection_rule": "threshold:0.05",
            "analysis": {"l00": 0.8, "c2": 0.5, "level": 0.05},
            "replications": 2000,
            "seed": 2024,
        }
        data.update(overrides)
        return SimScenario.model_validate(data)

    def test_fdr_control(self):
        """Test directional FDR control with f00 = 0.85 >= l00 = 0.8."""
        result = estimate_error_rates(self.gwas_scenario())
        assert result.guarantee
        assert result.empirical_fdr <= 0.05 + 3 * result.mc_se_fdr
        assert result.empirical_fdr <= result.theoretical_bound + 3 * result.mc_se_fdr

    @pytest.mark.parametrize("primary", ["independent", "equicorrelated:0.3"])
    def test_fwer_control(self, primary):
        """Test directional FWER control of the Bonferroni flavor."""
        scenario = self.gwas_scenario(
            primary_dependence=primary,
            analysis={"l00": 0.8, "c2": 0.5, "level": 0.05, "error_flavor": ErrorFlavor.FWER.value},
        )
        result = estimate_error_rates(scenario)
        assert result.guarantee
        assert result.empirical_fwer <= 0.05 + 3 * result.mc_se_fwer

    def test_power(self):
        """Test that strong replicated effects are mostly found."""
        scenario = self.gwas_scenario(counts={"0,0": 480, "1,1": 20}, effect_size=4.0, replications=500)
        result = estimate_error_rates(scenario)
        assert result.mean_power > 0.5
