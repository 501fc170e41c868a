"""Tests for domain models."""

import pytest
from pydantic import ValidationError

from repliq.models import (
    AnalysisConfig,
    DependencyMode,
    Direction,
    ErrorFlavor,
    FeatureRecord,
    HypothesisConfig,
    ProcedureParameters,
    ReportRow,
    RValueReport,
)


class TestHypothesisConfig:
    """Test the nine true configurations."""

    def test_all_configurations(self):
        """Test that there are exactly nine distinct configurations."""
        configs = HypothesisConfig.all()
        assert len(configs) == 9
        assert len(set(configs)) == 9

    def test_is_replicated(self):
        """Test that only (1,1) and (-1,-1) are replicated."""
        replicated = [c for c in HypothesisConfig.all() if c.is_replicated()]
        assert replicated == [HypothesisConfig(h1=-1, h2=-1), HypothesisConfig(h1=1, h2=1)]

    def test_null_predicates(self):
        """Test follow-up null and double null predicates."""
        assert HypothesisConfig(h1=1, h2=0).is_null_in_followup()
        assert not HypothesisConfig(h1=0, h2=1).is_null_in_followup()
        assert HypothesisConfig(h1=0, h2=0).is_double_null()
        assert not HypothesisConfig(h1=-1, h2=0).is_double_null()

    def test_parse_and_str(self):
        """Test the h1,h2 notation."""
        config = HypothesisConfig.parse("1,-1")
        assert config == HypothesisConfig(h1=1, h2=-1)
        assert str(config) == "1,-1"
        assert HypothesisConfig.parse("(0, 0)").is_double_null()

    @pytest.mark.parametrize("text", ["2,0", "1", "a,b", "1,0,1"])
    def test_parse_invalid(self, text):
        """Test that invalid notations are rejected."""
        with pytest.raises(ValueError):
            HypothesisConfig.parse(text)

    def test_usable_as_key(self):
        """Test that configurations hash by value."""
        counts = {HypothesisConfig(h1=0, h2=0): 3}
        assert counts[HypothesisConfig.parse("0,0")] == 3


class TestFeatureRecord:
    """Test raw p-value records."""

    def test_followed_up(self):
        """Test detection of follow-up p-values."""
        rec = FeatureRecord(feature_id="a", p1_left=0.1, p1_right=0.9, p2_left=0.2, p2_right=0.8)
        assert rec.is_followed_up
        assert not FeatureRecord(feature_id="b", p1_left=0.1, p1_right=0.9).is_followed_up

    def test_followup_pairing(self):
        """Test that follow-up p-values come in pairs."""
        with pytest.raises(ValidationError):
            FeatureRecord(feature_id="a", p1_left=0.1, p1_right=0.9, p2_left=0.2)

    @pytest.mark.parametrize("value", [-0.1, 1.5, float("nan")])
    def test_probability_range(self, value):
        """Test that p-values outside [0,1] are rejected."""
        with pytest.raises(ValidationError):
            FeatureRecord(feature_id="a", p1_left=value, p1_right=0.5)

    def test_primary_discreteness(self):
        """Test the deviation from p_left + p_right = 1."""
        rec = FeatureRecord(feature_id="a", p1_left=0.3, p1_right=0.8)
        assert rec.primary_discreteness == pytest.approx(0.1)


class TestProcedureParameters:
    """Test analysis parameters."""

    def test_defaults(self):
        """Test the recommended defaults."""
        params = ProcedureParameters()
        assert params.l00 == 0.8
        assert params.c2 == 0.5
        assert params.dependency is DependencyMode.INDEPENDENT
        assert params.error_flavor is ErrorFlavor.FDR
        assert params.level == 0.05

    def test_threshold_required_in_threshold_mode(self):
        """Test that t is required iff the threshold mode is used."""
        with pytest.raises(ValidationError):
            ProcedureParameters(dependency=DependencyMode.THRESHOLD)
        with pytest.raises(ValidationError):
            ProcedureParameters(threshold=0.01)
        assert ProcedureParameters(dependency=DependencyMode.THRESHOLD, threshold=0.01).threshold == 0.01

    @pytest.mark.parametrize("field,value", [("l00", 1.0), ("l00", -0.1), ("c2", 0.0), ("c2", 1.0), ("level", 0.0)])
    def test_domains(self, field, value):
        """Test parameter domains."""
        with pytest.raises(ValidationError):
            ProcedureParameters(**{field: value})

    def test_unknown_field_rejected(self):
        """Test that a misspelled parameter is an error, not a silent default."""
        with pytest.raises(ValidationError):
            ProcedureParameters.model_validate({"levle": 0.01})

    def test_analysis_config(self):
        """Test attaching m and switching flavor."""
        config = AnalysisConfig.from_parameters(ProcedureParameters(l00=0.5), 100)
        assert config.m == 100
        assert config.l00 == 0.5
        assert config.with_flavor(ErrorFlavor.FWER).error_flavor is ErrorFlavor.FWER
        with pytest.raises(ValidationError):
            AnalysisConfig(m=0)


class TestReport:
    """Test report models."""

    def test_claimed_ids(self):
        """Test claim extraction and flavor detection."""
        rows = (
            ReportRow(feature_id="a", direction=Direction.LEFT, p1_directed=0.01, p2_directed=0.02,
                      r_fdr=0.04, r_fwer=0.04, claimed=True, claimed_fwer=True),
            ReportRow(feature_id="b", direction=Direction.RIGHT, p1_directed=0.2, p2_directed=0.5,
                      r_fdr=1.0, r_fwer=1.0, claimed=False, claimed_fwer=False),
        )
        report = RValueReport(rows=rows)
        assert report.claimed_ids == ["a"]
        assert report.has_both_flavors

    def test_direction_sign(self):
        """Test direction signs."""
        assert Direction.LEFT.sign == -1
        assert Direction.RIGHT.sign == 1
