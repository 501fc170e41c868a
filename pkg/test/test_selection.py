"""Tests for follow-up selection rules."""

import numpy as np
import pytest

from repliq.errors import ConfigurationError
from repliq.models import FeatureRecord
from repliq.rules.selection import (
    SelectionKind,
    SelectionRule,
    apply_rule,
    select,
    stability_check,
    two_sided_p,
)


def record(feature_id, two_sided, left=True):
    """Record whose two-sided primary p-value is ``two_sided``."""
    half = two_sided / 2.0
    if left:
        return FeatureRecord(feature_id=feature_id, p1_left=half, p1_right=1.0 - half)
    return FeatureRecord(feature_id=feature_id, p1_left=1.0 - half, p1_right=half)


@pytest.fixture(name="random_records")
def random_records_fixture():
    """Fifty features, five with strong primary signals."""
    rng = np.random.default_rng(42)
    p = np.concatenate([10.0 ** rng.uniform(-8, -5, 5), rng.uniform(0, 1, 45)])
    return [record(f"g{j:02d}", float(value), left=bool(j % 2)) for j, value in enumerate(p)]


class TestSelectionRule:
    """Test rule parsing."""

    @pytest.mark.parametrize(
        "text,kind,parameter",
        [
            ("provided", SelectionKind.PROVIDED, None),
            ("threshold:0.001", SelectionKind.THRESHOLD, 0.001),
            ("BH:0.05", SelectionKind.BH, 0.05),
            ("bonf:0.05", SelectionKind.BONFERRONI, 0.05),
            ("topk:3", SelectionKind.TOPK, 3.0),
        ],
    )
    def test_parse(self, text, kind, parameter):
        """Test parsing the supported rules."""
        rule = SelectionRule.parse(text)
        assert rule.kind is kind
        assert rule.parameter == parameter

    @pytest.mark.parametrize(
        "text", ["fancy:0.1", "threshold", "bh:1.5", "topk:2.5", "topk:0", "provided:0.1", "bh:abc"]
    )
    def test_parse_invalid(self, text):
        """Test that malformed rules raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            SelectionRule.parse(text)

    def test_str(self):
        """Test the canonical text form."""
        assert str(SelectionRule.parse("topk:3")) == "topk:3"
        assert str(SelectionRule.parse("bh:0.05")) == "bh:0.05"
        assert str(SelectionRule.parse("provided")) == "provided"
        assert SelectionRule.parse("topk:3").k == 3


class TestRules:
    """Test the selection rules themselves."""

    @pytest.mark.parametrize(
        "left,right,expected", [(0.01, 0.99, 0.02), (0.5, 0.5, 1.0), (0.6, 0.4, 0.8)]
    )
    def test_two_sided_p(self, left, right, expected):
        """Test the doubling rule."""
        rec = FeatureRecord(feature_id="x", p1_left=left, p1_right=right)
        assert two_sided_p(rec) == pytest.approx(expected)

    def test_benjamini_hochberg(self):
        """Test BH at 0.05 on two-sided p-values (0.01, 0.02, 0.9)."""
        records = [record("a", 0.01), record("b", 0.02), record("c", 0.9)]
        result = select(records, SelectionRule.parse("bh:0.05"), m=3)
        assert result.selected == ("a", "b")
        assert result.excluded == ()

    def test_benjamini_hochberg_uses_m(self):
        """Test that unlisted features still count towards m."""
        records = [record("a", 0.01), record("b", 0.02)]
        result = select(records, SelectionRule.parse("bh:0.05"), m=10)
        assert result.selected == ()
        assert result.empty

        # m = 4: 0.01 <= 0.05/4 and 0.02 <= 2 * 0.05/4
        assert select(records, SelectionRule.parse("bh:0.05"), m=4).selected == ("a", "b")

    def test_threshold_is_strict(self):
        """Test that the cut-off itself is not selected."""
        records = [record("a", 0.01), record("b", 0.04), record("c", 0.2)]
        selected, _ = apply_rule(records, SelectionRule.parse("threshold:0.04"), m=3)
        assert selected == ["a"]

    def test_bonferroni(self):
        """Test selection at alpha / m."""
        records = [record("a", 0.001), record("b", 0.005), record("c", 0.5)]
        selected, _ = apply_rule(records, SelectionRule.parse("bonf:0.03"), m=3)
        assert selected == ["a", "b"]

    def test_topk_ties_broken_by_id(self):
        """Test that equal p-values are ordered by feature id."""
        records = [record("b", 0.01), record("a", 0.01), record("c", 0.001)]
        selected, _ = apply_rule(records, SelectionRule.parse("topk:2"), m=3)
        assert selected == ["a", "c"]

    def test_topk_too_large(self):
        """Test that k above the number of features raises."""
        with pytest.raises(ConfigurationError):
            select([record("a", 0.01)], SelectionRule.parse("topk:2"), m=5)

    def test_provided(self, sample_records):
        """Test that the provided rule keeps features with follow-up p-values."""
        result = select(sample_records, SelectionRule.parse("provided"), m=5)
        assert result.selected == ("rs1", "rs2", "rs3")

    def test_excludes_directed_p_above_half(self):
        """Test that discrete features with both one-sided p-values above 0.5 are excluded."""
        records = [
            record("a", 0.01),
            record("b", 0.02),
            FeatureRecord(feature_id="d", p1_left=0.6, p1_right=0.7),
        ]
        result = select(records, SelectionRule.parse("topk:3"), m=3)
        assert result.selected == ("a", "b")
        assert result.excluded == ("d",)

    def test_selected_in_input_order(self, random_records):
        """Test that selections follow the input order."""
        result = select(random_records, SelectionRule.parse("topk:5"), m=50)
        positions = [int(fid[1:]) for fid in result.selected]
        assert positions == sorted(positions)


class TestStability:
    """Test the empirical stability probe."""

    @pytest.mark.parametrize("rule", ["threshold:0.05", "bonf:0.05", "bh:0.1", "topk:5"])
    def test_builtin_rules_are_stable(self, random_records, rule):
        """Test that no perturbation of a selected feature changes the follow-up set."""
        report = stability_check(random_records, SelectionRule.parse(rule), m=50, trials=25, seed=3)
        assert report.selected_count > 0
        assert report.perturbations_tested > 0
        assert report.stable
        assert report.violations == []

    def test_reproducible(self, random_records):
        """Test that the same seed tests the same perturbations."""
        rule = SelectionRule.parse("bh:0.1")
        first = stability_check(random_records, rule, m=50, trials=10, seed=9)
        second = stability_check(random_records, rule, m=50, trials=10, seed=9)
        assert first.perturbations_tested == second.perturbations_tested
