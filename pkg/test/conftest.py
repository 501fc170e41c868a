"""Test configuration and fixtures."""

import pytest

from repliq.models import AnalysisConfig, DirectedPair, Direction, FeatureRecord
from repliq.rules.rvalues import build_context


def make_pairs(p1, p2, prefix="f"):
    """Directed pairs (all Left) from parallel sequences of p-values."""
    return [
        DirectedPair(
            feature_id=f"{prefix}{j}",
            p1_directed=float(a),
            p2_directed=float(b),
            direction=Direction.LEFT,
        )
        for j, (a, b) in enumerate(zip(p1, p2))
    ]


@pytest.fixture(name="single_pair")
def single_pair_fixture():
    """The one-feature example with p'1 = 0.01 and p'2 = 0.02."""
    return make_pairs([0.01], [0.02])


@pytest.fixture(name="single_context")
def single_context_fixture():
    """Context for m = 1, l00 = 0, c2 = 0.5 and one selected feature."""
    config = AnalysisConfig(m=1, l00=0.0, c2=0.5)
    return build_context(config, 1)


@pytest.fixture(name="sample_records")
def sample_records_fixture():
    """Five features, three of them followed up."""
    return [
        FeatureRecord(feature_id="rs1", p1_left=0.0004, p1_right=0.9996, p2_left=0.002, p2_right=0.998),
        FeatureRecord(feature_id="rs2", p1_left=0.9999, p1_right=0.0001, p2_left=0.99, p2_right=0.01),
        FeatureRecord(feature_id="rs3", p1_left=0.003, p1_right=0.997, p2_left=0.6, p2_right=0.4),
        FeatureRecord(feature_id="rs4", p1_left=0.4, p1_right=0.6),
        FeatureRecord(feature_id="rs5", p1_left=0.7, p1_right=0.3),
    ]


@pytest.fixture(name="sample_csv")
def sample_csv_fixture(tmp_path):
    """CSV version of the sample records."""
    path = tmp_path / "pvalues.csv"
    path.write_text(
        "feature_id,p1_left,p1_right,p2_left,p2_right\n"
        "rs1,0.0004,0.9996,0.002,0.998\n"
        "rs2,0.9999,0.0001,0.99,0.01\n"
        "rs3,0.003,0.997,0.6,0.4\n"
        "rs4,0.4,0.6,,\n"
        "rs5,0.7,0.3,,\n"
    )
    return path


@pytest.fixture(name="single_csv")
def single_csv_fixture(tmp_path):
    """CSV holding the one-feature example."""
    path = tmp_path / "single.csv"
    path.write_text("feature_id,p1_left,p1_right,p2_left,p2_right\nsnp1,0.01,0.99,0.02,0.98\n")
    return path
