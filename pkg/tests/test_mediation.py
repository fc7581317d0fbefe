import numpy as np
import pytest
from numpy.testing import assert_allclose

from bayesics.datasets import mediation_demo
from bayesics.errors import DesignError, UserInputError
from bayesics.formula.data import Dataset
from bayesics.models.mediation import effect_labels, mediate, mediation_designs

MEDIATOR = "m ~ treat + w"
OUTCOME = "y ~ treat + m + w"


@pytest.fixture(scope="module")
def demo_designs():
    return mediation_designs(MEDIATOR, OUTCOME, mediation_demo(n=400))


class TestMediate:
    def test_recovers_effects(self, demo_designs, sampler):
        result = mediate(*demo_designs, treatment="treat", sampler=sampler)
        rows = {s.label: s for s in result.summary()}
        assert result.levels == ("0", "1")
        assert rows["ACME (average)"].post_mean == pytest.approx(2.0, abs=0.9)
        assert rows["ADE (average)"].post_mean == pytest.approx(0.5, abs=0.4)
        assert rows["Total effect"].post_mean == pytest.approx(2.5, abs=1.0)
        assert rows["Total effect"].prob_direction > 0.99
        assert result.proportion is not None
        assert 0.0 < result.proportion.post_mean < 1.0

    def test_effects_decompose_per_draw(self, demo_designs, sampler):
        result = mediate(*demo_designs, treatment="treat", sampler=sampler)
        col = result.draws.column
        assert_allclose(col("Total effect"), col("ACME(0)") + col("ADE(1)"), atol=1e-9)
        assert_allclose(col("Total effect"), col("ACME(1)") + col("ADE(0)"), atol=1e-9)

    def test_labels(self):
        assert effect_labels(("ctl", "trt"))[:2] == ["ACME(ctl)", "ACME(trt)"]

    def test_treatment_must_be_a_term(self, demo_designs):
        with pytest.raises(DesignError, match="not a term"):
            mediate(*demo_designs, treatment="dose")

    def test_treatment_must_be_binary(self, demo_designs):
        with pytest.raises(UserInputError, match="binary"):
            mediate(*demo_designs, treatment="w")

    def test_unsupported_family(self, demo_designs):
        with pytest.raises(UserInputError, match="mediation submodels"):
            mediate(*demo_designs, treatment="treat", outcome_family="negbinom")

    def test_unknown_mode(self, demo_designs):
        with pytest.raises(ValueError, match="simulation mode"):
            mediate(*demo_designs, treatment="treat", mode="median")


def test_designs_share_complete_rows():
    data = Dataset.from_mapping(
        {
            "treat": [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
            "w": [0.1, 0.4, None, 0.2, 0.3, 0.9],
            "m": [1.0, 2.0, 1.5, 2.5, 0.5, None],
            "y": [1.0, 3.0, 2.0, 4.0, 0.8, 3.3],
        }
    )
    med, out = mediation_designs(MEDIATOR, OUTCOME, data)
    assert med.n == out.n == 4
    assert np.array_equal(med.X[:, 1], out.X[:, 1])
