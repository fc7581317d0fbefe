import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from bayesics.errors import DesignError, UserInputError
from bayesics.formula.data import Dataset
from bayesics.formula.design import build_design
from bayesics.models.linear import INTERCEPT_PRECISION, default_sigma_prior
from bayesics.models.simple_tests import (
    RATIO_ROPE,
    case_control,
    chisq_test,
    poisson_test,
    prop_test,
    sign_test,
    t_test,
    t_test_design,
)


class TestTTest:
    def test_one_sample(self, rng):
        x = rng.normal(5.0, 1.0, 60)
        result = t_test(x, mu=4.0)
        mean = result.get("mean x")
        assert mean.post_mean == pytest.approx(np.mean(x), abs=0.05)
        assert mean.prob_direction > 0.99
        assert result.bayes_factors["mean != 4"].value > 100
        assert result.get("Var x").prob_direction is None

    def test_two_sample_unequal(self, rng, sampler):
        result = t_test(rng.normal(0, 1, 50), rng.normal(1, 3, 50), labels=("a", "b"), sampler=sampler)
        labels = [s.label for s in result.summary()]
        assert "a - b" in labels and "EPR(a > b)" in labels
        assert result.get("a - b").post_mean < 0
        assert result.extras["variance_model"] == "unequal"

    def test_pooled(self, rng, sampler):
        result = t_test(rng.normal(2, 1, 40), rng.normal(0, 1, 40), var_equal=True, sampler=sampler)
        diff = result.get("x - y")
        assert diff.post_mean == pytest.approx(2.0, abs=0.6)
        assert diff.prob_direction > 0.99
        assert result.get("EPR(x > y)").post_mean > 0.5

    def test_pooled_bayes_factor_matches_student_t_evidence(self, rng, sampler):
        x, y = rng.normal(1.0, 1.0, 15), rng.normal(0.0, 1.0, 12)
        result = t_test(x, y, var_equal=True, sampler=sampler)
        bf = result.bayes_factors["full vs null"]
        assert bf.orientation == "full model vs. null model"
        assert set(result.extras["diagnostics"]) == {"x", "y"}

        # y | σ² ~ N(Xμ, σ²(I + X V⁻¹ Xᵀ)), σ² ~ IG(a/2, b/2): multivariate t with a dof
        both = np.concatenate([x, y])
        a, b = default_sigma_prior(float(np.var(both, ddof=1)))

        def log_evidence(X):
            mean = X @ np.full(X.shape[1], both.mean())
            shape = (b / a) * (np.eye(both.size) + X @ X.T / INTERCEPT_PRECISION)
            return stats.multivariate_t(loc=mean, shape=shape, df=a).logpdf(both)

        separate = np.zeros((both.size, 2))
        separate[: x.size, 0] = 1.0
        separate[x.size :, 1] = 1.0
        expected = log_evidence(separate) - log_evidence(np.ones((both.size, 1)))
        assert bf.log_value == pytest.approx(expected, abs=1e-6)

    def test_pooled_identical_groups_favor_null(self, rng, sampler):
        result = t_test(rng.normal(0, 1, 200), rng.normal(0, 1, 200), var_equal=True, sampler=sampler)
        assert result.bayes_factors["full vs null"].value < 1.0

    def test_from_design(self, rng, sampler):
        frame = pd.DataFrame({"y": rng.normal(0, 1, 20), "g": ["ctl", "trt"] * 10})
        result = t_test_design(build_design("y ~ g", Dataset.from_frame(frame)), sampler=sampler)
        assert result.get("ctl - trt").label == "ctl - trt"

    def test_design_needs_two_levels(self, rng):
        frame = pd.DataFrame({"y": rng.normal(0, 1, 9), "g": ["a", "b", "c"] * 3})
        with pytest.raises(DesignError, match="two-level"):
            t_test_design(build_design("y ~ g", Dataset.from_frame(frame)))

    def test_too_few(self):
        with pytest.raises(UserInputError, match="at least two"):
            t_test([1.0])


class TestProportions:
    def test_jeffreys_single(self):
        result = prop_test(7, 10)
        assert result.get("p").post_mean == pytest.approx(7.5 / 11, abs=1e-9)
        assert result.get("p").post_mean == pytest.approx(0.6818, abs=1e-4)

    def test_two_groups(self, sampler):
        result = prop_test([30, 10], [50, 50], prior="uniform", sampler=sampler)
        odds = result.get("OR(p1 / p2)")
        assert odds.post_mean > 1.0
        assert odds.rope_bounds == pytest.approx(RATIO_ROPE)
        assert result.bayes_factors["different vs equal"].value > 10

    def test_custom_shapes(self):
        result = prop_test(0, 4, prior=(2.0, 2.0))
        assert result.get("p").post_mean == pytest.approx(2.0 / 8.0)

    @pytest.mark.parametrize(
        "successes, trials, prior",
        [(11, 10, "jeffreys"), (1, 0, "jeffreys"), (1, 2, "flat"), (1, 2, (0.0, 1.0)), ([1, 2], [3], "jeffreys")],
    )
    def test_invalid(self, successes, trials, prior):
        with pytest.raises(UserInputError):
            prop_test(successes, trials, prior=prior)


class TestPoisson:
    def test_single_rate(self):
        rate = poisson_test(10, 2.0).get("rate")
        assert rate.post_mean == pytest.approx(5.25)
        assert rate.prob_direction is None

    def test_rate_ratio(self, sampler):
        result = poisson_test([40, 10], [1.0, 1.0], sampler=sampler)
        ratio = result.get("rate1 / rate2")
        assert ratio.ci_lower > 1.0
        assert ratio.prob_direction > 0.99

    def test_bad_offset(self):
        with pytest.raises(UserInputError, match="offsets"):
            poisson_test(3, 0.0)


class TestSign:
    def test_eight_of_ten(self):
        x = np.array([1.0] * 8 + [-1.0] * 2)
        result = sign_test(x)
        assert result.extras["prob_greater_half"] == pytest.approx(0.9673, abs=1e-4)
        assert result.extras["posterior_shapes"] == [9.0, 3.0]

    def test_paired_drops_zeros(self):
        result = sign_test([1.0, 2.0, 3.0, 4.0], [0.0, 2.0, 1.0, 5.0])
        assert result.extras["zeros_dropped"] == 1
        assert (result.extras["positive"], result.extras["negative"]) == (2, 1)

    def test_all_zero(self):
        with pytest.raises(UserInputError, match="zero"):
            sign_test([1.0, 2.0], [1.0, 2.0])


class TestTables:
    def test_balanced_table_favors_independence(self):
        result = chisq_test([[10, 10], [10, 10]])
        bf = result.bayes_factors["independence vs dependence"]
        lg = math.lgamma
        expected = (2 * (lg(2) - lg(42) + 2 * lg(21))) - (lg(4) - lg(44) + 4 * lg(11))
        assert bf.log_value == pytest.approx(expected, rel=1e-10)
        assert bf.value == pytest.approx(1.82, abs=0.02)
        assert len(result.summary()) == 4

    def test_strong_association(self):
        bf = chisq_test([[30, 2], [3, 25]]).bayes_factors["independence vs dependence"]
        assert bf.value < 1e-6

    def test_cell_probabilities_sum_to_one(self):
        result = chisq_test([[5, 1, 3], [2, 8, 4]])
        assert sum(s.post_mean for s in result.summary()) == pytest.approx(1.0)

    @pytest.mark.parametrize("table", [[[1, 2, 3]], [[0, 0], [0, 0]], [[1, -1], [2, 2]]])
    def test_invalid_tables(self, table):
        with pytest.raises(UserInputError):
            chisq_test(table)

    def test_case_control(self, sampler):
        result = case_control(40, 10, 15, 35, sampler=sampler)
        odds = result.get("OR")
        assert odds.ci_lower > 1.0
        assert result.get("Pr(exposed | case)").post_mean == pytest.approx(40.5 / 51.0)

    def test_case_control_needs_both_groups(self):
        with pytest.raises(UserInputError, match="cases and controls"):
            case_control(0, 0, 3, 4)
