import math

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from bayesics.errors import DataError, DesignError, UserInputError
from bayesics.formula.data import Dataset
from bayesics.formula.design import build_design
from bayesics.models.survival import (
    POOLED,
    curves_frame,
    exposure_and_events,
    fit_survival,
    gamma_log_ml,
    interior_knots,
    median_survival_time,
    survival_bayes_factor,
    survival_curve,
    survival_curves,
    survival_group_bf,
)
from bayesics.schemas.bs_config import SurvivalConfig


def survival_frame(rng, rates: dict[str, float], n: int = 150, censor_at: float = 3.0) -> pd.DataFrame:
    parts = []
    for group, rate in rates.items():
        latent = rng.exponential(1.0 / rate, n)
        parts.append(
            pd.DataFrame(
                {
                    "time": np.minimum(latent, censor_at),
                    "status": (latent <= censor_at).astype(float),
                    "arm": group,
                }
            )
        )
    return pd.concat(parts, ignore_index=True)


def survival_design(frame: pd.DataFrame, rhs: str = "1"):
    return build_design(f"Surv(time, status) ~ {rhs}", Dataset.from_frame(frame))


class TestBookkeeping:
    def test_exposure_and_events(self):
        exposure, events = exposure_and_events(
            np.array([1.0, 2.5, 4.0, 2.0]), np.array([1.0, 0.0, 1.0, 1.0]), np.array([2.0, 3.0])
        )
        assert_allclose(exposure, [7.0, 1.5, 1.0])
        # an event exactly at a knot closes the earlier interval
        assert_allclose(events, [2.0, 0.0, 1.0])

    def test_knots_are_event_quantiles(self):
        knots = interior_knots(np.arange(1.0, 101.0), 4)
        assert_allclose(knots, np.quantile(np.arange(1.0, 101.0), [0.25, 0.5, 0.75]))
        assert interior_knots(np.array([1.0, 1.0, 1.0]), 5).size == 1

    def test_log_ml_against_quadrature(self):
        alpha, beta, d, T = 0.4, 0.1, 7.0, 12.0
        integrand = lambda lam: lam**d * math.exp(-lam * T) * stats.gamma(alpha, scale=1 / beta).pdf(lam)  # noqa: E731
        value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-10)
        got = gamma_log_ml(np.array([alpha]), np.array([beta]), np.array([d]), np.array([T]))
        assert got == pytest.approx(math.log(value), abs=1e-6)


class TestFitSurvival:
    def test_single_interval_posterior(self, rng):
        frame = survival_frame(rng, {"a": 0.5})
        fit = fit_survival(survival_design(frame), n_intervals=1)
        hazards = fit.group(POOLED)
        d = frame["status"].sum()
        T = frame["time"].sum()
        assert fit.n_intervals == 1
        assert fit.summary()[0].post_mean == pytest.approx((hazards.alpha[0] + d) / (hazards.beta[0] + T))
        assert hazards.exposure[0] == pytest.approx(T)
        assert fit.summary()[0].post_mean == pytest.approx(0.5, rel=0.25)

    def test_interval_count_maximises_evidence(self, rng):
        fit = fit_survival(survival_design(survival_frame(rng, {"a": 1.0})), SurvivalConfig(k_max=5))
        assert set(fit.k_trace) <= set(range(1, 6))
        assert fit.log_ml == pytest.approx(max(fit.k_trace.values()))
        assert fit.n_intervals in fit.k_trace

    def test_grouped_fit_and_bayes_factor(self, rng):
        frame = survival_frame(rng, {"fast": 2.0, "slow": 0.3})
        pooled = fit_survival(survival_design(frame), n_intervals=2)
        grouped = fit_survival(survival_design(frame, "arm"), n_intervals=2)
        assert set(grouped.groups) == {"fast", "slow"}
        bf = survival_group_bf(pooled, grouped)
        assert bf.numerator == "one survival distribution"
        assert bf.denominator == "separate survival distributions by arm"
        assert bf.value < 1e-3
        assert survival_bayes_factor(grouped, pooled).log_value == pytest.approx(-bf.log_value)

    def test_group_bf_argument_order(self, rng):
        frame = survival_frame(rng, {"a": 1.0, "b": 1.0}, n=30)
        pooled = fit_survival(survival_design(frame), n_intervals=1)
        grouped = fit_survival(survival_design(frame, "arm"), n_intervals=1)
        with pytest.raises(UserInputError, match="pooled"):
            survival_group_bf(grouped, pooled)

    def test_median_survival_single_interval(self, rng):
        fit = fit_survival(survival_design(survival_frame(rng, {"a": 0.5})), n_intervals=1)
        hazards = fit.group(POOLED)
        rate = hazards.shape[0] / hazards.rate[0]
        assert median_survival_time(hazards, fit.knots) == pytest.approx(math.log(2.0) / rate)

    def test_numeric_covariate_rejected(self, rng):
        frame = survival_frame(rng, {"a": 1.0}, n=20)
        frame["age"] = rng.normal(50, 10, len(frame))
        with pytest.raises(DesignError, match="categorical"):
            fit_survival(survival_design(frame, "age"))

    def test_bad_event_coding(self):
        frame = pd.DataFrame({"time": [1.0, 2.0, 3.0], "status": [1.0, 2.0, 0.0]})
        with pytest.raises(DataError, match="event indicator"):
            fit_survival(survival_design(frame))

    def test_group_without_events(self):
        frame = pd.DataFrame(
            {"time": [1.0, 2.0, 3.0, 4.0], "status": [1.0, 1.0, 0.0, 0.0], "arm": ["a", "a", "b", "b"]}
        )
        with pytest.raises(DataError, match="'b' has no events"):
            fit_survival(survival_design(frame, "arm"))


class TestCurves:
    def test_curve_matches_closed_form_mean(self, rng, sampler):
        fit = fit_survival(survival_design(survival_frame(rng, {"a": 0.8})), n_intervals=3)
        curve = survival_curve(fit, times=np.array([0.0, 0.5, 1.0, 2.0]), sampler=sampler)
        assert curve.median[0] == pytest.approx(1.0)
        assert np.all(np.diff(curve.mean) < 0)
        assert_allclose(curve.draws.draws.mean(axis=0), curve.mean, atol=0.01)
        assert np.all(curve.lower <= curve.median) and np.all(curve.median <= curve.upper)

    def test_curves_frame(self, rng, sampler):
        fit = fit_survival(survival_design(survival_frame(rng, {"x": 1.0, "y": 0.5}, n=60), "arm"), n_intervals=2)
        frame = curves_frame(survival_curves(fit, sampler=sampler, grid_size=10))
        assert list(frame.columns) == ["group", "t", "median", "lower", "upper", "mean"]
        assert len(frame) == 20
        assert set(frame["group"]) == {"x", "y"}

    def test_negative_time(self, rng):
        fit = fit_survival(survival_design(survival_frame(rng, {"a": 1.0}, n=30)), n_intervals=1)
        with pytest.raises(UserInputError, match="non-negative"):
            survival_curve(fit, times=np.array([-1.0]))
