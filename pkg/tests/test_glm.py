import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from bayesics.datasets import negbinom_demo
from bayesics.errors import DataError, DesignError, SeparationError
from bayesics.formula.data import Dataset
from bayesics.formula.design import INTERCEPT, build_design
from bayesics.models.families import get_family
from bayesics.models.glm import (
    LogPosterior,
    VBObjective,
    _laplace,
    bayesian_pvalue,
    default_glm_prior,
    fit_glm,
    glm_coefficient_bfs,
    glm_credible_band,
    glm_information_criteria,
    predict,
    separated_terms,
)
from bayesics.schemas.bs_config import BayesicsConfig

H = 1e-6


def central_difference(f, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = H
        out[i] = (f(x + step) - f(x - step)) / (2 * H)
    return out


@pytest.fixture
def logistic_design(rng):
    n = 400
    x = rng.standard_normal(n)
    g = rng.choice(["ctl", "trt"], n)
    eta = -0.5 + 1.0 * x + 0.8 * (g == "trt")
    y = rng.binomial(1, 1.0 / (1.0 + np.exp(-eta)))
    return build_design("y ~ x + g", Dataset.from_frame(pd.DataFrame({"y": y, "x": x, "g": g})))


@pytest.fixture
def poisson_design(rng):
    n = 1000
    x = rng.standard_normal(n)
    y = rng.poisson(np.exp(0.5 + 0.3 * x))
    return build_design("y ~ x", Dataset.from_frame(pd.DataFrame({"y": y, "x": x})))


class TestFamilies:
    @pytest.mark.parametrize("name", ["gaussian", "binomial", "poisson", "negbinom"])
    def test_grad_eta(self, name, rng):
        family = get_family(name)
        y = rng.integers(0, 2, 6).astype(float) if name == "binomial" else rng.poisson(3.0, 6).astype(float)
        eta = rng.normal(0.5, 0.3, 6)
        aux = np.array([[0.3]])
        analytic = family.grad_eta(y, eta[None, :], aux)[0]
        numeric = central_difference(lambda e: family.loglik(y, e[None, :], aux).sum(), eta)
        assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-6)

    @pytest.mark.parametrize("name", ["gaussian", "negbinom"])
    def test_grad_aux(self, name, rng):
        family = get_family(name)
        y = rng.poisson(3.0, 6).astype(float)
        eta = rng.normal(1.0, 0.2, (1, 6))

        def total(a: np.ndarray) -> float:
            return float(family.loglik(y, eta, a.reshape(1, 1)).sum())

        analytic = family.grad_aux(y, eta, np.array([[0.4]])).sum()
        numeric = central_difference(total, np.array([0.4]))[0]
        assert analytic == pytest.approx(numeric, rel=1e-4)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            get_family("gamma")

    def test_binomial_rejects_counts(self):
        design = build_design("y ~ x", Dataset.from_mapping({"y": [0.0, 2.0, 1.0], "x": [1.0, 2.0, 3.0]}))
        with pytest.raises(DataError):
            fit_glm(design, "binomial")


class TestPosteriorGradients:
    def test_log_posterior_gradient(self, logistic_design, rng):
        family = get_family("binomial")
        post = LogPosterior(logistic_design, family, default_glm_prior(logistic_design, family))
        theta = rng.normal(0.0, 0.5, post.q)
        numeric = central_difference(lambda t: float(post.log_density(t)[0]), theta)
        assert_allclose(post.grad(theta)[0], numeric, rtol=1e-5, atol=1e-5)

    def test_vb_objective_gradient(self, logistic_design, rng):
        family = get_family("binomial")
        post = LogPosterior(logistic_design, family, default_glm_prior(logistic_design, family))
        mode, cov = _laplace(post, BayesicsConfig())
        objective = VBObjective(post, mode, cov)
        params = rng.normal(0.0, 0.1, objective.initial().size)
        eps = rng.standard_normal((8, post.q))
        _, analytic = objective.value_and_grad(params, eps)
        numeric = central_difference(lambda p: objective.value_and_grad(p, eps)[0], params)
        assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6)


class TestFitGlm:
    def test_poisson_laplace_recovers_coefficients(self, poisson_design, sampler):
        fit = fit_glm(poisson_design, "poisson", method="laplace", sampler=sampler)
        coef = fit.coef()
        assert coef[INTERCEPT] == pytest.approx(0.5, abs=0.1)
        assert coef["x"] == pytest.approx(0.3, abs=0.1)

    def test_vb_close_to_laplace(self, logistic_design, sampler):
        laplace = fit_glm(logistic_design, "binomial", method="laplace", sampler=sampler)
        vb = fit_glm(logistic_design, "binomial", method="vb", sampler=sampler)
        assert_allclose(vb.approx.m, laplace.approx.m, atol=0.1)
        assert_allclose(vb.approx.sd, laplace.approx.sd, rtol=0.25)
        assert len(vb.approx.elbo_trace) > 0

    def test_importance_weights(self, poisson_design, sampler):
        fit = fit_glm(poisson_design, "poisson", method="importance", sampler=sampler)
        assert fit.ess > 100
        assert fit.weights.sum() == pytest.approx(1.0)
        assert fit.coef()["x"] == pytest.approx(0.3, abs=0.1)

    def test_ratio_scale_summary(self, logistic_design, sampler):
        fit = fit_glm(logistic_design, "binomial", method="laplace", sampler=sampler)
        rows = {s.label: s for s in fit.summary()}
        assert rows["gtrt"].post_mean > 1.0  # odds ratio
        lo, hi = rows["gtrt"].rope_bounds
        assert lo == pytest.approx(1 / 1.125) and hi == pytest.approx(1.125)
        link = {s.label: s for s in fit.summary(interpretable_scale=False)}
        assert link["gtrt"].post_mean == pytest.approx(fit.coef()["gtrt"])

    def test_intercept_only_all_failures(self, sampler):
        design = build_design("y ~ 1", Dataset.from_mapping({"y": [0.0] * 20}))
        fit = fit_glm(design, "binomial", method="laplace", sampler=sampler)
        assert fit.coef()[INTERCEPT] < -2.0
        odds = fit.summary()[0]
        assert odds.ci_upper < 1.0
        assert odds.prob_direction > 0.99

    def test_gaussian_reports_variance(self, rng, sampler):
        x = rng.standard_normal(200)
        frame = pd.DataFrame({"y": 1.0 + x + 0.5 * rng.standard_normal(200), "x": x})
        fit = fit_glm(build_design("y ~ x", Dataset.from_frame(frame)), "gaussian", method="laplace", sampler=sampler)
        rows = {s.label: s for s in fit.summary()}
        assert rows["sigma2"].prob_direction is None
        assert rows["sigma2"].post_mean == pytest.approx(0.25, rel=0.3)

    def test_negbinom_demo(self, sampler):
        design = build_design("outcome ~ x1 + x2 + x3 + time", negbinom_demo())
        fit = fit_glm(design, "negbinom", method="laplace", sampler=sampler)
        coef = fit.coef()
        assert coef["x1"] == pytest.approx(1.0, abs=0.35)
        assert coef["x3c"] == pytest.approx(2.0, abs=0.8)
        assert abs(coef["x2"]) < 0.35
        assert "size" in [s.label for s in fit.summary()]

    def test_offset(self, rng, sampler):
        exposure = rng.uniform(1.0, 10.0, 500)
        x = rng.standard_normal(500)
        y = rng.poisson(exposure * np.exp(0.2 + 0.5 * x))
        design = build_design("y ~ x", Dataset.from_frame(pd.DataFrame({"y": y, "x": x})))
        fit = fit_glm(design, "poisson", method="laplace", sampler=sampler, offset=np.log(exposure))
        assert fit.coef()[INTERCEPT] == pytest.approx(0.2, abs=0.1)

    def test_separated_factor_is_named(self, rng):
        g = rng.choice(["a", "b"], 60)
        y = (g == "b").astype(float)
        design = build_design("y ~ g", Dataset.from_frame(pd.DataFrame({"y": y, "g": g})))
        with pytest.raises(SeparationError, match="'gb'") as err:
            fit_glm(design, "binomial", method="laplace")
        assert err.value.label == "gb"

    def test_separated_numeric_covariate(self, rng):
        x = rng.standard_normal(80)
        z = rng.standard_normal(80)
        frame = pd.DataFrame({"y": (x > 0).astype(float), "x": x, "z": z})
        design = build_design("y ~ x + z", Dataset.from_frame(frame))
        assert separated_terms(design, "binomial") == ["x"]
        with pytest.raises(SeparationError, match="'x'"):
            fit_glm(design, "binomial", method="laplace")

    def test_empty_poisson_level_separates(self, rng):
        g = np.repeat(["a", "b", "c"], 40)
        y = np.where(g == "c", 0, rng.poisson(3.0, 120))
        design = build_design("y ~ g", Dataset.from_frame(pd.DataFrame({"y": y, "g": g})))
        assert separated_terms(design, "poisson") == ["gc"]

    def test_overlapping_data_not_separated(self, logistic_design, poisson_design):
        assert separated_terms(logistic_design, "binomial") == []
        assert separated_terms(poisson_design, "poisson") == []
        assert separated_terms(logistic_design, "gaussian") == []

    def test_offset_needs_count_family(self, logistic_design):
        with pytest.raises(DesignError, match="offsets"):
            fit_glm(logistic_design, "binomial", offset=np.zeros(logistic_design.n))

    def test_coefficient_bfs(self, logistic_design, sampler):
        fit = fit_glm(logistic_design, "binomial", method="laplace", sampler=sampler)
        bfs = glm_coefficient_bfs(fit)
        assert set(bfs) == {"x", "gtrt"}
        assert bfs["x"].value > 100


class TestGenerics:
    def test_bayesian_pvalue_well_specified(self, poisson_design, sampler):
        fit = fit_glm(poisson_design, "poisson", method="laplace", sampler=sampler)
        result = bayesian_pvalue(fit, n_rep=2000, sampler=sampler)
        assert result.n_rep == 2000
        assert 0.01 < result.p_value < 0.99
        assert len(result.pairs()) == 2000

    def test_pvalue_flags_overdispersion_across_seeds(self, sampler):
        poisson_extreme = negbinom_central = 0
        for seed in range(20):
            design = build_design("outcome ~ x1 + x2 + x3 + time", negbinom_demo(seed=seed))
            p_pois = bayesian_pvalue(fit_glm(design, "poisson", method="laplace", sampler=sampler), n_rep=1000, sampler=sampler)
            p_nb = bayesian_pvalue(fit_glm(design, "negbinom", method="laplace", sampler=sampler), n_rep=1000, sampler=sampler)
            poisson_extreme += not 0.05 < p_pois.p_value < 0.95
            negbinom_central += 0.1 < p_nb.p_value < 0.9
        assert poisson_extreme >= 18
        assert negbinom_central >= 18

    def test_information_criteria(self, poisson_design, sampler):
        fit = fit_glm(poisson_design, "poisson", method="laplace", sampler=sampler)
        ic = glm_information_criteria(fit, sampler)
        assert ic["BIC"] > ic["AIC"]
        assert 1.0 < ic["p_WAIC"] < 4.0

    def test_band_and_predict(self, poisson_design, sampler):
        fit = fit_glm(poisson_design, "poisson", method="laplace", sampler=sampler)
        band = glm_credible_band(fit, "x", sampler=sampler, grid_size=10)
        assert np.all(np.diff(band.center) > 0)
        assert np.all(band.lower <= band.center) and np.all(band.center <= band.upper)
        rows = predict(fit, {"x": [0.0]}, sampler=sampler)
        assert rows[0].post_mean == pytest.approx(np.exp(0.5), rel=0.1)
