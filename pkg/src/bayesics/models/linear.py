"""
Conjugate Bayesian linear regression and one-way ANOVA.

    β | σ² ~ N(μ, σ² V⁻¹),   σ² ~ IG(a/2, b/2)

Every posterior functional of the coefficients is a Student-t, so
summaries, Savage–Dickey Bayes factors, evidences and bands are exact.
Only quantities with no closed form (group differences, EPR, the WAIC
variance term) go through the sampler.
"""

import functools
import itertools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from scipy import linalg, special, stats

from bayesics.errors import DesignError, NumericalError, UserInputError
from bayesics.formula.design import DesignSpec, require_full_rank
from bayesics.inference.core import (
    KEEP_DROP,
    default_rope,
    epr_draws,
    summarize_closed_form,
    summarize_draws,
)
from bayesics.inference.elicit import find_invgamma_parms
from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.models.common import Band, band_grid, coefficient_rope, resolve_sampler
from bayesics.sampling.engine import AdaptiveDraws, AdaptiveSampler
from bayesics.sampling.schema import PrecisionTarget

logger = logging.getLogger(__name__)

PriorKind = Literal["zellner-g", "conjugate", "custom"]

# Intercept prior precision factor: prior SD of the intercept is 10σ.
INTERCEPT_PRECISION = 1.0 / 100.0
# 95% prior mass on a 1-SD covariate change moving E[y] by less than 5 s_y
CONJUGATE_Z = 1.959964
CONJUGATE_FACTOR = 5.0
# Draws for the WAIC variance term.
IC_DRAWS = 10_000


@functools.lru_cache(maxsize=1)
def _unit_r2_sigma_prior() -> tuple[float, float]:
    parms = find_invgamma_parms("r-squared", response_variance=1.0)
    return 2.0 * parms.shape, 2.0 * parms.rate


def default_sigma_prior(response_variance: float) -> tuple[float, float]:
    """(a, b) whose IG(a/2, b/2) puts 50% mass on R² in (0.1, 0.9)."""
    if not response_variance > 0:
        raise DesignError("the response is constant; its variance must be positive")
    a, b_unit = _unit_r2_sigma_prior()
    return a, b_unit * response_variance


@dataclass(frozen=True, eq=False)
class NIGPrior:
    mu: np.ndarray
    V: np.ndarray
    a: float
    b: float
    kind: PriorKind = "custom"
    g: float | None = None

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "V", V)
        if V.shape != (mu.size, mu.size):
            raise ValueError(f"V must be {mu.size}x{mu.size}, got {V.shape}")
        if not np.allclose(V, V.T, rtol=1e-10, atol=1e-12):
            raise ValueError("V must be symmetric")
        try:
            np.linalg.cholesky(V)
        except np.linalg.LinAlgError:
            raise ValueError("V must be positive definite") from None
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"a and b must be positive, got a={self.a}, b={self.b}")

    @cached_property
    def V_inv(self) -> np.ndarray:
        return linalg.cho_solve(linalg.cho_factor(self.V), np.eye(self.mu.size))

    def coef_marginal(self, j: int):
        scale = math.sqrt(self.b / self.a * self.V_inv[j, j])
        return stats.t(df=self.a, loc=self.mu[j], scale=scale)


@dataclass(frozen=True, eq=False)
class NIGPosterior:
    mu_n: np.ndarray
    V_n: np.ndarray
    a_n: float
    b_n: float

    @cached_property
    def _chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.V_n)

    @cached_property
    def V_n_inv(self) -> np.ndarray:
        return linalg.cho_solve((self._chol, True), np.eye(self.mu_n.size))

    @property
    def scale2(self) -> float:
        return self.b_n / self.a_n

    def coef_marginal(self, j: int):
        return stats.t(df=self.a_n, loc=self.mu_n[j], scale=math.sqrt(self.scale2 * self.V_n_inv[j, j]))

    def linear_marginal(self, x: np.ndarray, predictive: bool = False):
        """Law of xᵀβ, or of a new response at x when ``predictive``."""
        x = np.asarray(x, dtype=float)
        var = float(x @ self.V_n_inv @ x) + (1.0 if predictive else 0.0)
        return stats.t(df=self.a_n, loc=float(x @ self.mu_n), scale=math.sqrt(self.scale2 * var))

    def sigma2_marginal(self):
        return stats.invgamma(self.a_n / 2.0, scale=self.b_n / 2.0)

    def draw(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """iid (β, σ²) draws: shapes (size, p) and (size,)."""
        sigma2 = (self.b_n / 2.0) / rng.gamma(self.a_n / 2.0, size=size)
        z = rng.standard_normal((size, self.mu_n.size))
        offsets = linalg.solve_triangular(self._chol.T, z.T, lower=False).T
        return self.mu_n + np.sqrt(sigma2)[:, None] * offsets, sigma2


def nig_update(X: np.ndarray, y: np.ndarray, prior: NIGPrior) -> NIGPosterior:
    V_n = prior.V + X.T @ X
    try:
        cho = linalg.cho_factor(V_n)
    except linalg.LinAlgError:
        raise NumericalError("posterior precision V + XᵀX is not positive definite") from None
    mu_n = linalg.cho_solve(cho, prior.V @ prior.mu + X.T @ y)
    resid = y - X @ mu_n
    shift = mu_n - prior.mu
    # algebraically b + yᵀy + μᵀVμ − μ_nᵀV_nμ_n, without the cancellation
    b_n = prior.b + float(resid @ resid) + float(shift @ prior.V @ shift)
    return NIGPosterior(mu_n=mu_n, V_n=V_n, a_n=prior.a + y.size, b_n=b_n)


def nig_log_evidence(X: np.ndarray, y: np.ndarray, prior: NIGPrior, post: NIGPosterior | None = None) -> float:
    """log p(y) under the NIG prior (a multivariate-t density in y)."""
    post = post or nig_update(X, y, prior)
    n = y.size
    _, logdet_v = np.linalg.slogdet(prior.V)
    _, logdet_vn = np.linalg.slogdet(post.V_n)
    return (
        -0.5 * n * math.log(math.pi)
        + 0.5 * prior.a * math.log(prior.b)
        - 0.5 * post.a_n * math.log(post.b_n)
        + special.gammaln(post.a_n / 2.0)
        - special.gammaln(prior.a / 2.0)
        + 0.5 * (logdet_v - logdet_vn)
    )


def zellner_g_prior(design: DesignSpec, g: float | None = None) -> NIGPrior:
    """g-prior on centred covariates (g = n by default), vague independent intercept."""
    y = design.y
    n, p = design.X.shape
    g = float(n) if g is None else float(g)
    a, b = default_sigma_prior(float(np.var(y, ddof=1)))
    V = np.zeros((p, p))
    V[0, 0] = INTERCEPT_PRECISION
    if p > 1:
        Xc = design.X[:, 1:] - design.X[:, 1:].mean(axis=0)
        V[1:, 1:] = Xc.T @ Xc / g
    mu = np.zeros(p)
    mu[0] = float(np.mean(y))
    return NIGPrior(mu=mu, V=V, a=a, b=b, kind="zellner-g", g=g)


def conjugate_prior(design: DesignSpec) -> NIGPrior:
    """Independent coefficients with prior SD 5·s_y / (1.96·s_xj) at σ = s_y."""
    y = design.y
    p = design.p
    a, b = default_sigma_prior(float(np.var(y, ddof=1)))
    diag = np.empty(p)
    diag[0] = INTERCEPT_PRECISION
    for j in range(1, p):
        diag[j] = (CONJUGATE_Z * design.sds[j] / CONJUGATE_FACTOR) ** 2
    mu = np.zeros(p)
    mu[0] = float(np.mean(y))
    return NIGPrior(mu=mu, V=np.diag(diag), a=a, b=b, kind="conjugate")


def default_prior(design: DesignSpec, kind: str = "zellner-g") -> NIGPrior:
    if kind in ("zellner", "zellner-g"):
        return zellner_g_prior(design)
    if kind == "conjugate":
        return conjugate_prior(design)
    raise UserInputError(f"unknown prior '{kind}'; expected zellner or conjugate")


def null_prior(prior: NIGPrior) -> NIGPrior:
    """Intercept-only prior with the same (a, b)."""
    return NIGPrior(mu=prior.mu[:1], V=prior.V[:1, :1], a=prior.a, b=prior.b, kind=prior.kind, g=prior.g)


@dataclass(frozen=True, eq=False)
class LinearFit:
    design: DesignSpec
    prior: NIGPrior
    posterior: NIGPosterior
    log_marginal_likelihood: float
    ci_level: float = 0.95
    rope_overrides: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.design.labels

    @cached_property
    def fitted(self) -> np.ndarray:
        return self.design.X @ self.posterior.mu_n

    @cached_property
    def residuals(self) -> np.ndarray:
        return self.design.y - self.fitted

    @property
    def response_sd(self) -> float:
        return float(np.std(self.design.y, ddof=1))

    def coef(self) -> dict[str, float]:
        return dict(zip(self.labels, self.posterior.mu_n.tolist()))

    def vcov(self) -> np.ndarray:
        post = self.posterior
        if post.a_n <= 2:
            raise NumericalError("posterior covariance needs a_n > 2")
        return post.b_n / (post.a_n - 2.0) * post.V_n_inv

    def credint(self, ci_level: float | None = None) -> dict[str, tuple[float, float]]:
        level = ci_level or self.ci_level
        half = (1.0 - level) / 2.0
        out = {}
        for j, label in enumerate(self.labels):
            lo, hi = self.posterior.coef_marginal(j).ppf([half, 1.0 - half])
            out[label] = (float(lo), float(hi))
        return out

    def rope_for(self, j: int) -> tuple[float, float] | None:
        label = self.labels[j]
        if label in self.rope_overrides:
            return self.rope_overrides[label]
        return coefficient_rope(self.design, j, "identity", self.response_sd)

    def summary(self) -> list[InferenceSummary]:
        bfs, _ = coefficient_bayes_factors(self)
        rows = []
        for j, label in enumerate(self.labels):
            s = summarize_closed_form(
                self.posterior.coef_marginal(j), self.ci_level, rope=self.rope_for(j), label=label
            )
            if label in bfs:
                s = s.with_bayes_factor(bfs[label])
            rows.append(s)
        rows.append(
            summarize_closed_form(self.posterior.sigma2_marginal(), self.ci_level, null_value=None, label="sigma2")
        )
        return rows


def fit_lm(
    design: DesignSpec,
    prior: NIGPrior | str | None = None,
    ci_level: float = 0.95,
    rope_overrides: Mapping[str, tuple[float, float]] | None = None,
) -> LinearFit:
    if design.y is None:
        raise DesignError("linear models need a single numeric response")
    require_full_rank(design.X, design.labels)
    if prior is None or isinstance(prior, str):
        if design.n <= design.p:
            raise DesignError(f"default priors need more rows ({design.n}) than coefficients ({design.p})")
        prior = default_prior(design, prior or "zellner-g")
    if prior.mu.size != design.p:
        raise DesignError(f"prior has {prior.mu.size} coefficients, design has {design.p}")

    X, y = design.X, design.y
    post = nig_update(X, y, prior)
    if not post.b_n > 0:
        jitter = 1e-8 * float(np.trace(prior.V)) / prior.mu.size
        logger.warning("Non-positive posterior scale b_n=%.3g; refitting with jitter %.3g on V", post.b_n, jitter)
        prior = NIGPrior(prior.mu, prior.V + jitter * np.eye(prior.mu.size), prior.a, prior.b, prior.kind, prior.g)
        post = nig_update(X, y, prior)
        if not post.b_n > 0:
            raise NumericalError("posterior scale b_n is not positive even after jitter")

    log_ml = nig_log_evidence(X, y, prior, post)
    if not math.isfinite(log_ml):
        raise NumericalError("log marginal likelihood is not finite")
    logger.debug("lm %s: log evidence %.6g", design.formula, log_ml)
    return LinearFit(
        design=design,
        prior=prior,
        posterior=post,
        log_marginal_likelihood=log_ml,
        ci_level=ci_level,
        rope_overrides=dict(rope_overrides or {}),
    )


def savage_dickey(prior_dist, post_dist, null_value: float = 0.0) -> BayesFactor | None:
    """BF for keeping a coefficient: prior over posterior density at the null."""
    log_prior = float(prior_dist.logpdf(null_value))
    log_post = float(post_dist.logpdf(null_value))
    if not math.isfinite(log_prior) or not math.isfinite(log_post):
        return None
    return BayesFactor.from_log(log_prior - log_post, *KEEP_DROP)


def coefficient_bayes_factors(fit: LinearFit) -> tuple[dict[str, BayesFactor], BayesFactor | None]:
    """Per-coefficient Savage–Dickey BFs and the full-vs-null evidence ratio."""
    bfs: dict[str, BayesFactor] = {}
    for j, label in enumerate(fit.labels):
        if fit.design.kinds[j] == "intercept":
            continue
        bf = savage_dickey(fit.prior.coef_marginal(j), fit.posterior.coef_marginal(j))
        if bf is None:
            logger.warning("Savage–Dickey ratio undefined for '%s' (zero density at 0)", label)
            continue
        bfs[label] = bf

    if fit.design.p == 1:
        return bfs, None
    null = null_prior(fit.prior)
    log_null = nig_log_evidence(fit.design.X[:, :1], fit.design.y, null)
    full_vs_null = BayesFactor.from_log(fit.log_marginal_likelihood - log_null, "full model", "null model")
    return bfs, full_vs_null


def information_criteria(fit: LinearFit, sampler: AdaptiveSampler | None = None) -> dict[str, float]:
    """AIC, BIC, DIC (closed form) and WAIC (closed-form lppd, sampled variance)."""
    X, y = fit.design.X, fit.design.y
    n, p = X.shape
    post = fit.posterior

    beta_hat, *_ = np.linalg.lstsq(X, y, rcond=None)
    rss = float(np.sum((y - X @ beta_hat) ** 2))
    sigma2_hat = max(rss / n, np.finfo(float).tiny)
    max_loglik = -0.5 * n * (math.log(2.0 * math.pi * sigma2_hat) + 1.0)
    k = p + 1

    # DIC at θ̄ = posterior means of β and σ²
    alpha, beta = post.a_n / 2.0, post.b_n / 2.0
    sigma2_bar = beta / (alpha - 1.0) if alpha > 1.0 else post.b_n / post.a_n
    r = fit.residuals
    log_p_bar = float(np.sum(stats.norm.logpdf(y, fit.fitted, math.sqrt(sigma2_bar))))
    trace_term = float(np.einsum("ij,jk,ik->", X, post.V_n_inv, X))
    expected_log_p = (
        -0.5 * n * math.log(2.0 * math.pi)
        - 0.5 * n * (math.log(beta) - special.digamma(alpha))
        - 0.5 * (float(r @ r) * alpha / beta + trace_term)
    )
    p_dic = 2.0 * (log_p_bar - expected_log_p)

    # WAIC: E p(y_i | θ) is the posterior predictive t density
    lev = np.einsum("ij,jk,ik->i", X, post.V_n_inv, X)
    pred_scale = np.sqrt(post.scale2 * (1.0 + lev))
    lppd = float(np.sum(stats.t.logpdf(y, df=post.a_n, loc=fit.fitted, scale=pred_scale)))

    sampler = resolve_sampler(sampler)

    def loglik_draws(rng: np.random.Generator, size: int) -> np.ndarray:
        beta_d, sigma2_d = post.draw(rng, size)
        mu = beta_d @ X.T
        return stats.norm.logpdf(y[None, :], mu, np.sqrt(sigma2_d)[:, None])

    ll = sampler.draw(loglik_draws, IC_DRAWS, batch_size=max(1, min(IC_DRAWS, 2_000_000 // max(n, 1))))
    p_waic = float(np.sum(np.var(ll, axis=0, ddof=1)))

    return {
        "AIC": -2.0 * max_loglik + 2.0 * k,
        "BIC": -2.0 * max_loglik + k * math.log(n),
        "DIC": -2.0 * log_p_bar + 2.0 * p_dic,
        "p_DIC": p_dic,
        "WAIC": -2.0 * (lppd - p_waic),
        "p_WAIC": p_waic,
    }


def diagnostics_data(fit: LinearFit) -> dict[str, list[float]]:
    """Residual-vs-fitted pairs and normal QQ pairs of standardised residuals."""
    resid = fit.residuals
    sd = float(np.std(resid, ddof=1)) if resid.size > 1 else 0.0
    standardised = resid / sd if sd > 0 else np.zeros_like(resid)
    (theoretical, ordered), _ = stats.probplot(standardised, dist="norm")
    return {
        "fitted": fit.fitted.tolist(),
        "residuals": resid.tolist(),
        "qq_theoretical": np.asarray(theoretical).tolist(),
        "qq_sample": np.asarray(ordered).tolist(),
    }


def credible_band(
    fit: LinearFit,
    variable: str,
    exemplar: Mapping[str, float | str] | None = None,
    kind: Literal["credible", "prediction"] = "credible",
    ci_level: float | None = None,
    grid_size: int = 100,
) -> Band:
    """Pointwise t band for the mean (or a new response) along ``variable``."""
    level = ci_level or fit.ci_level
    x, rows, settings = band_grid(fit.design, variable, exemplar, grid_size)
    half = (1.0 - level) / 2.0
    center, lower, upper = (np.empty(len(x)) for _ in range(3))
    for i, row in enumerate(rows):
        dist = fit.posterior.linear_marginal(row, predictive=(kind == "prediction"))
        center[i] = dist.mean()
        lower[i], upper[i] = dist.ppf([half, 1.0 - half])
    return Band(variable, x, center, lower, upper, level, kind, settings)


def get_posterior_draws(fit: LinearFit, n: int, sampler: AdaptiveSampler | None = None) -> tuple[np.ndarray, tuple[str, ...]]:
    """n iid draws of (β, σ²); columns labelled by coefficient, then "sigma2"."""

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        beta, sigma2 = fit.posterior.draw(rng, size)
        return np.column_stack([beta, sigma2])

    draws = resolve_sampler(sampler).draw(draw_fn, n)
    return draws, (*fit.labels, "sigma2")


def heteroscedasticity_bf(groups: Sequence[np.ndarray] | Mapping[str, np.ndarray]) -> BayesFactor:
    """Evidence for one shared variance against one variance per group."""
    samples = list(groups.values()) if isinstance(groups, Mapping) else list(groups)
    samples = [np.asarray(g, dtype=float).ravel() for g in samples]
    if len(samples) < 2:
        raise UserInputError("need at least two groups")
    if any(g.size < 2 for g in samples):
        raise UserInputError("every group needs at least two observations")
    y = np.concatenate(samples)
    a, b = default_sigma_prior(float(np.var(y, ddof=1)))
    center = float(np.mean(y))

    k = len(samples)
    X = np.zeros((y.size, k))
    start = 0
    for j, g in enumerate(samples):
        X[start : start + g.size, j] = 1.0
        start += g.size
    shared = NIGPrior(np.full(k, center), INTERCEPT_PRECISION * np.eye(k), a, b)
    log_shared = nig_log_evidence(X, y, shared)

    single = NIGPrior(np.array([center]), np.array([[INTERCEPT_PRECISION]]), a, b)
    log_separate = sum(nig_log_evidence(np.ones((g.size, 1)), g, single) for g in samples)
    return BayesFactor.from_log(log_shared - log_separate, "equal variances", "unequal variances")


# One-way ANOVA --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupPosteriors:
    """Independent normal–inverse-gamma posteriors per group (separate variances)."""

    levels: tuple[str, ...]
    posteriors: tuple[NIGPosterior, ...]
    sizes: tuple[int, ...]
    prior: NIGPrior  # shared by every group
    pooled_sd: float

    def mean_marginal(self, g: int):
        return self.posteriors[g].coef_marginal(0)

    def draw(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        mus, sigma2s = [], []
        for post in self.posteriors:
            beta, sigma2 = post.draw(rng, size)
            mus.append(beta[:, 0])
            sigma2s.append(sigma2)
        return np.column_stack(mus), np.column_stack(sigma2s)


def group_posteriors(samples: Mapping[str, np.ndarray]) -> GroupPosteriors:
    levels = tuple(samples)
    data = [np.asarray(samples[lv], dtype=float).ravel() for lv in levels]
    for lv, g in zip(levels, data):
        if g.size < 2:
            raise UserInputError(f"group '{lv}' has {g.size} observation(s); need at least two")
    y = np.concatenate(data)
    a, b = default_sigma_prior(float(np.var(y, ddof=1)))
    prior = NIGPrior(np.array([float(np.mean(y))]), np.array([[INTERCEPT_PRECISION]]), a, b)
    posts = tuple(nig_update(np.ones((g.size, 1)), g, prior) for g in data)
    dof = sum(g.size - 1 for g in data)
    pooled = math.sqrt(sum((g.size - 1) * float(np.var(g, ddof=1)) for g in data) / dof)
    return GroupPosteriors(levels, posts, tuple(g.size for g in data), prior, pooled)


def shared_vs_separate_bf(samples: Mapping[str, np.ndarray], groups: GroupPosteriors) -> BayesFactor:
    """Separate means and variances against one mean and one variance."""
    data = [np.asarray(samples[lv], dtype=float).ravel() for lv in groups.levels]
    log_sep = sum(nig_log_evidence(np.ones((g.size, 1)), g, groups.prior) for g in data)
    y = np.concatenate(data)
    log_null = nig_log_evidence(np.ones((y.size, 1)), y, groups.prior)
    return BayesFactor.from_log(log_sep - log_null, "full model", "null model")


@dataclass(frozen=True, eq=False)
class AovFit:
    factor: str
    response: str
    groups: GroupPosteriors
    level_means: list[InferenceSummary]
    level_variances: list[InferenceSummary]
    differences: list[InferenceSummary]
    eprs: list[InferenceSummary]
    full_vs_null: BayesFactor
    draws: AdaptiveDraws
    ci_level: float

    def coef(self) -> dict[str, float]:
        return {s.label: s.post_mean for s in self.level_means}

    def credint(self) -> dict[str, tuple[float, float]]:
        return {s.label: (s.ci_lower, s.ci_upper) for s in self.level_means}

    def vcov(self) -> np.ndarray:
        return np.diag([float(self.groups.mean_marginal(g).var()) for g in range(len(self.groups.levels))])

    def summary(self) -> list[InferenceSummary]:
        return [*self.level_means, *self.level_variances, *self.differences, *self.eprs]


def pairwise_labels(levels: Sequence[str]) -> tuple[list[tuple[int, int]], list[str], list[str]]:
    pairs = list(itertools.combinations(range(len(levels)), 2))
    diffs = [f"{levels[g]} - {levels[h]}" for g, h in pairs]
    eprs = [f"EPR({levels[g]} > {levels[h]})" for g, h in pairs]
    return pairs, diffs, eprs


def compare_groups(
    samples: Mapping[str, np.ndarray],
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] | None = None,
    label_prefix: str = "",
) -> tuple[GroupPosteriors, list[InferenceSummary], list[InferenceSummary], list[InferenceSummary], list[InferenceSummary], AdaptiveDraws]:
    target = target or PrecisionTarget()
    level = target.ci_level
    groups = group_posteriors(samples)
    levels = groups.levels

    means = [
        summarize_closed_form(groups.mean_marginal(g), level, null_value=None, label=f"{label_prefix}{lv}")
        for g, lv in enumerate(levels)
    ]
    variances = [
        summarize_closed_form(post.sigma2_marginal(), level, null_value=None, label=f"Var {label_prefix}{lv}")
        for post, lv in zip(groups.posteriors, levels)
    ]

    pairs, diff_labels, epr_labels = pairwise_labels(levels)

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        mu, sigma2 = groups.draw(rng, size)
        cols = [mu[:, g] - mu[:, h] for g, h in pairs]
        cols += [epr_draws(mu[:, g], sigma2[:, g], mu[:, h], sigma2[:, h]) for g, h in pairs]
        return np.column_stack(cols)

    draws = resolve_sampler(sampler).run(draw_fn, diff_labels + epr_labels, target)
    rope = rope or default_rope("mean-difference", response_sd=groups.pooled_sd)
    diffs = [summarize_draws(draws.column(lab), level, rope=rope, label=lab) for lab in diff_labels]
    eprs = [summarize_draws(draws.column(lab), level, null_value=0.5, label=lab) for lab in epr_labels]
    return groups, means, variances, diffs, eprs, draws


def fit_aov(
    design: DesignSpec,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] | None = None,
) -> AovFit:
    """One-way ANOVA with a separate mean and variance per factor level."""
    if design.y is None:
        raise DesignError("ANOVA needs a numeric response")
    if len(design.terms) != 1 or design.terms[0] not in design.factor_levels:
        raise DesignError("one-way ANOVA needs exactly one categorical term")
    factor = design.terms[0]
    values = design.data[factor].values
    samples = {lv: design.y[values == lv] for lv in design.factor_levels[factor]}

    target = target or PrecisionTarget()
    groups, means, variances, diffs, eprs, draws = compare_groups(samples, sampler, target, rope)
    return AovFit(
        factor=factor,
        response=design.formula.response,
        groups=groups,
        level_means=means,
        level_variances=variances,
        differences=diffs,
        eprs=eprs,
        full_vs_null=shared_vs_separate_bf(samples, groups),
        draws=draws,
        ci_level=target.ci_level,
    )
