"""
One- and two-sample analyses on conjugate posteriors.

Closed forms wherever they exist; ratios, differences and EPR are drawn
through the adaptive sampler.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from bayesics.errors import DesignError, UserInputError
from bayesics.formula.design import DesignSpec
from bayesics.inference.core import (
    SMALL_RATIO_HALF_WIDTH,
    default_rope,
    epr_draws,
    exp_bounds,
    summarize_closed_form,
    summarize_draws,
)
from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.models.common import resolve_sampler
from bayesics.models.linear import (
    INTERCEPT_PRECISION,
    NIGPrior,
    compare_groups,
    default_sigma_prior,
    nig_log_evidence,
    nig_update,
    savage_dickey,
    shared_vs_separate_bf,
)
from bayesics.sampling.engine import AdaptiveDraws, AdaptiveSampler
from bayesics.sampling.schema import PrecisionTarget

logger = logging.getLogger(__name__)

PRIOR_SHAPES = {"jeffreys": (0.5, 0.5), "uniform": (1.0, 1.0)}
RATIO_ROPE = exp_bounds((-SMALL_RATIO_HALF_WIDTH, SMALL_RATIO_HALF_WIDTH))
SIGN_ROPE = (0.45, 0.55)


@dataclass(frozen=True, eq=False)
class SimpleResult:
    analysis: str
    summaries: list[InferenceSummary]
    bayes_factors: dict[str, BayesFactor] = field(default_factory=dict)
    draws: AdaptiveDraws | None = None
    extras: dict = field(default_factory=dict)

    def summary(self) -> list[InferenceSummary]:
        return self.summaries

    def get(self, label: str) -> InferenceSummary:
        for s in self.summaries:
            if s.label == label:
                return s
        raise KeyError(label)


def _shapes(prior: str | tuple[float, float]) -> tuple[float, float]:
    if isinstance(prior, str):
        try:
            return PRIOR_SHAPES[prior]
        except KeyError:
            raise UserInputError(f"unknown prior '{prior}'; expected jeffreys, uniform or (a, b)") from None
    a, b = float(prior[0]), float(prior[1])
    if not (a > 0 and b > 0):
        raise UserInputError("beta prior shapes must be positive")
    return a, b


def _qq_pairs(values: np.ndarray) -> dict[str, list[float]]:
    sd = float(np.std(values, ddof=1))
    z = (values - np.mean(values)) / sd if sd > 0 else np.zeros_like(values)
    (theoretical, ordered), _ = stats.probplot(z, dist="norm")
    return {"qq_theoretical": np.asarray(theoretical).tolist(), "qq_sample": np.asarray(ordered).tolist()}


# t-test -----------------------------------------------------------------------


def t_test(
    x: Sequence[float],
    y: Sequence[float] | None = None,
    mu: float = 0.0,
    labels: tuple[str, str] = ("x", "y"),
    var_equal: bool = False,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] | None = None,
) -> SimpleResult:
    """Posterior for one mean (against ``mu``) or the difference of two means.

    Two samples get separate variances unless ``var_equal``; the difference
    is labels[0] minus labels[1].
    """
    target = target or PrecisionTarget()
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise UserInputError(f"group '{labels[0]}' needs at least two observations")
    if y is None:
        return _one_sample_t(x, mu, labels[0], target, rope)

    y = np.asarray(y, dtype=float).ravel()
    if y.size < 2:
        raise UserInputError(f"group '{labels[1]}' needs at least two observations")
    samples = {labels[0]: x, labels[1]: y}
    if var_equal:
        return _pooled_t(samples, labels, resolve_sampler(sampler), target, rope)

    groups, means, variances, diffs, eprs, draws = compare_groups(samples, sampler, target, rope)
    bf = shared_vs_separate_bf(samples, groups)
    diagnostics = {lv: {**_qq_pairs(v), "sd": float(np.std(v, ddof=1))} for lv, v in samples.items()}
    return SimpleResult(
        analysis="ttest",
        summaries=[*means, *variances, *diffs, *eprs],
        bayes_factors={"full vs null": bf},
        draws=draws,
        extras={"diagnostics": diagnostics, "variance_model": "unequal"},
    )


def t_test_design(design: DesignSpec, **kwargs) -> SimpleResult:
    """Two-sample t-test from a ``y ~ group`` design (or one-sample from ``y ~ 1``)."""
    if design.y is None:
        raise DesignError("the t-test needs a numeric response")
    if not design.terms:
        return t_test(design.y, **kwargs)
    term = design.terms[0]
    if len(design.terms) != 1 or term not in design.factor_levels or len(design.factor_levels[term]) != 2:
        raise DesignError("the two-sample t-test needs exactly one two-level factor")
    first, second = design.factor_levels[term]
    values = design.data[term].values
    return t_test(design.y[values == first], design.y[values == second], labels=(first, second), **kwargs)


def _one_sample_t(
    x: np.ndarray,
    mu: float,
    label: str,
    target: PrecisionTarget,
    rope: tuple[float, float] | None,
) -> SimpleResult:
    a, b = default_sigma_prior(float(np.var(x, ddof=1)))
    prior = NIGPrior(np.array([mu]), np.array([[INTERCEPT_PRECISION]]), a, b)
    post = nig_update(np.ones((x.size, 1)), x, prior)
    if rope is None:
        half = default_rope("mean-difference", response_sd=float(np.std(x, ddof=1)))[1]
        rope = (mu - half, mu + half)
    mean = summarize_closed_form(post.coef_marginal(0), target.ci_level, rope=rope, null_value=mu, label=f"mean {label}")
    bf = savage_dickey(prior.coef_marginal(0), post.coef_marginal(0), null_value=mu)
    if bf is not None:
        mean = mean.with_bayes_factor(bf)
    var = summarize_closed_form(post.sigma2_marginal(), target.ci_level, null_value=None, label=f"Var {label}")
    return SimpleResult(
        analysis="ttest",
        summaries=[mean, var],
        bayes_factors={f"mean != {mu:g}": bf} if bf is not None else {},
        extras={"diagnostics": {label: _qq_pairs(x)}, "null_mean": mu},
    )


def _pooled_t(
    samples: dict[str, np.ndarray],
    labels: tuple[str, str],
    sampler: AdaptiveSampler,
    target: PrecisionTarget,
    rope: tuple[float, float] | None,
) -> SimpleResult:
    x, y = samples[labels[0]], samples[labels[1]]
    both = np.concatenate([x, y])
    a, b = default_sigma_prior(float(np.var(both, ddof=1)))
    center = float(np.mean(both))
    X = np.zeros((both.size, 2))
    X[: x.size, 0] = 1.0
    X[x.size :, 1] = 1.0
    prior = NIGPrior(np.full(2, center), INTERCEPT_PRECISION * np.eye(2), a, b)
    post = nig_update(X, both, prior)

    pooled = math.sqrt(((x.size - 1) * np.var(x, ddof=1) + (y.size - 1) * np.var(y, ddof=1)) / (both.size - 2))
    rope = rope or default_rope("mean-difference", response_sd=pooled)
    contrast = np.array([1.0, -1.0])
    diff_label = f"{labels[0]} - {labels[1]}"
    summaries = [
        summarize_closed_form(post.coef_marginal(0), target.ci_level, null_value=None, label=labels[0]),
        summarize_closed_form(post.coef_marginal(1), target.ci_level, null_value=None, label=labels[1]),
        summarize_closed_form(post.sigma2_marginal(), target.ci_level, null_value=None, label="Var (pooled)"),
        summarize_closed_form(post.linear_marginal(contrast), target.ci_level, rope=rope, label=diff_label),
    ]
    epr_label = f"EPR({labels[0]} > {labels[1]})"

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        beta, sigma2 = post.draw(rng, size)
        return epr_draws(beta[:, 0], sigma2, beta[:, 1], sigma2)

    draws = sampler.run(draw_fn, [epr_label], target)
    summaries.append(summarize_draws(draws.column(epr_label), target.ci_level, null_value=0.5, label=epr_label))

    # one mean against two, both sharing the variance and the hyperpriors
    null_prior = NIGPrior(np.array([center]), np.array([[INTERCEPT_PRECISION]]), a, b)
    log_bf = nig_log_evidence(X, both, prior, post) - nig_log_evidence(np.ones((both.size, 1)), both, null_prior)
    diagnostics = {lv: {**_qq_pairs(v), "sd": float(np.std(v, ddof=1))} for lv, v in samples.items()}
    return SimpleResult(
        analysis="ttest",
        summaries=summaries,
        bayes_factors={"full vs null": BayesFactor.from_log(log_bf, "full model", "null model")},
        draws=draws,
        extras={"diagnostics": diagnostics, "variance_model": "equal"},
    )


# proportions --------------------------------------------------------------------


def _beta_binomial_log_ml(y: float, n: float, a: float, b: float) -> float:
    # binomial coefficients cancel in every ratio built from these
    return float(special.betaln(y + a, n - y + b) - special.betaln(a, b))


def prop_test(
    successes: Sequence[int] | int,
    trials: Sequence[int] | int,
    prior: str | tuple[float, float] = "jeffreys",
    labels: Sequence[str] | None = None,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] | None = None,
) -> SimpleResult:
    """Beta posteriors for one or two proportions; odds ratio and difference for two."""
    target = target or PrecisionTarget()
    ys = np.atleast_1d(np.asarray(successes, dtype=float))
    ns = np.atleast_1d(np.asarray(trials, dtype=float))
    if ys.shape != ns.shape or ys.size not in (1, 2):
        raise UserInputError("give one or two (successes, trials) pairs")
    if np.any(ns <= 0):
        raise UserInputError("trials must be positive")
    if np.any(ys < 0) or np.any(ys > ns):
        raise UserInputError("successes must lie between 0 and trials")
    a0, b0 = _shapes(prior)
    labels = list(labels or (["p"] if ys.size == 1 else ["p1", "p2"]))

    posts = [stats.beta(a0 + y, b0 + n - y) for y, n in zip(ys, ns)]
    summaries = [
        summarize_closed_form(post, target.ci_level, null_value=0.5, label=lab) for post, lab in zip(posts, labels)
    ]
    if ys.size == 1:
        return SimpleResult("prop", summaries, extras={"prior_shapes": [a0, b0]})

    or_label = f"OR({labels[0]} / {labels[1]})"
    diff_label = f"{labels[0]} - {labels[1]}"
    shape = [(a0 + y, b0 + n - y) for y, n in zip(ys, ns)]

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        p1 = rng.beta(*shape[0], size=size)
        p2 = rng.beta(*shape[1], size=size)
        odds_ratio = (p1 / (1.0 - p1)) / (p2 / (1.0 - p2))
        return np.column_stack([odds_ratio, p1 - p2])

    draws = resolve_sampler(sampler).run(draw_fn, [or_label, diff_label], target)
    summaries.append(
        summarize_draws(draws.column(or_label), target.ci_level, rope=rope or RATIO_ROPE, null_value=1.0, label=or_label)
    )
    summaries.append(summarize_draws(draws.column(diff_label), target.ci_level, label=diff_label))

    log_separate = sum(_beta_binomial_log_ml(y, n, a0, b0) for y, n in zip(ys, ns))
    log_common = _beta_binomial_log_ml(ys.sum(), ns.sum(), a0, b0)
    bf = BayesFactor.from_log(log_separate - log_common, "different proportions", "equal proportions")
    return SimpleResult("prop", summaries, {"different vs equal": bf}, draws, extras={"prior_shapes": [a0, b0]})


# Poisson rates ------------------------------------------------------------------


def poisson_test(
    counts: Sequence[float] | float,
    offsets: Sequence[float] | float | None = None,
    prior_shapes: tuple[float, float] = (0.5, 0.0),
    labels: Sequence[str] | None = None,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] | None = None,
) -> SimpleResult:
    """Gamma(a₀ + y, b₀ + ω) posteriors for one or two rates; rate ratio for two."""
    target = target or PrecisionTarget()
    ys = np.atleast_1d(np.asarray(counts, dtype=float))
    ws = np.ones_like(ys) if offsets is None else np.atleast_1d(np.asarray(offsets, dtype=float))
    if ys.shape != ws.shape or ys.size not in (1, 2):
        raise UserInputError("give one or two counts with matching offsets")
    if np.any(ys < 0):
        raise UserInputError("counts must be non-negative")
    if np.any(ws <= 0):
        raise UserInputError("offsets must be positive")
    a0, b0 = float(prior_shapes[0]), float(prior_shapes[1])
    if not (a0 > 0 and b0 >= 0):
        raise UserInputError("prior shape must be positive and prior rate non-negative")
    labels = list(labels or (["rate"] if ys.size == 1 else ["rate1", "rate2"]))

    shapes = [(a0 + y, b0 + w) for y, w in zip(ys, ws)]
    summaries = [
        summarize_closed_form(stats.gamma(sh, scale=1.0 / rt), target.ci_level, null_value=None, label=lab)
        for (sh, rt), lab in zip(shapes, labels)
    ]
    extras = {"prior_shapes": [a0, b0], "offsets": ws.tolist()}
    if ys.size == 1:
        return SimpleResult("poisson", summaries, extras=extras)

    ratio_label = f"{labels[0]} / {labels[1]}"

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        lam1 = rng.gamma(shapes[0][0], 1.0 / shapes[0][1], size=size)
        lam2 = rng.gamma(shapes[1][0], 1.0 / shapes[1][1], size=size)
        return lam1 / lam2

    draws = resolve_sampler(sampler).run(draw_fn, [ratio_label], target)
    summaries.append(
        summarize_draws(draws.column(ratio_label), target.ci_level, rope=rope or RATIO_ROPE, null_value=1.0, label=ratio_label)
    )
    return SimpleResult("poisson", summaries, draws=draws, extras=extras)


# sign test ------------------------------------------------------------------------


def sign_test(
    x: Sequence[float],
    y: Sequence[float] | None = None,
    prior_shapes: tuple[float, float] = (1.0, 1.0),
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] = SIGN_ROPE,
) -> SimpleResult:
    """Beta posterior on Pr(difference > 0); zero differences are dropped."""
    target = target or PrecisionTarget()
    x = np.asarray(x, dtype=float).ravel()
    if y is not None:
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != x.shape:
            raise UserInputError("paired vectors must have equal length")
        x = x - y
    zeros = int(np.sum(x == 0))
    if zeros == x.size:
        raise UserInputError("all differences are zero")
    if zeros:
        logger.warning("Dropped %d zero difference(s)", zeros)
    positive = int(np.sum(x > 0))
    negative = int(np.sum(x < 0))
    post = stats.beta(prior_shapes[0] + positive, prior_shapes[1] + negative)
    s = summarize_closed_form(post, target.ci_level, rope=rope, null_value=0.5, label="Pr(positive)")
    return SimpleResult(
        "sign",
        [s],
        extras={
            "positive": positive,
            "negative": negative,
            "zeros_dropped": zeros,
            "prob_greater_half": float(post.sf(0.5)),
            "posterior_shapes": [float(post.args[0]), float(post.args[1])],
        },
    )


# contingency tables ---------------------------------------------------------------


def _dirichlet_log_ml(counts: np.ndarray) -> float:
    """log marginal likelihood of multinomial counts under Dirichlet(1), coefficient omitted."""
    k = counts.size
    total = counts.sum()
    return float(special.gammaln(k) - special.gammaln(total + k) + np.sum(special.gammaln(counts + 1.0)))


def chisq_test(table: Sequence[Sequence[float]], target: PrecisionTarget | None = None) -> SimpleResult:
    """Independence in an r×c table, joint multinomial sampling with Dirichlet(1) priors."""
    target = target or PrecisionTarget()
    counts = np.asarray(table, dtype=float)
    if counts.ndim != 2 or min(counts.shape) < 2:
        raise UserInputError("need a table with at least two rows and two columns")
    if np.any(counts < 0):
        raise UserInputError("counts must be non-negative")
    total = counts.sum()
    if not total > 0:
        raise UserInputError("table is empty")

    log_saturated = _dirichlet_log_ml(counts.ravel())
    log_independent = _dirichlet_log_ml(counts.sum(axis=1)) + _dirichlet_log_ml(counts.sum(axis=0))
    bf = BayesFactor.from_log(log_independent - log_saturated, "independence", "dependence")

    r, c = counts.shape
    alpha_total = total + r * c
    summaries = []
    for i in range(r):
        for j in range(c):
            cell = stats.beta(counts[i, j] + 1.0, alpha_total - counts[i, j] - 1.0)
            summaries.append(summarize_closed_form(cell, target.ci_level, null_value=None, label=f"p[{i},{j}]"))
    return SimpleResult(
        "chisq",
        summaries,
        {"independence vs dependence": bf},
        extras={"sampling_scheme": "joint multinomial", "prior": "Dirichlet(1)"},
    )


def case_control(
    case_exposed: int,
    case_unexposed: int,
    control_exposed: int,
    control_unexposed: int,
    prior: str | tuple[float, float] = "jeffreys",
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    rope: tuple[float, float] | None = None,
) -> SimpleResult:
    """Odds ratio of exposure, cases against controls."""
    target = target or PrecisionTarget()
    cells = np.array([case_exposed, case_unexposed, control_exposed, control_unexposed], dtype=float)
    if np.any(cells < 0):
        raise UserInputError("counts must be non-negative")
    if cells[:2].sum() == 0 or cells[2:].sum() == 0:
        raise UserInputError("cases and controls each need at least one subject")
    a0, b0 = _shapes(prior)
    case = (a0 + cells[0], b0 + cells[1])
    control = (a0 + cells[2], b0 + cells[3])
    summaries = [
        summarize_closed_form(stats.beta(*case), target.ci_level, null_value=None, label="Pr(exposed | case)"),
        summarize_closed_form(stats.beta(*control), target.ci_level, null_value=None, label="Pr(exposed | control)"),
    ]

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        p1 = rng.beta(*case, size=size)
        p0 = rng.beta(*control, size=size)
        return (p1 / (1.0 - p1)) / (p0 / (1.0 - p0))

    draws = resolve_sampler(sampler).run(draw_fn, ["OR"], target)
    summaries.append(
        summarize_draws(draws.column("OR"), target.ci_level, rope=rope or RATIO_ROPE, null_value=1.0, label="OR")
    )
    return SimpleResult("casecontrol", summaries, draws=draws, extras={"prior_shapes": [a0, b0]})
