"""
Approximate posteriors for generalized linear models.

Three methods share one log posterior:

- laplace: damped Newton to the mode, covariance from the inverse Hessian
- vb (default): full-covariance Gaussian maximising the ELBO by
  reparameterisation gradients and Adam, started at the Laplace fit and run
  in coordinates whitened by it
- importance: multivariate-t (df=5) proposal centred at the Laplace fit,
  self-normalised weights

Coefficients have independent normal priors; an auxiliary parameter
(gaussian σ², negbinom size φ) lives on the log scale.
"""

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import linalg, optimize, stats

from bayesics.errors import ConvergenceError, DataError, DesignError, NumericalError, SeparationError
from bayesics.formula.data import Dataset
from bayesics.formula.design import DesignSpec, require_full_rank
from bayesics.inference.core import KEEP_DROP, exp_bounds, summarize_closed_form, summarize_draws
from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.models.common import Band, band_grid, coefficient_rope, resolve_sampler
from bayesics.models.families import GLMFamily, get_family
from bayesics.optim import newton_minimize
from bayesics.sampling.engine import AdaptiveSampler
from bayesics.sampling.plan import mean_sample_size
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import BayesicsConfig, PValueConfig, VBConfig

logger = logging.getLogger(__name__)

Method = Literal["vb", "laplace", "importance"]

COEF_PRIOR_FACTOR = 5.0
INTERCEPT_PRIOR_SD = 10.0
AUX_PRIOR_SD = 3.0
IMPORTANCE_DF = 5
IC_DRAWS = 10_000
LOW_ESS = 1000
SEPARABLE_FAMILIES = ("binomial", "poisson", "negbinom")
SEPARATION_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class GLMPrior:
    mean: np.ndarray
    sd: np.ndarray

    def logpdf(self, theta: np.ndarray) -> np.ndarray:
        return np.sum(stats.norm.logpdf(theta, self.mean, self.sd), axis=-1)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        return -(theta - self.mean) / self.sd**2

    def marginal(self, j: int):
        return stats.norm(self.mean[j], self.sd[j])


def default_glm_prior(design: DesignSpec, family: GLMFamily) -> GLMPrior:
    """N(0, (5/s_xj)²) per coefficient (binary columns s_xj = 1), intercept N(0, 10²).

    The gaussian family works on the response scale, so its coefficient SDs
    and the intercept are scaled by s_y and the intercept is centred at ȳ.
    """
    p = design.p
    scale = 1.0
    center = 0.0
    if family.name == "gaussian":
        scale = float(np.std(design.y, ddof=1))
        center = float(np.mean(design.y))
    mean = np.zeros(p + family.has_aux)
    sd = np.empty(p + family.has_aux)
    mean[0], sd[0] = center, INTERCEPT_PRIOR_SD * scale
    for j in range(1, p):
        s_x = 1.0 if design.is_binary(j) else design.sds[j]
        sd[j] = COEF_PRIOR_FACTOR * scale / s_x
    if family.has_aux:
        mean[p] = family.start_aux(design.y) if family.name == "gaussian" else 0.0
        sd[p] = AUX_PRIOR_SD
    return GLMPrior(mean, sd)


class LogPosterior:
    """Unnormalised log posterior over θ = (β, aux), batched over rows of θ."""

    def __init__(
        self,
        design: DesignSpec,
        family: GLMFamily,
        prior: GLMPrior,
        offset: np.ndarray | None = None,
    ):
        self.X = design.X
        self.y = design.y
        self.family = family
        self.prior = prior
        self.p = design.p
        self.q = design.p + family.has_aux
        self.offset = np.zeros(design.n) if offset is None else np.asarray(offset, dtype=float)

    def split(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        theta = np.atleast_2d(theta)
        eta = theta[:, : self.p] @ self.X.T + self.offset
        aux = theta[:, self.p :] if self.family.has_aux else None
        return eta, aux

    def pointwise(self, theta: np.ndarray) -> np.ndarray:
        eta, aux = self.split(theta)
        return self.family.loglik(self.y, eta, aux)

    def log_density(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_2d(theta)
        return self.pointwise(theta).sum(axis=1) + self.prior.logpdf(theta)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_2d(theta)
        eta, aux = self.split(theta)
        g = np.empty_like(theta)
        g[:, : self.p] = self.family.grad_eta(self.y, eta, aux) @ self.X
        if self.family.has_aux:
            g[:, self.p] = self.family.grad_aux(self.y, eta, aux).sum(axis=1)
        return g + self.prior.grad(theta)

    def start(self) -> np.ndarray:
        theta = np.zeros(self.q)
        theta[0] = self.family.start_eta(self.y)
        if self.family.has_aux:
            theta[self.p] = self.family.start_aux(self.y)
        return theta


@dataclass(frozen=True, eq=False)
class GaussianApprox:
    m: np.ndarray
    C: np.ndarray
    method: str
    elbo_trace: tuple[float, ...] = ()

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.C))

    def marginal(self, j: int):
        return stats.norm(self.m[j], self.sd[j])


@dataclass(frozen=True, eq=False)
class GLMFit:
    design: DesignSpec
    family: GLMFamily
    prior: GLMPrior
    approx: GaussianApprox
    method: str
    labels: tuple[str, ...]
    ci_level: float = 0.95
    offset: np.ndarray | None = None
    draws: np.ndarray | None = None  # importance draws
    weights: np.ndarray | None = None  # normalised importance weights
    ess: float | None = None
    rope_overrides: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def posterior(self) -> LogPosterior:
        return LogPosterior(self.design, self.family, self.prior, self.offset)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """iid θ draws from the approximate posterior (resampled for importance fits)."""
        if self.draws is not None:
            idx = rng.choice(self.draws.shape[0], size=size, p=self.weights)
            return self.draws[idx]
        return rng.multivariate_normal(self.approx.m, self.approx.C, size=size, method="cholesky")

    def coef(self) -> dict[str, float]:
        return dict(zip(self.labels, self.approx.m.tolist()))

    def vcov(self) -> np.ndarray:
        return self.approx.C

    def credint(self, ci_level: float | None = None) -> dict[str, tuple[float, float]]:
        return {s.label: (s.ci_lower, s.ci_upper) for s in self.summary(ci_level, interpretable_scale=False)}

    def rope_for(self, j: int) -> tuple[float, float] | None:
        label = self.labels[j]
        if label in self.rope_overrides:
            return self.rope_overrides[label]
        if j >= self.design.p:
            return None
        if self.family.ratio_scale:
            return coefficient_rope(self.design, j, "log")
        return coefficient_rope(self.design, j, "identity", float(np.std(self.design.y, ddof=1)))

    def summary(self, ci_level: float | None = None, interpretable_scale: bool = True) -> list[InferenceSummary]:
        """Per-coefficient summaries; ratio families report exp(β) with null 1."""
        level = ci_level or self.ci_level
        bfs = glm_coefficient_bfs(self)
        rows = []
        for j, label in enumerate(self.labels):
            # the auxiliary parameter is always reported as σ² or φ, without a direction
            is_aux = j >= self.design.p
            on_ratio = is_aux or (self.family.ratio_scale and interpretable_scale)
            rope = self.rope_for(j)
            if on_ratio and rope is not None and label not in self.rope_overrides:
                rope = exp_bounds(rope)
            null = None if is_aux else (1.0 if on_ratio else 0.0)
            if is_aux:
                label = self.family.aux_name
            if self.draws is not None:
                values = self.draws[:, j]
                s = summarize_draws(
                    np.exp(values) if on_ratio else values,
                    level,
                    rope=rope,
                    null_value=1.0 if on_ratio else 0.0,
                    label=label,
                    weights=self.weights,
                )
                if null is None:
                    s = s.model_copy(update={"prob_direction": None})
            else:
                m, sd = self.approx.m[j], self.approx.sd[j]
                dist = stats.lognorm(s=sd, scale=math.exp(m)) if on_ratio else stats.norm(m, sd)
                s = summarize_closed_form(dist, level, rope=rope, null_value=null, label=label)
            if label in bfs:
                s = s.with_bayes_factor(bfs[label])
            rows.append(s)
        return rows


# fitting --------------------------------------------------------------------


def _laplace(post: LogPosterior, config: BayesicsConfig) -> tuple[np.ndarray, np.ndarray]:
    res = newton_minimize(
        lambda th: -float(post.log_density(th)[0]),
        lambda th: -post.grad(th)[0],
        post.start(),
        config=config.newton,
        label=f"{post.family.name} posterior mode",
    )
    try:
        C = linalg.inv(res.hessian)
        np.linalg.cholesky(C)
    except (linalg.LinAlgError, np.linalg.LinAlgError):
        raise NumericalError("Hessian at the posterior mode is not positive definite") from None
    return res.x, 0.5 * (C + C.T)


def separated_terms(design: DesignSpec, family: str) -> list[str]:
    """Covariates whose coefficients the data let run off to infinity.

    Binomial data are separated when some direction d has sᵢ xᵢᵀd ≥ 0 on
    every row (sᵢ = ±1 for y = 1 / 0); count data when xᵢᵀd ≤ 0 on the
    zero counts and xᵢᵀd = 0 on the rest. One linear program over the
    standardised columns decides whether such a d exists. A covariate that
    separates on its own is named; otherwise the one moving most along the
    separating direction is.
    """
    if family not in SEPARABLE_FAMILIES or design.p < 2 or design.y is None:
        return []
    y = design.y
    if np.all(y == y[0]):
        return []  # only the intercept runs off; its prior holds it
    if family != "binomial" and not np.any(y == 0):
        return []
    scale = np.array([1.0] + [sd or 1.0 for sd in design.sds[1:]])
    Z = design.X / scale
    if family == "binomial":
        A_ub, A_eq = -np.where(y > 0.5, 1.0, -1.0)[:, None] * Z, None
    else:
        A_ub, A_eq = Z[y == 0], Z[y > 0]
    res = optimize.linprog(
        A_ub.mean(axis=0),
        A_ub=A_ub,
        b_ub=np.zeros(A_ub.shape[0]),
        A_eq=A_eq,
        b_eq=None if A_eq is None else np.zeros(A_eq.shape[0]),
        bounds=[(-1.0, 1.0)] * design.p,
        method="highs",
    )
    if res.status != 0 or -res.fun <= SEPARATION_TOL:
        return []

    alone = [design.labels[j] for j in range(1, design.p) if _separates_alone(Z[:, j], y, family)]
    if alone:
        return alone
    return [design.labels[1 + int(np.argmax(np.abs(res.x[1:])))]]


def _separates_alone(z: np.ndarray, y: np.ndarray, family: str) -> bool:
    if family == "binomial":
        ones, zeros = z[y > 0.5], z[y <= 0.5]
        return bool(ones.max() <= zeros.min() or zeros.max() <= ones.min())
    positive, zeros = z[y > 0], z[y == 0]
    if np.ptp(positive) > 0:
        return False
    c = positive[0]
    if np.all(zeros == c):
        return False
    return bool(np.all(zeros <= c) or np.all(zeros >= c))


def _check_separation(
    design: DesignSpec, post: LogPosterior, mode: np.ndarray, threshold: float, separated: Sequence[str] = ()
) -> None:
    if post.family.name == "gaussian":
        return
    standardised = [abs(mode[j]) * (1.0 if design.is_binary(j) else design.sds[j]) for j in range(1, design.p)]
    if separated:
        worst = max(standardised[design.labels.index(label) - 1] for label in separated)
        raise SeparationError(", ".join(separated), worst)

    # near-separation the linear program misses: the prior alone pins the mode
    eta, aux = post.split(mode)
    w = post.family.info_weights(eta, aux)[0]
    info = np.einsum("i,ij,ij->j", w, design.X, design.X)
    prior_precision = 1.0 / post.prior.sd[: design.p] ** 2
    for j in range(1, design.p):
        flat = info[j] < 0.01 * prior_precision[j]
        if standardised[j - 1] > threshold or (flat and standardised[j - 1] > 3.0):
            raise SeparationError(design.labels[j], standardised[j - 1])


class VBObjective:
    """ELBO in coordinates θ = mode + L0 u with q(u) = N(m_u, S Sᵀ).

    Parameters are packed as (m_u, log diag S, strict lower S).
    """

    def __init__(self, post: LogPosterior, mode: np.ndarray, cov: np.ndarray):
        self.post = post
        self.mode = mode
        self.L0 = np.linalg.cholesky(cov)
        self.q = mode.size
        self.tril = np.tril_indices(self.q, -1)
        self.const = float(np.sum(np.log(np.diag(self.L0)))) + 0.5 * self.q * (1.0 + math.log(2.0 * math.pi))

    def initial(self) -> np.ndarray:
        return np.zeros(2 * self.q + len(self.tril[0]))

    def unpack(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        q = self.q
        m_u, log_d, off = params[:q], params[q : 2 * q], params[2 * q :]
        S = np.diag(np.exp(log_d))
        S[self.tril] = off
        return m_u, log_d, S

    def value_and_grad(self, params: np.ndarray, eps: np.ndarray) -> tuple[float, np.ndarray]:
        m_u, log_d, S = self.unpack(params)
        U = m_u + eps @ S.T
        theta = self.mode + U @ self.L0.T
        lp = self.post.log_density(theta)
        g_u = self.post.grad(theta) @ self.L0
        g_S = np.einsum("ki,kj->ij", g_u, eps) / eps.shape[0]
        value = float(lp.mean()) + float(log_d.sum()) + self.const
        grad = np.concatenate([g_u.mean(axis=0), np.diag(g_S) * np.exp(log_d) + 1.0, g_S[self.tril]])
        return value, grad

    def gaussian(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m_u, _, S = self.unpack(params)
        A = self.L0 @ S
        return self.mode + self.L0 @ m_u, A @ A.T


def _vb(
    post: LogPosterior,
    mode: np.ndarray,
    cov: np.ndarray,
    config: VBConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, tuple[float, ...]]:
    objective = VBObjective(post, mode, cov)
    params = objective.initial()
    first = np.zeros_like(params)
    second = np.zeros_like(params)
    beta1, beta2, tiny = 0.9, 0.999, 1e-8
    trace: list[float] = []
    window = config.window

    def adam_step(t: int, params: np.ndarray) -> np.ndarray:
        nonlocal first, second
        eps = rng.standard_normal((config.mc_samples, objective.q))
        value, grad = objective.value_and_grad(params, eps)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise ConvergenceError("ELBO became non-finite during VB", trace)
        trace.append(value)
        first = beta1 * first + (1 - beta1) * grad
        second = beta2 * second + (1 - beta2) * grad**2
        m_hat = first / (1 - beta1**t)
        v_hat = second / (1 - beta2**t)
        return params + config.step_size * m_hat / (np.sqrt(v_hat) + tiny)

    converged_at = None
    for t in range(1, config.max_steps + 1):
        params = adam_step(t, params)
        if t >= 2 * window:
            recent = float(np.mean(trace[-window:]))
            earlier = float(np.mean(trace[-2 * window : -window]))
            if recent - earlier < config.rel_tol * abs(recent):
                converged_at = t
                break
    if converged_at is None:
        raise ConvergenceError(f"VB did not converge within {config.max_steps} steps", trace)

    # Polyak averaging damps the stochastic jitter left at the optimum.
    average = np.zeros_like(params)
    for k in range(config.averaging_steps):
        params = adam_step(converged_at + k + 1, params)
        average += params
    if config.averaging_steps:
        params = average / config.averaging_steps

    logger.debug("VB converged after %d steps (ELBO %.6g)", converged_at, trace[converged_at - 1])
    m, C = objective.gaussian(params)
    return m, 0.5 * (C + C.T), tuple(trace)


def _importance(
    post: LogPosterior,
    mode: np.ndarray,
    cov: np.ndarray,
    labels: Sequence[str],
    sampler: AdaptiveSampler,
    target: PrecisionTarget,
) -> tuple[np.ndarray, np.ndarray, float]:
    proposal = stats.multivariate_t(loc=mode, shape=cov, df=IMPORTANCE_DF)

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        theta = np.asarray(proposal.rvs(size=size, random_state=rng)).reshape(size, mode.size)
        log_w = post.log_density(theta) - proposal.logpdf(theta)
        return np.column_stack([theta, log_w])

    q = mode.size
    run = sampler.run(draw_fn, [*labels, "log_weight"], target, monitor=list(range(q)))
    draws = run.draws

    def normalise(d: np.ndarray) -> tuple[np.ndarray, float]:
        log_w = d[:, -1]
        w = np.exp(log_w - np.max(log_w))
        w /= w.sum()
        return w, float(1.0 / np.sum(w**2))

    w, ess = normalise(draws)
    # weighted quantiles behave like an ESS-sized sample; top up to match the plan
    inflation = draws.shape[0] / ess
    if inflation > 1.5:
        extra = min(int(math.ceil(draws.shape[0] * (inflation - 1.0))), sampler.config.hard_cap - draws.shape[0])
        if extra > 0:
            draws = np.vstack([draws, sampler.draw(draw_fn, extra)])
            w, ess = normalise(draws)
    if ess < LOW_ESS:
        logger.warning("Importance sampling effective sample size is only %.0f", ess)
    return draws[:, :q], w, ess


def fit_glm(
    design: DesignSpec,
    family: str | GLMFamily = "gaussian",
    prior: GLMPrior | None = None,
    method: Method = "vb",
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    config: BayesicsConfig | None = None,
    offset: np.ndarray | None = None,
    rope_overrides: Mapping[str, tuple[float, float]] | None = None,
) -> GLMFit:
    family = get_family(family)
    config = config or BayesicsConfig()
    target = target or PrecisionTarget()
    sampler = resolve_sampler(sampler)
    if design.y is None:
        raise DesignError("GLMs need a single response")
    if method not in ("vb", "laplace", "importance"):
        raise ValueError(f"unknown method '{method}'")
    if offset is not None and family.name not in ("poisson", "negbinom"):
        raise DesignError("offsets are supported for poisson and negbinom only")
    family.validate(design.y)
    require_full_rank(design.X, design.labels)

    prior = prior or default_glm_prior(design, family)
    post = LogPosterior(design, family, prior, offset)
    labels = list(design.labels)
    if family.has_aux:
        labels.append(f"log_{family.aux_name}")

    separated = separated_terms(design, family.name)
    try:
        mode, cov = _laplace(post, config)
    except NumericalError:
        if separated:
            raise SeparationError(", ".join(separated), math.inf) from None
        raise
    _check_separation(design, post, mode, config.vb.separation_threshold, separated)

    draws = weights = ess = None
    trace: tuple[float, ...] = ()
    if method == "laplace":
        m, C = mode, cov
    elif method == "vb":
        m, C, trace = _vb(post, mode, cov, config.vb, sampler.generator())
    else:
        draws, weights, ess = _importance(post, mode, cov, labels, sampler, target)
        m = weights @ draws
        centred = draws - m
        C = (centred * weights[:, None]).T @ centred

    return GLMFit(
        design=design,
        family=family,
        prior=prior,
        approx=GaussianApprox(m=m, C=C, method=method, elbo_trace=trace),
        method=method,
        labels=tuple(labels),
        ci_level=target.ci_level,
        offset=offset,
        draws=draws,
        weights=weights,
        ess=ess,
        rope_overrides=dict(rope_overrides or {}),
    )


# generics -------------------------------------------------------------------


def glm_coefficient_bfs(fit: GLMFit) -> dict[str, BayesFactor]:
    """Savage–Dickey at 0 with the normal prior and the Gaussian approximation."""
    out = {}
    for j in range(1, fit.design.p):
        log_bf = float(fit.prior.marginal(j).logpdf(0.0) - fit.approx.marginal(j).logpdf(0.0))
        if math.isfinite(log_bf):
            out[fit.labels[j]] = BayesFactor.from_log(log_bf, *KEEP_DROP)
    return out


def chi_square_discrepancy(family: GLMFamily, y: np.ndarray, eta: np.ndarray, aux: np.ndarray | None) -> np.ndarray:
    mu = family.linkinv(eta)
    var = np.maximum(family.variance(mu, aux), 1e-12)
    return np.sum((y - mu) ** 2 / var, axis=-1)


Discrepancy = Callable[[GLMFamily, np.ndarray, np.ndarray, np.ndarray | None], np.ndarray]


@dataclass(frozen=True, eq=False)
class PValueResult:
    p_value: float
    t_pred: np.ndarray
    t_obs: np.ndarray
    n_rep: int

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.t_pred.tolist(), self.t_obs.tolist()))


def replicate_count(s: float, config: PValueConfig | None = None) -> int:
    """Replicates pinning a probability to ±epsilon with probability s (worst case p = 1/2)."""
    config = config or PValueConfig()
    return mean_sample_size(0.25, s, config.epsilon)


def bayesian_pvalue(
    fit: GLMFit,
    statistic: Discrepancy = chi_square_discrepancy,
    n_rep: int | None = None,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    config: PValueConfig | None = None,
) -> PValueResult:
    """Pr(T(y_rep, θ) < T(y_obs, θ) | y) over posterior draws θ."""
    target = target or PrecisionTarget()
    n_rep = n_rep or replicate_count(target.s, config)
    post = fit.posterior
    family, y = fit.family, fit.design.y

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        theta = fit.sample(rng, size)
        eta, aux = post.split(theta)
        y_rep = family.simulate(rng, eta, aux)
        return np.column_stack([statistic(family, y_rep, eta, aux), statistic(family, y, eta, aux)])

    batch = max(1, min(n_rep, 2_000_000 // max(fit.design.n, 1)))
    stats_ = resolve_sampler(sampler).draw(draw_fn, n_rep, batch_size=batch)
    t_pred, t_obs = stats_[:, 0], stats_[:, 1]
    return PValueResult(float(np.mean(t_pred < t_obs)), t_pred, t_obs, n_rep)


def _max_loglik(fit: GLMFit) -> float:
    post = fit.posterior
    flat = lambda th: -float(post.pointwise(th).sum())  # noqa: E731

    def grad(th: np.ndarray) -> np.ndarray:
        eta, aux = post.split(th)
        g = np.empty(post.q)
        g[: post.p] = (post.family.grad_eta(post.y, eta, aux) @ post.X)[0]
        if post.family.has_aux:
            g[post.p] = post.family.grad_aux(post.y, eta, aux).sum()
        return -g

    try:
        res = newton_minimize(flat, grad, fit.approx.m, label="maximum likelihood")
        return -res.value
    except ConvergenceError as e:
        logger.warning("Maximum likelihood did not converge (%s); using the posterior mean", e)
        return -flat(fit.approx.m)


def glm_information_criteria(fit: GLMFit, sampler: AdaptiveSampler | None = None) -> dict[str, float]:
    post = fit.posterior
    n, k = fit.design.n, post.q
    max_ll = _max_loglik(fit)

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        return post.pointwise(fit.sample(rng, size))

    batch = max(1, min(IC_DRAWS, 2_000_000 // max(n, 1)))
    ll = resolve_sampler(sampler).draw(draw_fn, IC_DRAWS, batch_size=batch)

    log_p_bar = float(post.pointwise(fit.approx.m).sum())
    p_dic = 2.0 * (log_p_bar - float(ll.sum(axis=1).mean()))
    top = ll.max(axis=0)
    lppd = float(np.sum(top + np.log(np.mean(np.exp(ll - top), axis=0))))
    p_waic = float(np.sum(np.var(ll, axis=0, ddof=1)))
    return {
        "AIC": -2.0 * max_ll + 2.0 * k,
        "BIC": -2.0 * max_ll + k * math.log(n),
        "DIC": -2.0 * log_p_bar + 2.0 * p_dic,
        "p_DIC": p_dic,
        "WAIC": -2.0 * (lppd - p_waic),
        "p_WAIC": p_waic,
    }


def glm_credible_band(
    fit: GLMFit,
    variable: str,
    exemplar: Mapping[str, float | str] | None = None,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    grid_size: int = 50,
) -> Band:
    """Pointwise band for the mean response (inverse-link scale)."""
    target = target or PrecisionTarget()
    x, rows, settings = band_grid(fit.design, variable, exemplar, grid_size)
    p = fit.design.p
    labels = [f"{variable}={v}" for v in x]

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        theta = fit.sample(rng, size)
        return fit.family.linkinv(theta[:, :p] @ rows.T)

    draws = resolve_sampler(sampler).run(draw_fn, labels, target).draws
    half = (1.0 - target.ci_level) / 2.0
    lower, center, upper = np.quantile(draws, [half, 0.5, 1.0 - half], axis=0)
    return Band(variable, x, center, lower, upper, target.ci_level, "credible", settings)


def predict(
    fit: GLMFit,
    new_data: Dataset | Mapping[str, Sequence],
    type: Literal["link", "response", "predictive"] = "response",
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
) -> list[InferenceSummary]:
    target = target or PrecisionTarget()
    sampler = resolve_sampler(sampler)
    rows = fit.design.encode(new_data)
    if rows.shape[0] == 0:
        raise DataError("no rows to predict")
    p = fit.design.p
    labels = [f"row {i}" for i in range(rows.shape[0])]

    def mean_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        eta = fit.sample(rng, size)[:, :p] @ rows.T
        return eta if type == "link" else fit.family.linkinv(eta)

    run = sampler.run(mean_fn, labels, target)
    draws = run.draws
    if type == "predictive":

        def predictive_fn(rng: np.random.Generator, size: int) -> np.ndarray:
            theta = fit.sample(rng, size)
            eta = theta[:, :p] @ rows.T
            aux = theta[:, p:] if fit.family.has_aux else None
            return fit.family.simulate(rng, eta, aux)

        draws = sampler.draw(predictive_fn, run.total_draws)
    return [
        summarize_draws(draws[:, i], target.ci_level, null_value=0.0, label=lab).model_copy(
            update={"prob_direction": None}
        )
        for i, lab in enumerate(labels)
    ]
