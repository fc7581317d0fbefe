"""
Bayesian model averaging over every subset of linear-model terms.

Each subset gets the Zellner g-prior of the linear module and its exact
log evidence. Posterior model probabilities weight a mixture of the
per-model normal–inverse-gamma posteriors; coefficients a model leaves out
are exactly zero in its draws.
"""

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
from scipy import special

from bayesics.errors import DesignError
from bayesics.formula.design import DesignSpec, require_full_rank
from bayesics.inference.core import summarize_draws
from bayesics.inference.schema import InferenceSummary
from bayesics.models.common import coefficient_rope, resolve_sampler
from bayesics.models.glm import PValueResult
from bayesics.models.linear import NIGPosterior, nig_log_evidence, nig_update, zellner_g_prior
from bayesics.sampling.engine import AdaptiveDraws, AdaptiveSampler
from bayesics.sampling.plan import mean_sample_size
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import BMAConfig, PValueConfig

logger = logging.getLogger(__name__)

ModelPrior = Literal["uniform", "beta-binomial"]

DEFAULT_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
# coefficients included less often than this are summarised but not planned on
MONITOR_MIN_INCLUSION = 0.05


@dataclass(frozen=True, eq=False)
class CandidateModel:
    terms: tuple[str, ...]
    columns: tuple[int, ...]  # positions in the full design
    log_evidence: float
    log_prior: float
    posterior: NIGPosterior
    prob: float = 0.0


def _log_model_prior(kind: ModelPrior, size: int, total: int) -> float:
    if kind == "uniform":
        return 0.0
    if kind == "beta-binomial":
        # Beta(1, 1) on the inclusion rate: every model size equally likely
        return float(special.betaln(size + 1, total - size + 1) - special.betaln(1, 1))
    raise ValueError(f"unknown model prior '{kind}'; expected uniform or beta-binomial")


@dataclass(frozen=True, eq=False)
class BmaFit:
    design: DesignSpec
    models: tuple[CandidateModel, ...]
    inclusion: dict[str, float]
    model_prior: str
    draws: AdaptiveDraws
    ci_level: float = 0.95
    rope_overrides: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.design.labels

    @property
    def probs(self) -> np.ndarray:
        return np.array([m.prob for m in self.models])

    def expected_coef(self) -> np.ndarray:
        """Σ_m Pr(m | y) · E[β | m, y], absent coefficients counting as zero."""
        out = np.zeros(self.design.p)
        for m in self.models:
            out[list(m.columns)] += m.prob * m.posterior.mu_n
        return out

    def coef(self) -> dict[str, float]:
        return dict(zip(self.labels, self.draws.draws[:, : self.design.p].mean(axis=0).tolist()))

    def vcov(self) -> np.ndarray:
        return np.atleast_2d(np.cov(self.draws.draws[:, : self.design.p], rowvar=False))

    def credint(self) -> dict[str, tuple[float, float]]:
        return {s.label: (s.ci_lower, s.ci_upper) for s in self.summary() if s.label in self.labels}

    def model_table(self) -> pd.DataFrame:
        rows = [
            {
                "model": " + ".join(m.terms) or "1",
                "n_terms": len(m.terms),
                "log_evidence": m.log_evidence,
                "log_prior": m.log_prior,
                "prob": m.prob,
            }
            for m in self.models
        ]
        return pd.DataFrame(rows).sort_values("prob", ascending=False, kind="stable").reset_index(drop=True)

    def _included(self, term: str) -> np.ndarray:
        return np.array([term in m.terms for m in self.models])

    def summary(self) -> list[InferenceSummary]:
        """Unconditional summaries, then conditional-on-inclusion ones ("<label> | included")."""
        level = self.ci_level
        response_sd = float(np.std(self.design.y, ddof=1))
        model_idx = self.draws.column("model").astype(int)
        rows, conditional = [], []
        for j, label in enumerate(self.labels):
            rope = self.rope_overrides.get(label) or coefficient_rope(self.design, j, "identity", response_sd)
            values = self.draws.draws[:, j]
            rows.append(summarize_draws(values, level, rope=rope, label=label))
            if self.design.kinds[j] == "intercept":
                continue
            term = next(t for t, cols in self.design.term_columns.items() if j in cols)
            mask = self._included(term)[model_idx]
            if mask.sum() >= 2 and np.ptp(values[mask]) > 0:
                conditional.append(summarize_draws(values[mask], level, rope=rope, label=f"{label} | included"))
        rows.append(summarize_draws(self.draws.column("sigma2"), level, null_value=0.0, label="sigma2").model_copy(
            update={"prob_direction": None}
        ))
        return rows + conditional


def _mixture_draw(
    models: Sequence[CandidateModel], probs: np.ndarray, p: int, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(model index, β with zeros for absent columns, σ²) for ``size`` mixture draws."""
    idx = rng.choice(len(models), size=size, p=probs)
    beta = np.zeros((size, p))
    sigma2 = np.empty(size)
    for m in np.unique(idx):
        rows = np.flatnonzero(idx == m)
        b, s2 = models[m].posterior.draw(rng, rows.size)
        beta[np.ix_(rows, models[m].columns)] = b
        sigma2[rows] = s2
    return idx, beta, sigma2


def fit_bma(
    design: DesignSpec,
    model_prior: ModelPrior = "uniform",
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    config: BMAConfig | None = None,
    rope_overrides: dict[str, tuple[float, float]] | None = None,
) -> BmaFit:
    config = config or BMAConfig()
    target = target or PrecisionTarget()
    if design.y is None:
        raise DesignError("model averaging needs a single numeric response")
    terms = design.terms
    if len(terms) > config.max_terms:
        raise DesignError(
            f"{len(terms)} terms give 2^{len(terms)} models, above the enumeration cap of {config.max_terms} "
            "terms; reduce the covariates (stochastic model search is not implemented)"
        )
    require_full_rank(design.X, design.labels)

    candidates = []
    for size in range(len(terms) + 1):
        for subset in itertools.combinations(terms, size):
            sub = design.select_terms(subset)
            prior = zellner_g_prior(sub)
            post = nig_update(sub.X, sub.y, prior)
            columns = (0, *(c for t in subset for c in design.term_columns[t]))
            candidates.append(
                CandidateModel(
                    terms=subset,
                    columns=columns,
                    log_evidence=nig_log_evidence(sub.X, sub.y, prior, post),
                    log_prior=_log_model_prior(model_prior, size, len(terms)),
                    posterior=post,
                )
            )

    log_post = np.array([m.log_evidence + m.log_prior for m in candidates])
    probs = np.exp(log_post - special.logsumexp(log_post))
    probs /= probs.sum()
    models = tuple(
        CandidateModel(m.terms, m.columns, m.log_evidence, m.log_prior, m.posterior, float(pr))
        for m, pr in zip(candidates, probs)
    )
    inclusion = {t: float(sum(m.prob for m in models if t in m.terms)) for t in terms}
    logger.info("bma %s: %d models, top probability %.4g", design.formula, len(models), probs.max())

    p = design.p
    labels = [*design.labels, "sigma2", "model"]
    monitor = [0]
    for t in terms:
        if inclusion[t] >= MONITOR_MIN_INCLUSION:
            monitor.extend(design.term_columns[t])
    monitor.append(p)

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        idx, beta, sigma2 = _mixture_draw(models, probs, p, rng, size)
        return np.column_stack([beta, sigma2, idx.astype(float)])

    draws = resolve_sampler(sampler).run(draw_fn, labels, target, monitor=sorted(monitor))
    return BmaFit(
        design=design,
        models=models,
        inclusion=inclusion,
        model_prior=model_prior,
        draws=draws,
        ci_level=target.ci_level,
        rope_overrides=dict(rope_overrides or {}),
    )


@dataclass(frozen=True, eq=False)
class QuantilePValues:
    probs: tuple[float, ...]
    results: tuple[PValueResult, ...]

    @property
    def p_values(self) -> dict[float, float]:
        return {q: r.p_value for q, r in zip(self.probs, self.results)}


def bma_bayesian_pvalue(
    fit: BmaFit,
    probs: Sequence[float] = DEFAULT_QUANTILES,
    n_rep: int | None = None,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    config: PValueConfig | None = None,
) -> QuantilePValues:
    """Pr(q(y_rep) < q(y)) for each data quantile q, replicates drawn through the mixture."""
    target = target or PrecisionTarget()
    config = config or PValueConfig()
    probs = tuple(float(q) for q in probs)
    if not all(0.0 < q < 1.0 for q in probs):
        raise ValueError("quantile probabilities must lie in (0, 1)")
    n_rep = n_rep or mean_sample_size(0.25, target.s, config.epsilon)
    X, y = fit.design.X, fit.design.y
    t_obs = np.quantile(y, probs)
    models, weights, p = fit.models, fit.probs, fit.design.p

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        _, beta, sigma2 = _mixture_draw(models, weights, p, rng, size)
        y_rep = beta @ X.T + np.sqrt(sigma2)[:, None] * rng.standard_normal((size, y.size))
        return np.quantile(y_rep, probs, axis=1).T

    batch = max(1, min(n_rep, 2_000_000 // max(y.size, 1)))
    t_rep = resolve_sampler(sampler).draw(draw_fn, n_rep, batch_size=batch)
    results = tuple(
        PValueResult(float(np.mean(t_rep[:, i] < t_obs[i])), t_rep[:, i], np.full(n_rep, t_obs[i]), n_rep)
        for i in range(len(probs))
    )
    return QuantilePValues(probs, results)
