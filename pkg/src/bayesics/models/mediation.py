"""
Causal mediation with a binary treatment.

A mediator model M ~ T + W and an outcome model Y ~ T + M + W are fitted
independently (conjugate lm for gaussian, approximate GLM otherwise). For
every joint posterior draw the potential values M(t) and Y(t, M(t')) are
computed for every unit, and

    ACME(t) = mean Y(t, M(1)) - Y(t, M(0))
    ADE(t)  = mean Y(1, M(t)) - Y(0, M(t))
    total   = mean Y(1, M(1)) - Y(0, M(0)) = ACME(t) + ADE(1 - t)

Potential values are model means ("mean") or family draws ("sample");
"auto" takes means for gaussian submodels and draws for discrete ones.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from bayesics.errors import DesignError, UserInputError
from bayesics.formula.data import Dataset
from bayesics.formula.design import DesignSpec, build_design
from bayesics.formula.parser import Formula, parse_formula
from bayesics.inference.core import default_rope, summarize_draws
from bayesics.inference.schema import InferenceSummary
from bayesics.models.common import resolve_sampler
from bayesics.models.families import GLMFamily, get_family
from bayesics.models.glm import fit_glm
from bayesics.models.linear import fit_lm
from bayesics.sampling.engine import AdaptiveDraws, AdaptiveSampler
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import BayesicsConfig

logger = logging.getLogger(__name__)

SimulationMode = Literal["auto", "mean", "sample"]
MEDIATION_FAMILIES = ("gaussian", "binomial", "poisson")
# proportion mediated is only reported when the total effect has a clear sign
PROPORTION_MIN_PDIR = 0.95
BATCH_ELEMENTS = 2_000_000


def mediation_designs(
    mediator_formula: Formula | str,
    outcome_formula: Formula | str,
    data: Dataset,
) -> tuple[DesignSpec, DesignSpec]:
    """Both designs on the same rows: those complete in every variable either model uses."""
    med = parse_formula(mediator_formula) if isinstance(mediator_formula, str) else mediator_formula
    out = parse_formula(outcome_formula) if isinstance(outcome_formula, str) else outcome_formula
    used = []
    for f in (med, out):
        for name in (*f.response_variables, *f.expand(data.names)):
            if name not in used:
                used.append(name)
    for name in used:
        if name not in data:
            raise DesignError(f"variable '{name}' not found; available: {', '.join(data.names)}")
    complete = np.ones(data.n_rows, dtype=bool)
    for name in used:
        complete &= ~data[name].missing
    if not complete.all():
        logger.warning("Dropped %d of %d rows with missing values for the mediation models", (~complete).sum(), data.n_rows)
    rows = data.select(used).take(np.flatnonzero(complete))
    return build_design(med, rows), build_design(out, rows)


def _single_column(design: DesignSpec, term: str, role: str) -> int:
    if term not in design.term_columns:
        raise DesignError(f"{role} '{term}' is not a term of {design.formula}")
    cols = design.term_columns[term]
    if len(cols) != 1:
        raise DesignError(f"{role} '{term}' must be numeric or a two-level factor")
    return cols[0]


def _treatment_levels(design: DesignSpec, treatment: str, column: int) -> tuple[str, str]:
    if treatment in design.factor_levels:
        return design.factor_levels[treatment]
    values = np.unique(design.X[:, column])
    if not np.array_equal(values, [0.0, 1.0]):
        raise UserInputError(f"treatment '{treatment}' must be binary (0/1 or a two-level factor)")
    return "0", "1"


class _Submodel:
    """Posterior draws of (β, aux) for one fitted submodel."""

    def __init__(self, design: DesignSpec, family: str, config: BayesicsConfig, method: str,
                 sampler: AdaptiveSampler, target: PrecisionTarget):
        if family not in MEDIATION_FAMILIES:
            raise UserInputError(f"mediation submodels must be one of {', '.join(MEDIATION_FAMILIES)}")
        self.design = design
        self.family: GLMFamily = get_family(family)
        if family == "gaussian":
            self.fit = fit_lm(design, ci_level=target.ci_level)
        else:
            self.fit = fit_glm(design, self.family, method=method, sampler=sampler, target=target, config=config)

    def draw(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray | None]:
        if self.family.name == "gaussian":
            beta, sigma2 = self.fit.posterior.draw(rng, size)
            return beta, np.log(sigma2)[:, None]
        theta = self.fit.sample(rng, size)
        p = self.design.p
        return theta[:, :p], (theta[:, p:] if self.family.has_aux else None)

    def potential(self, rng: np.random.Generator, eta: np.ndarray, aux: np.ndarray | None, mode: str) -> np.ndarray:
        if mode == "auto":
            mode = "mean" if self.family.name == "gaussian" else "sample"
        if mode == "mean":
            return self.family.linkinv(eta)
        return self.family.simulate(rng, eta, aux)


@dataclass(frozen=True, eq=False)
class MediationResult:
    treatment: str
    mediator: str
    levels: tuple[str, str]
    mode: str
    draws: AdaptiveDraws
    effects: list[InferenceSummary]
    proportion: InferenceSummary | None
    ci_level: float
    extra: dict = field(default_factory=dict)

    def summary(self) -> list[InferenceSummary]:
        return self.effects + ([self.proportion] if self.proportion is not None else [])


def effect_labels(levels: tuple[str, str]) -> list[str]:
    t0, t1 = levels
    return [
        f"ACME({t0})",
        f"ACME({t1})",
        f"ADE({t0})",
        f"ADE({t1})",
        "ACME (average)",
        "ADE (average)",
        "Total effect",
        "Proportion mediated",
    ]


def mediate(
    mediator_design: DesignSpec,
    outcome_design: DesignSpec,
    treatment: str,
    mediator_family: str = "gaussian",
    outcome_family: str = "gaussian",
    mode: SimulationMode = "auto",
    method: str = "vb",
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    config: BayesicsConfig | None = None,
    rope: tuple[float, float] | None = None,
) -> MediationResult:
    if mode not in ("auto", "mean", "sample"):
        raise ValueError(f"unknown simulation mode '{mode}'")
    target = target or PrecisionTarget()
    config = config or BayesicsConfig()
    sampler = resolve_sampler(sampler)
    if mediator_design.y is None or outcome_design.y is None:
        raise DesignError("mediator and outcome models each need a single response")
    if mediator_design.n != outcome_design.n:
        raise DesignError("mediator and outcome models must be fitted on the same rows")

    mediator = mediator_design.formula.response
    t_med = _single_column(mediator_design, treatment, "treatment")
    t_out = _single_column(outcome_design, treatment, "treatment")
    m_out = _single_column(outcome_design, mediator, "mediator")
    levels = _treatment_levels(mediator_design, treatment, t_med)
    if not np.array_equal(mediator_design.X[:, t_med], outcome_design.X[:, t_out]):
        raise DesignError("mediator and outcome models must be fitted on the same rows")

    med_model = _Submodel(mediator_design, mediator_family, config, method, sampler, target)
    out_model = _Submodel(outcome_design, outcome_family, config, method, sampler, target)

    X_med = {t: mediator_design.X.copy() for t in (0, 1)}
    for t in (0, 1):
        X_med[t][:, t_med] = float(t)
    X_base = outcome_design.X.copy()
    X_base[:, [t_out, m_out]] = 0.0

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        beta_m, aux_m = med_model.draw(rng, size)
        beta_y, aux_y = out_model.draw(rng, size)
        m = {t: med_model.potential(rng, beta_m @ X_med[t].T, aux_m, mode) for t in (0, 1)}
        base = beta_y @ X_base.T
        y = {
            (t, tp): out_model.potential(
                rng, base + t * beta_y[:, [t_out]] + m[tp] * beta_y[:, [m_out]], aux_y, mode
            )
            for t in (0, 1)
            for tp in (0, 1)
        }
        acme = [np.mean(y[t, 1] - y[t, 0], axis=1) for t in (0, 1)]
        ade = [np.mean(y[1, t] - y[0, t], axis=1) for t in (0, 1)]
        total = np.mean(y[1, 1] - y[0, 0], axis=1)
        acme_avg = 0.5 * (acme[0] + acme[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            prop = np.where(total != 0, acme_avg / total, np.nan)
        return np.column_stack([acme[0], acme[1], ade[0], ade[1], acme_avg, 0.5 * (ade[0] + ade[1]), total, prop])

    labels = effect_labels(levels)
    batch = max(1, min(500, BATCH_ELEMENTS // (4 * outcome_design.n)))
    # the proportion is a ratio with no finite moments near total = 0
    draws = sampler.run(draw_fn, labels, target, monitor=range(len(labels) - 1), batch_size=batch)

    rope = rope or default_rope("mean-difference", response_sd=float(np.std(outcome_design.y, ddof=1)))
    effects = [summarize_draws(draws.column(lab), target.ci_level, rope=rope, label=lab) for lab in labels[:-1]]
    total = next(s for s in effects if s.label == "Total effect")
    proportion = None
    ratio = draws.column("Proportion mediated")
    if total.prob_direction is not None and total.prob_direction > PROPORTION_MIN_PDIR and np.all(np.isfinite(ratio)):
        proportion = summarize_draws(ratio, target.ci_level, label="Proportion mediated")
    else:
        logger.info("Proportion mediated not reported: total effect has no clear direction")

    return MediationResult(
        treatment=treatment,
        mediator=mediator,
        levels=levels,
        mode=mode,
        draws=draws,
        effects=effects,
        proportion=proportion,
        ci_level=target.ci_level,
        extra={"mediator_family": mediator_family, "outcome_family": outcome_family, "n": outcome_design.n},
    )
