"""
Right-censored survival with piecewise-exponential hazards.

Within each interval (t_{k-1}, t_k] the hazard is a constant λ_k with a
Gamma(α_k, β_k) prior, so the posterior is Gamma(α_k + d_k, β_k + T_k)
with d_k events and T_k exposure. The marginal likelihood is closed form
and chooses the number of intervals; interior knots sit at quantiles of
the pooled event times and the last interval is open-ended.
"""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import special, stats

from bayesics.errors import DataError, DesignError, UserInputError
from bayesics.formula.design import DesignSpec
from bayesics.inference.core import summarize_closed_form
from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.models.common import DEFAULT_GRID_SIZE, resolve_sampler
from bayesics.sampling.engine import AdaptiveDraws, AdaptiveSampler
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import SurvivalConfig

logger = logging.getLogger(__name__)

POOLED = "(all)"


def interior_knots(event_times: np.ndarray, n_intervals: int) -> np.ndarray:
    """Distinct event-time quantiles splitting the time axis into at most ``n_intervals`` pieces."""
    if n_intervals < 1:
        raise ValueError("need at least one interval")
    if n_intervals == 1 or event_times.size == 0:
        return np.empty(0)
    probs = np.arange(1, n_intervals) / n_intervals
    knots = np.unique(np.quantile(event_times, probs))
    return knots[knots > 0]


def interval_bounds(knots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lower = np.concatenate([[0.0], knots])
    upper = np.concatenate([knots, [np.inf]])
    return lower, upper


def exposure_and_events(
    time: np.ndarray, event: np.ndarray, knots: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(T_k, d_k) per interval; Σ T_k is the total follow-up."""
    lower, upper = interval_bounds(knots)
    exposure = np.clip(time[:, None] - lower[None, :], 0.0, upper - lower).sum(axis=0)
    # an event at a knot belongs to the interval the knot closes
    idx = np.searchsorted(knots, time[event == 1], side="left")
    events = np.bincount(idx, minlength=knots.size + 1).astype(float)
    return exposure, events


def gamma_log_ml(alpha: np.ndarray, beta: np.ndarray, events: np.ndarray, exposure: np.ndarray) -> float:
    """log ∫ Π_k λ_k^{d_k} e^{-λ_k T_k} Gamma(λ_k; α_k, β_k) dλ."""
    return float(
        np.sum(
            alpha * np.log(beta)
            - special.gammaln(alpha)
            + special.gammaln(alpha + events)
            - (alpha + events) * np.log(beta + exposure)
        )
    )


@dataclass(frozen=True, eq=False)
class GroupHazards:
    group: str
    alpha: np.ndarray
    beta: np.ndarray
    events: np.ndarray
    exposure: np.ndarray
    n: int
    log_ml: float

    @property
    def shape(self) -> np.ndarray:
        return self.alpha + self.events

    @property
    def rate(self) -> np.ndarray:
        return self.beta + self.exposure

    def hazard_marginal(self, k: int):
        return stats.gamma(self.shape[k], scale=1.0 / self.rate[k])


def _group_hazards(group: str, time: np.ndarray, event: np.ndarray, knots: np.ndarray, alpha, beta) -> GroupHazards:
    exposure, events = exposure_and_events(time, event, knots)
    return GroupHazards(
        group=group,
        alpha=alpha,
        beta=beta,
        events=events,
        exposure=exposure,
        n=int(time.size),
        log_ml=gamma_log_ml(alpha, beta, events, exposure),
    )


@dataclass(frozen=True, eq=False)
class PiecewiseExpModel:
    knots: np.ndarray  # interior knots
    groups: dict[str, GroupHazards]
    variable: str | None  # grouping factor, None for a pooled fit
    log_ml: float
    k_trace: dict[int, float]  # log marginal likelihood per candidate interval count
    design: DesignSpec
    ci_level: float = 0.95
    extra: dict = field(default_factory=dict)

    @property
    def n_intervals(self) -> int:
        return int(self.knots.size + 1)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return interval_bounds(self.knots)

    @property
    def description(self) -> str:
        if self.variable is None:
            return "one survival distribution"
        return f"separate survival distributions by {self.variable}"

    def group(self, name: str) -> GroupHazards:
        try:
            return self.groups[name]
        except KeyError:
            raise UserInputError(f"no group '{name}'; groups: {', '.join(self.groups)}") from None

    def summary(self, ci_level: float | None = None) -> list[InferenceSummary]:
        """Posterior hazard per group and interval."""
        level = ci_level or self.ci_level
        lower, upper = self.bounds
        rows = []
        for name, g in self.groups.items():
            for k in range(self.n_intervals):
                label = f"hazard[{name}, ({lower[k]:g}, {upper[k]:g}]]"
                rows.append(summarize_closed_form(g.hazard_marginal(k), level, null_value=None, label=label))
        return rows


def _split_groups(design: DesignSpec) -> tuple[str | None, dict[str, np.ndarray]]:
    if design.time is None or design.event is None:
        raise DesignError("survival fits need a Surv(time, event) response")
    if not design.terms:
        return None, {POOLED: np.ones(design.n, dtype=bool)}
    if len(design.terms) != 1 or design.terms[0] not in design.factor_levels:
        raise DesignError("survival fits take at most one categorical grouping variable (no covariate adjustment)")
    variable = design.terms[0]
    values = design.data[variable].values
    return variable, {lv: values == lv for lv in design.factor_levels[variable]}


def fit_survival(
    design: DesignSpec,
    config: SurvivalConfig | None = None,
    n_intervals: int | None = None,
    ci_level: float = 0.95,
) -> PiecewiseExpModel:
    """Fit per-group piecewise-exponential hazards.

    The interval count is shared across groups and chosen by the summed
    log marginal likelihood over 1..k_max, unless ``n_intervals`` fixes it.
    """
    config = config or SurvivalConfig()
    variable, masks = _split_groups(design)
    time, event = design.time, design.event
    if np.any(time <= 0):
        raise DataError("survival times must be positive")
    if not np.all(np.isin(event, (0.0, 1.0))):
        raise DataError("event indicator must be coded 0 (censored) / 1 (event)")
    for name, mask in masks.items():
        if not np.any(event[mask] == 1):
            raise DataError(f"group '{name}' has no events")

    event_times = time[event == 1]
    overall_rate = event_times.size / float(time.sum())
    beta0 = config.prior_exposure
    alpha0 = beta0 * overall_rate

    def evaluate(knots: np.ndarray) -> dict[str, GroupHazards]:
        k = knots.size + 1
        alpha, beta = np.full(k, alpha0), np.full(k, beta0)
        return {name: _group_hazards(name, time[m], event[m], knots, alpha, beta) for name, m in masks.items()}

    candidates = [n_intervals] if n_intervals is not None else range(1, config.k_max + 1)
    trace: dict[int, float] = {}
    best: tuple[float, np.ndarray, dict[str, GroupHazards]] | None = None
    for k in candidates:
        knots = interior_knots(event_times, k)
        effective = knots.size + 1
        if effective in trace:
            continue
        groups = evaluate(knots)
        total = sum(g.log_ml for g in groups.values())
        trace[effective] = total
        if best is None or total > best[0]:
            best = (total, knots, groups)
    log_ml, knots, groups = best
    logger.info("survival %s: %d interval(s), log marginal likelihood %.6g", design.formula, knots.size + 1, log_ml)
    return PiecewiseExpModel(
        knots=knots,
        groups=groups,
        variable=variable,
        log_ml=log_ml,
        k_trace=trace,
        design=design,
        ci_level=ci_level,
        extra={"prior_shape": alpha0, "prior_rate": beta0, "overall_rate": overall_rate},
    )


def survival_bayes_factor(a: PiecewiseExpModel, b: PiecewiseExpModel) -> BayesFactor:
    """Evidence for model ``a`` against model ``b`` on the same data."""
    for name, x, y in (("time", a.design.time, b.design.time), ("event", a.design.event, b.design.event)):
        if x.size != y.size or not np.allclose(np.sort(x), np.sort(y)):
            raise UserInputError(f"fits were made on different data ({name} values differ)")
    return BayesFactor.from_log(a.log_ml - b.log_ml, a.description, b.description)


def survival_group_bf(pooled: PiecewiseExpModel, grouped: PiecewiseExpModel) -> BayesFactor:
    """One distribution for every group against one distribution per group."""
    if pooled.variable is not None:
        raise UserInputError("the first fit must be the pooled (~ 1) fit")
    if grouped.variable is None:
        raise UserInputError("the second fit must be grouped")
    return survival_bayes_factor(pooled, grouped)


# curves -------------------------------------------------------------------------


def _overlap(t: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Time spent in each interval up to t: shape (len(t), K)."""
    lower, upper = interval_bounds(knots)
    return np.clip(t[:, None] - lower[None, :], 0.0, upper - lower)


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    group: str
    t: np.ndarray
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    mean: np.ndarray  # closed-form posterior mean of S(t)
    ci_level: float
    draws: AdaptiveDraws | None = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "group": self.group,
                "t": self.t,
                "median": self.median,
                "lower": self.lower,
                "upper": self.upper,
                "mean": self.mean,
            }
        )


def posterior_mean_survival(hazards: GroupHazards, knots: np.ndarray, t: np.ndarray) -> np.ndarray:
    """E[S(t)] = Π_k (rate_k / (rate_k + o_k(t)))^shape_k."""
    o = _overlap(np.asarray(t, dtype=float), knots)
    return np.exp(np.sum(hazards.shape * (np.log(hazards.rate) - np.log(hazards.rate + o)), axis=1))


def survival_curve(
    model: PiecewiseExpModel,
    group: str | None = None,
    times: np.ndarray | None = None,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> SurvivalCurve:
    """Posterior median and pointwise band of S(t) for one group."""
    target = target or PrecisionTarget(ci_level=model.ci_level)
    name = group or next(iter(model.groups))
    hazards = model.group(name)
    if times is None:
        times = np.linspace(0.0, float(model.design.time.max()), grid_size)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise UserInputError("survival curve times must be non-negative")

    o = _overlap(times, model.knots)
    shape, scale = hazards.shape, 1.0 / hazards.rate

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        lam = rng.gamma(shape, scale, size=(size, shape.size))
        return np.exp(-lam @ o.T)

    labels = [f"S({t:g})" for t in times]
    # S(0) = 1 for every draw, nothing to plan there
    monitor = [i for i, t in enumerate(times) if t > 0]
    draws = resolve_sampler(sampler).run(draw_fn, labels, target, monitor=monitor or None)
    half = target.alpha_half
    lower, median, upper = np.quantile(draws.draws, [half, 0.5, 1.0 - half], axis=0)
    return SurvivalCurve(
        group=name,
        t=times,
        median=median,
        lower=lower,
        upper=upper,
        mean=posterior_mean_survival(hazards, model.knots, times),
        ci_level=target.ci_level,
        draws=draws,
    )


def survival_curves(
    model: PiecewiseExpModel,
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> dict[str, SurvivalCurve]:
    times = np.linspace(0.0, float(model.design.time.max()), grid_size)
    return {name: survival_curve(model, name, times, sampler, target) for name in model.groups}


def curves_frame(curves: Mapping[str, SurvivalCurve]) -> pd.DataFrame:
    return pd.concat([c.to_frame() for c in curves.values()], ignore_index=True)


def median_survival_time(hazards: GroupHazards, knots: np.ndarray) -> float:
    """Time where the posterior-mean hazards put S at 1/2."""
    lower, upper = interval_bounds(knots)
    rate = hazards.shape / hazards.rate
    cum = 0.0
    target = math.log(2.0)
    for k in range(rate.size):
        width = upper[k] - lower[k]
        if cum + rate[k] * width >= target:
            return float(lower[k] + (target - cum) / rate[k])
        cum += rate[k] * width
    return math.inf
