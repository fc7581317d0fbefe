"""
Posterior summaries: point estimate, equal-tailed credible interval,
probability of direction, ROPE probability, EPR and Bayes-factor labels.
"""

import logging
import math
from collections.abc import Sequence
from typing import Literal

import numpy as np
from scipy import stats

from bayesics.inference.schema import InferenceSummary

logger = logging.getLogger(__name__)

CLOSED_FORM_FAMILIES = {"t", "norm", "gamma", "beta", "invgamma", "lognorm"}

# log1.125: half of a small effect on the ratio scale
SMALL_RATIO_HALF_WIDTH = math.log(1.125)

RopeKind = Literal["mean-difference", "linear-slope", "log-odds-slope", "log-rate-ratio"]

_JEFFREYS_STEPS = (
    (0.5, "Barely worth mentioning"),
    (1.0, "Substantial"),
    (1.5, "Strong"),
    (2.0, "Very strong"),
)

KEEP_DROP = ("keeping in the model", "excluding from the model")


def _check_level(ci_level: float) -> None:
    if not 0.0 < ci_level < 1.0:
        raise ValueError(f"ci_level must lie in (0, 1), got {ci_level}")


def _check_rope(rope: Sequence[float] | None) -> tuple[float, float] | None:
    if rope is None:
        return None
    lo, hi = float(rope[0]), float(rope[1])
    if not lo < hi:
        raise ValueError(f"ROPE bounds must satisfy lo < hi, got ({lo}, {hi})")
    return lo, hi


def weighted_quantile(values: np.ndarray, weights: np.ndarray, probs: Sequence[float] | float) -> np.ndarray:
    order = np.argsort(values)
    v = values[order]
    w = weights[order] / weights.sum()
    cum = np.cumsum(w) - 0.5 * w
    return np.interp(probs, cum, v)


def summarize_draws(
    draws: np.ndarray,
    ci_level: float = 0.95,
    rope: Sequence[float] | None = None,
    null_value: float = 0.0,
    label: str = "",
    weights: np.ndarray | None = None,
) -> InferenceSummary:
    """Summarise posterior draws; ``weights`` gives self-normalised importance weights."""
    _check_level(ci_level)
    rope = _check_rope(rope)
    draws = np.asarray(draws, dtype=float).ravel()
    if draws.size < 2:
        raise ValueError("need at least two draws to summarise")
    if not np.all(np.isfinite(draws)):
        raise ValueError(f"draws for '{label}' contain NaN or infinite values")

    alpha_half = (1.0 - ci_level) / 2.0
    if weights is None:
        w = np.full(draws.size, 1.0 / draws.size)
        lower, upper = np.quantile(draws, [alpha_half, 1.0 - alpha_half])
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != draws.shape or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be non-negative, one per draw, and not all zero")
        w = w / w.sum()
        lower, upper = weighted_quantile(draws, w, [alpha_half, 1.0 - alpha_half])

    above = float(w[draws > null_value].sum())
    below = float(w[draws < null_value].sum())
    tied = max(0.0, 1.0 - above - below)
    pdir = min(1.0, max(above, below) + 0.5 * tied)

    rope_prob = None
    if rope is not None:
        inside = (draws >= rope[0]) & (draws <= rope[1])
        rope_prob = float(min(1.0, w[inside].sum()))

    return InferenceSummary(
        label=label,
        post_mean=float(np.dot(w, draws)),
        ci_lower=float(lower),
        ci_upper=float(upper),
        ci_level=ci_level,
        prob_direction=pdir,
        rope_prob=rope_prob,
        rope_bounds=rope,
    )


def summarize_closed_form(
    dist,
    ci_level: float = 0.95,
    rope: Sequence[float] | None = None,
    null_value: float | None = 0.0,
    label: str = "",
) -> InferenceSummary:
    """Exact summary of a frozen scipy.stats distribution.

    Supported families: student-t, normal, gamma, beta, inverse-gamma and
    lognormal. ``null_value=None`` omits the probability of direction
    (variances, for instance).
    """
    _check_level(ci_level)
    rope = _check_rope(rope)
    name = getattr(getattr(dist, "dist", None), "name", None)
    if name not in CLOSED_FORM_FAMILIES:
        raise ValueError(f"no closed-form summary for distribution '{name}'")

    mean = float(dist.mean())
    if not math.isfinite(mean):
        raise ValueError(f"distribution for '{label}' has no finite mean; check its parameters")

    alpha_half = (1.0 - ci_level) / 2.0
    lower, upper = (float(v) for v in dist.ppf([alpha_half, 1.0 - alpha_half]))

    pdir = None
    if null_value is not None:
        below = float(dist.cdf(null_value))
        pdir = min(1.0, max(below, 1.0 - below))

    rope_prob = None
    if rope is not None:
        rope_prob = float(np.clip(dist.cdf(rope[1]) - dist.cdf(rope[0]), 0.0, 1.0))

    return InferenceSummary(
        label=label,
        post_mean=mean,
        ci_lower=lower,
        ci_upper=upper,
        ci_level=ci_level,
        prob_direction=pdir,
        rope_prob=rope_prob,
        rope_bounds=rope,
    )


def epr_draws(mu_g: np.ndarray, var_g: np.ndarray, mu_h: np.ndarray, var_h: np.ndarray) -> np.ndarray:
    """Per-draw Pr(Y_g > Y_h | parameters) for two normal populations."""
    arrays = [np.asarray(a, dtype=float).ravel() for a in (mu_g, var_g, mu_h, var_h)]
    if len({a.size for a in arrays}) != 1:
        raise ValueError("EPR needs the same number of draws for every parameter")
    mu_g, var_g, mu_h, var_h = arrays
    return stats.norm.cdf((mu_g - mu_h) / np.sqrt(var_g + var_h))


def epr(
    mu_g: np.ndarray,
    var_g: np.ndarray,
    mu_h: np.ndarray,
    var_h: np.ndarray,
    ci_level: float = 0.95,
    label: str = "EPR",
) -> InferenceSummary:
    """Exceedance in pairs rate, summarised against the no-separation value 0.5."""
    return summarize_draws(epr_draws(mu_g, var_g, mu_h, var_h), ci_level=ci_level, null_value=0.5, label=label)


def jeffreys_strength(log10_bf: float) -> str:
    magnitude = abs(log10_bf)
    for cut, name in _JEFFREYS_STEPS:
        if magnitude < cut:
            return name
    return "Decisive"


def label_from_log10(log10_bf: float, favors: tuple[str, str] | None = None) -> str:
    strength = jeffreys_strength(log10_bf)
    if favors is None:
        return strength
    side = favors[0] if log10_bf >= 0 else favors[1]
    return f"{strength} (in favor of {side})"


def jeffreys_label(bf: float, favors: tuple[str, str] | None = None) -> str:
    """Jeffreys' evidence category for ``bf``; ``favors`` names (numerator, denominator).

    >>> jeffreys_label(10.6, favors=KEEP_DROP)
    'Strong (in favor of keeping in the model)'
    """
    if not bf > 0:
        raise ValueError(f"Bayes factor must be positive, got {bf}")
    return label_from_log10(math.log10(bf), favors)


def default_rope(
    kind: RopeKind,
    covariate_sd: float | None = None,
    response_sd: float | None = None,
    binary: bool = False,
) -> tuple[float, float]:
    """Default region of practical equivalence on the estimand's own scale.

    Ratio-type kinds are returned on the link (log) scale; pass the result
    through ``exp_bounds`` to report odds or rate ratios.
    """
    for name, value in (("covariate_sd", covariate_sd), ("response_sd", response_sd)):
        if value is not None and not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")

    if kind == "mean-difference":
        if response_sd is None:
            raise ValueError("mean-difference ROPE needs the pooled response SD")
        half = 0.1 * response_sd
    elif kind == "linear-slope":
        if response_sd is None or covariate_sd is None:
            raise ValueError("linear-slope ROPE needs both response and covariate SDs")
        half = 0.1 * response_sd / covariate_sd
    elif kind in ("log-odds-slope", "log-rate-ratio"):
        if binary:
            half = SMALL_RATIO_HALF_WIDTH
        elif covariate_sd is None:
            raise ValueError(f"{kind} ROPE for a continuous covariate needs its SD")
        else:
            half = SMALL_RATIO_HALF_WIDTH / covariate_sd
    else:
        raise ValueError(f"unknown ROPE kind '{kind}'")
    return -half, half


def exp_bounds(bounds: tuple[float, float]) -> tuple[float, float]:
    return math.exp(bounds[0]), math.exp(bounds[1])
