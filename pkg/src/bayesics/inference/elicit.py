"""Prior elicitation: Beta and inverse-gamma parameters matching stated beliefs."""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import optimize, stats

logger = logging.getLogger(__name__)

SHAPE_BOX = (1e-3, 1e3)

# R² in (0.1, 0.9) with probability 1/2 puts σ² between these multiples of s_y²
R2_QUARTILE_PROBS = (0.25, 0.75)
R2_QUARTILE_FACTORS = (1.0 - 0.9**2, 1.0 - 0.1**2)


@dataclass(frozen=True)
class BetaParms:
    shape1: float
    shape2: float
    exact: bool


@dataclass(frozen=True)
class InvGammaParms:
    shape: float
    rate: float
    exact: bool

    def dist(self):
        return stats.invgamma(self.shape, scale=self.rate)


def find_beta_parms(target_mean: float, target_quantile_prob: float, target_quantile_value: float) -> BetaParms:
    """Beta(a, b) with the given mean whose quantile comes as close as possible to the target.

    The mean is enforced exactly through b = a (1 - m) / m; a is root-found
    on a log scale. When no a in the search box hits the quantile the best
    approximation is returned with ``exact=False``.
    """
    m, p, v = target_mean, target_quantile_prob, target_quantile_value
    if not 0.0 < m < 1.0:
        raise ValueError(f"mean must lie in (0, 1), got {m}")
    if not 0.0 < p < 1.0 or not 0.0 < v < 1.0:
        raise ValueError("quantile probability and value must lie in (0, 1)")

    def shape2(a: float) -> float:
        return a * (1.0 - m) / m

    # Every symmetric Beta has mean = median = 1/2; report the uniform.
    if math.isclose(m, 0.5) and math.isclose(p, 0.5) and math.isclose(v, 0.5):
        return BetaParms(1.0, 1.0, exact=True)

    def gap(log_a: float) -> float:
        a = math.exp(log_a)
        return float(stats.beta.ppf(p, a, shape2(a))) - v

    lo, hi = math.log(SHAPE_BOX[0]), math.log(SHAPE_BOX[1])
    grid = np.linspace(lo, hi, 121)
    gaps = np.array([gap(x) for x in grid])
    sign_change = np.nonzero(np.sign(gaps[:-1]) * np.sign(gaps[1:]) <= 0)[0]
    if sign_change.size:
        i = int(sign_change[0])
        log_a = optimize.brentq(gap, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14, maxiter=500)
        a = math.exp(log_a)
        exact = abs(gap(log_a)) < 1e-8
        return BetaParms(a, shape2(a), exact=exact)

    i = int(np.argmin(np.abs(gaps)))
    res = optimize.minimize_scalar(
        lambda x: abs(gap(x)),
        bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]),
        method="bounded",
    )
    a = math.exp(res.x)
    logger.warning(
        "No Beta with mean %.4g has its %.4g quantile at %.4g; returning the closest match.", m, p, v
    )
    return BetaParms(a, shape2(a), exact=False)


def find_invgamma_parms(
    mode: Literal["quantiles", "r-squared"] = "quantiles",
    q1_prob: float | None = None,
    q1_value: float | None = None,
    q2_prob: float | None = None,
    q2_value: float | None = None,
    response_variance: float | None = None,
) -> InvGammaParms:
    """Inverse-gamma (shape, rate) matching two quantiles.

    ``mode="r-squared"`` puts prior quartiles of σ² at 0.19·s_y² and
    0.99·s_y², i.e. 50% prior probability that R² lies in (0.1, 0.9).

    The rate is a scale parameter, so for a fixed shape it is solved exactly
    from the first quantile; only the shape needs a 1-D root search.
    """
    if mode == "r-squared":
        if response_variance is None or not response_variance > 0:
            raise ValueError("r-squared mode needs a positive response_variance")
        q1_prob, q2_prob = R2_QUARTILE_PROBS
        q1_value = R2_QUARTILE_FACTORS[0] * response_variance
        q2_value = R2_QUARTILE_FACTORS[1] * response_variance
    elif mode != "quantiles":
        raise ValueError(f"unknown mode '{mode}'")

    if None in (q1_prob, q1_value, q2_prob, q2_value):
        raise ValueError("quantiles mode needs q1_prob, q1_value, q2_prob and q2_value")
    if not (0.0 < q1_prob < q2_prob < 1.0):
        raise ValueError("need 0 < q1_prob < q2_prob < 1")
    if not (0.0 < q1_value < q2_value):
        raise ValueError("need 0 < q1_value < q2_value")

    def rate_for(shape: float) -> float:
        return q1_value / float(stats.invgamma.ppf(q1_prob, shape))

    def gap(log_shape: float) -> float:
        shape = math.exp(log_shape)
        upper = rate_for(shape) * float(stats.invgamma.ppf(q2_prob, shape))
        if not (upper > 0 and math.isfinite(upper)):
            return math.nan
        return math.log(upper) - math.log(q2_value)

    lo, hi = math.log(SHAPE_BOX[0]), math.log(SHAPE_BOX[1])
    grid = np.linspace(lo, hi, 121)
    with np.errstate(all="ignore"):
        gaps = np.array([gap(x) for x in grid])
    finite = np.isfinite(gaps)
    grid, gaps = grid[finite], gaps[finite]
    sign_change = np.nonzero(np.sign(gaps[:-1]) * np.sign(gaps[1:]) <= 0)[0]
    if not sign_change.size:
        shape = math.exp(grid[int(np.argmin(np.abs(gaps)))])
        logger.warning("No inverse gamma in the search box matches both quantiles; returning the closest.")
        return InvGammaParms(shape, rate_for(shape), exact=False)

    i = int(sign_change[0])
    log_shape = optimize.brentq(gap, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14, maxiter=500)
    shape = math.exp(log_shape)
    return InvGammaParms(shape, rate_for(shape), exact=abs(gap(log_shape)) < 1e-6)
