"""
Sample-size formulas for Monte Carlo accuracy of posterior summaries.

With L iid draws, the empirical p-quantile satisfies
    sqrt(L) (q̂ - q) -> N(0, p(1-p) / π(q)²)
so holding a credible-interval endpoint to ±ε with probability s takes
    L = p(1-p) (z / (ε π(q)))²
draws, whereas the posterior mean needs only
    M = Var(θ) (z / ε)².
z is the magnitude of the standard-normal (1-s)/2 quantile.
"""

import logging
import math

import numpy as np
from scipy import stats

from bayesics.errors import DegenerateDensityError
from bayesics.sampling.schema import PrecisionTarget, SamplePlan

logger = logging.getLogger(__name__)

MIN_PILOT_DRAWS = 100


def _z(s: float) -> float:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    return float(stats.norm.isf((1.0 - s) / 2.0))


def quantile_sample_size(alpha_half: float, s: float, epsilon: float, density: float) -> int:
    """Draws needed to pin the ``alpha_half`` quantile to ±epsilon with probability s."""
    if not 0.0 < alpha_half < 0.5:
        raise ValueError(f"alpha_half must lie in (0, 0.5), got {alpha_half}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not density > 0 or not math.isfinite(density):
        raise DegenerateDensityError(
            f"Posterior density at the quantile is {density}; draw a larger pilot sample."
        )
    z = _z(s)
    return math.ceil(alpha_half * (1.0 - alpha_half) * (z / (epsilon * density)) ** 2)


def mean_sample_size(variance: float, s: float, epsilon: float) -> int:
    """Draws needed to pin the posterior mean to ±epsilon with probability s."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    z = _z(s)
    return math.ceil(variance * (z / epsilon) ** 2)


def mcse_mean(draws: np.ndarray) -> float:
    """Monte Carlo standard error of the mean of iid draws."""
    draws = np.asarray(draws, dtype=float).ravel()
    if draws.size < 2:
        raise ValueError("need at least two draws")
    return float(np.std(draws, ddof=1) / math.sqrt(draws.size))


def mcse_quantile(draws: np.ndarray, p: float) -> float:
    """Monte Carlo standard error of the empirical p-quantile, sqrt(p(1-p)/L) / π(q)."""
    draws = np.asarray(draws, dtype=float).ravel()
    density = estimate_density_at_quantile(draws, p)
    return math.sqrt(p * (1.0 - p) / draws.size) / density


def sample_size_ratio(alpha: float, variance: float, density_at_quantile: float) -> float:
    """Ratio of quantile to mean sample sizes; free of ε and s."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if variance <= 0 or density_at_quantile <= 0:
        raise ValueError("variance and density must be positive")
    half = alpha / 2.0
    return half * (1.0 - half) / (variance * density_at_quantile**2)


def silverman_bandwidth(draws: np.ndarray) -> float:
    n = draws.size
    sd = float(np.std(draws, ddof=1))
    q75, q25 = np.percentile(draws, [75, 25])
    spread = min(sd, (q75 - q25) / 1.349)
    if spread <= 0:
        # IQR collapses on point masses; the SD still carries the scale
        spread = sd
    return 0.9 * spread * n ** (-0.2)


def estimate_density_at_quantile(draws: np.ndarray, p: float) -> float:
    """Gaussian-kernel density of the draws at their empirical p-quantile."""
    draws = np.asarray(draws, dtype=float).ravel()
    if draws.size < MIN_PILOT_DRAWS:
        raise ValueError(f"need at least {MIN_PILOT_DRAWS} pilot draws, got {draws.size}")
    if not np.all(np.isfinite(draws)):
        raise ValueError("pilot draws must be finite")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")

    bw = silverman_bandwidth(draws)
    if not bw > 0:
        raise DegenerateDensityError("Zero KDE bandwidth: all pilot draws are identical.")

    sd = float(np.std(draws, ddof=1))
    kde = stats.gaussian_kde(draws, bw_method=bw / sd)
    q = float(np.quantile(draws, p))  # numpy's default is the type-7 rule
    density = float(kde(q)[0])
    if not density > 0:
        raise DegenerateDensityError(
            f"Estimated density at the {p} quantile is zero; draw a larger pilot sample."
        )
    return density


def plan_from_pilot(
    pilot: np.ndarray,
    target: PrecisionTarget,
    relative_epsilon: float = 0.02,
    label: str = "",
) -> SamplePlan:
    """Plan both credible-interval tails and the mean for one estimand."""
    pilot = np.asarray(pilot, dtype=float).ravel()
    variance = float(np.var(pilot, ddof=1))
    if not variance > 0:
        raise DegenerateDensityError(f"Pilot draws for '{label}' have zero variance.")

    epsilon = target.epsilon
    if epsilon is None:
        epsilon = relative_epsilon * math.sqrt(variance)

    ah = target.alpha_half
    d_lo = estimate_density_at_quantile(pilot, ah)
    d_hi = estimate_density_at_quantile(pilot, 1.0 - ah)
    l_lo = quantile_sample_size(ah, target.s, epsilon, d_lo)
    l_hi = quantile_sample_size(ah, target.s, epsilon, d_hi)
    m = mean_sample_size(variance, target.s, epsilon)

    return SamplePlan(
        label=label,
        pilot_size=pilot.size,
        epsilon=epsilon,
        s=target.s,
        ci_level=target.ci_level,
        density_at_lower=d_lo,
        density_at_upper=d_hi,
        l_lower=l_lo,
        l_upper=l_hi,
        m=m,
        total_draws=max(pilot.size, l_lo, l_hi, m),
    )
