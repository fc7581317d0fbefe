"""
Loss-likelihood bootstrap for GLM-type regressions.

Each replicate draws Dirichlet(1, ..., 1) weights over the rows (normalised
standard exponentials) and minimises the weighted loss Σᵢ n·wᵢ·ℓ(yᵢ, xᵢᵀβ).
The loss defaults to the family's negative log-likelihood. Replicates are
solved in batches by a vectorised damped Newton started at the unweighted
minimiser.
"""

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from bayesics.errors import ConvergenceError, DesignError, SeparationError, UserInputError
from bayesics.formula.design import DesignSpec, require_full_rank
from bayesics.inference.core import exp_bounds, summarize_draws
from bayesics.inference.schema import InferenceSummary
from bayesics.models.common import DEFAULT_GRID_SIZE, Band, band_grid, coefficient_rope, resolve_sampler
from bayesics.models.glm import separated_terms
from bayesics.optim import MAX_HALVINGS
from bayesics.sampling.engine import AdaptiveDraws, AdaptiveSampler
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import NewtonConfig

logger = logging.getLogger(__name__)

REPLICATE_CAP = 100_000
# elements of the (batch, n) weight matrix solved at once
BATCH_ELEMENTS = 2_000_000

PointwiseFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LossSpec:
    """Pointwise loss ℓ(y, η) with its first two η-derivatives.

    ``d2`` must be non-negative so the weighted loss is convex in β.
    """

    name: str
    value: PointwiseFn
    d1: PointwiseFn
    d2: PointwiseFn
    linkinv: Callable[[np.ndarray], np.ndarray]
    ratio_scale: bool = False


def _clipped_exp(eta: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(eta, -700.0, 700.0))


SQUARED = LossSpec(
    name="squared",
    value=lambda y, eta: 0.5 * (y - eta) ** 2,
    d1=lambda y, eta: eta - y,
    d2=lambda y, eta: np.ones_like(eta),
    linkinv=lambda eta: eta,
)

LOGISTIC = LossSpec(
    name="logistic",
    value=lambda y, eta: np.logaddexp(0.0, eta) - y * eta,
    d1=lambda y, eta: special.expit(eta) - y,
    d2=lambda y, eta: special.expit(eta) * (1.0 - special.expit(eta)),
    linkinv=special.expit,
    ratio_scale=True,
)

POISSON = LossSpec(
    name="poisson",
    value=lambda y, eta: _clipped_exp(eta) - y * eta,
    d1=lambda y, eta: _clipped_exp(eta) - y,
    d2=lambda y, eta: _clipped_exp(eta),
    linkinv=_clipped_exp,
    ratio_scale=True,
)

# self-information loss per family (constants in y dropped)
SELF_INFORMATION = {"gaussian": SQUARED, "binomial": LOGISTIC, "poisson": POISSON}
LOSSES = {loss.name: loss for loss in (SQUARED, LOGISTIC, POISSON)}
# losses whose minimiser runs off under separated data
LOSS_FAMILIES = {"logistic": "binomial", "poisson": "poisson"}


def get_loss(family: str = "gaussian", loss: str | LossSpec = "self-information") -> LossSpec:
    if isinstance(loss, LossSpec):
        return loss
    if loss == "self-information":
        try:
            return SELF_INFORMATION[family]
        except KeyError:
            raise UserInputError(
                f"no self-information loss for family '{family}'; expected one of {', '.join(SELF_INFORMATION)}"
            ) from None
    try:
        return LOSSES[loss]
    except KeyError:
        raise UserInputError(f"unknown loss '{loss}'; expected self-information or {', '.join(LOSSES)}") from None


def _weighted_newton(
    loss: LossSpec,
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    beta0: np.ndarray,
    config: NewtonConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Minimise Σᵢ wᵢ ℓ(yᵢ, xᵢᵀβ) for every row of ``weights`` at once.

    Returns (β of shape (B, p), converged mask of shape (B,)).
    """
    B, p = weights.shape[0], X.shape[1]
    beta = np.broadcast_to(beta0, (B, p)).copy()
    converged = np.zeros(B, dtype=bool)
    ridge = 1e-10 * np.eye(p)

    def objective(b: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.sum(w * loss.value(y, b @ X.T), axis=1)

    value = objective(beta, weights)
    for _ in range(config.max_iter):
        active = ~converged
        if not active.any():
            break
        b, w = beta[active], weights[active]
        eta = b @ X.T
        g = (w * loss.d1(y, eta)) @ X
        H = np.einsum("bi,ij,ik->bjk", w * loss.d2(y, eta), X, X) + ridge
        step = -np.linalg.solve(H, g[..., None])[..., 0]

        old = value[active]
        slope = np.sum(g * step, axis=1)
        t = np.ones(b.shape[0])
        accepted = np.zeros(b.shape[0], dtype=bool)
        new_b, new_value = b.copy(), old.copy()
        for _ in range(MAX_HALVINGS):
            pending = ~accepted
            if not pending.any():
                break
            cand = b[pending] + t[pending, None] * step[pending]
            cand_value = objective(cand, w[pending])
            ok = np.isfinite(cand_value) & (cand_value <= old[pending] + 1e-4 * t[pending] * slope[pending])
            idx = np.flatnonzero(pending)
            new_b[idx[ok]] = cand[ok]
            new_value[idx[ok]] = cand_value[ok]
            accepted[idx[ok]] = True
            t[idx[~ok]] *= 0.5
        # rows with no decrease are at their optimum to machine precision
        moved = np.where(accepted[:, None], t[:, None] * step, 0.0)

        beta[active] = new_b
        value[active] = new_value
        small_step = np.max(np.abs(moved), axis=1) <= config.tol * (1.0 + np.max(np.abs(new_b), axis=1))
        flat = np.max(np.abs(g), axis=1) < config.tol
        converged[np.flatnonzero(active)[small_step | flat]] = True
    return beta, converged


@dataclass(frozen=True, eq=False)
class NpGLMFit:
    design: DesignSpec
    loss: LossSpec
    draws: AdaptiveDraws
    mle: np.ndarray
    ci_level: float = 0.95
    rope_overrides: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.design.labels

    @property
    def n_replicates(self) -> int:
        return self.draws.total_draws

    def coef(self) -> dict[str, float]:
        return dict(zip(self.labels, self.draws.draws.mean(axis=0).tolist()))

    def vcov(self) -> np.ndarray:
        return np.atleast_2d(np.cov(self.draws.draws, rowvar=False))

    def credint(self, ci_level: float | None = None) -> dict[str, tuple[float, float]]:
        return {s.label: (s.ci_lower, s.ci_upper) for s in self.summary(ci_level, interpretable_scale=False)}

    def rope_for(self, j: int) -> tuple[float, float] | None:
        label = self.labels[j]
        if label in self.rope_overrides:
            return self.rope_overrides[label]
        if self.loss.ratio_scale:
            return coefficient_rope(self.design, j, "log")
        return coefficient_rope(self.design, j, "identity", float(np.std(self.design.y, ddof=1)))

    def summary(self, ci_level: float | None = None, interpretable_scale: bool = True) -> list[InferenceSummary]:
        level = ci_level or self.ci_level
        on_ratio = self.loss.ratio_scale and interpretable_scale
        rows = []
        for j, label in enumerate(self.labels):
            values = self.draws.draws[:, j]
            rope = self.rope_for(j)
            if on_ratio and rope is not None and label not in self.rope_overrides:
                rope = exp_bounds(rope)
            rows.append(
                summarize_draws(
                    np.exp(values) if on_ratio else values,
                    level,
                    rope=rope,
                    null_value=1.0 if on_ratio else 0.0,
                    label=label,
                )
            )
        return rows


def fit_np_glm(
    design: DesignSpec,
    family: str = "gaussian",
    loss: str | LossSpec = "self-information",
    sampler: AdaptiveSampler | None = None,
    target: PrecisionTarget | None = None,
    config: NewtonConfig | None = None,
    rope_overrides: Mapping[str, tuple[float, float]] | None = None,
) -> NpGLMFit:
    if design.y is None:
        raise DesignError("the loss-likelihood bootstrap needs a single response")
    require_full_rank(design.X, design.labels)
    loss = get_loss(family, loss)
    separated = separated_terms(design, LOSS_FAMILIES.get(loss.name, ""))
    if separated:
        raise SeparationError(", ".join(separated), math.inf)
    config = config or NewtonConfig()
    target = target or PrecisionTarget()
    X, y = design.X, design.y
    n = design.n

    # all weights equal to 1/n: the plain minimiser, and the start for every replicate
    start = np.zeros(design.p)
    start[0] = float(np.mean(y)) if not loss.ratio_scale else 0.0
    mle, ok = _weighted_newton(loss, X, y, np.ones((1, n)), start, config)
    if not ok[0]:
        raise ConvergenceError(f"unweighted {loss.name} loss minimisation did not converge")
    mle = mle[0]
    logger.debug("npglm %s: unweighted minimiser %s", design.formula, np.round(mle, 6))

    def draw_fn(rng: np.random.Generator, size: int) -> np.ndarray:
        w = n * replicate_weights(rng, n, size)
        beta, ok = _weighted_newton(loss, X, y, w, mle, config)
        if not ok.all():
            failed = np.flatnonzero(~ok)
            logger.warning("Retrying %d bootstrap replicate(s) with fresh weights", failed.size)
            w_new = n * replicate_weights(rng, n, failed.size)
            retry, ok_retry = _weighted_newton(loss, X, y, w_new, mle, config)
            if not ok_retry.all():
                raise ConvergenceError(
                    f"bootstrap replicate {int(failed[np.flatnonzero(~ok_retry)[0]])} of this batch did not "
                    f"converge after a retry with fresh weights"
                )
            beta[failed] = retry
        return beta

    batch = max(1, min(BATCH_ELEMENTS // max(n, 1), 4096))
    draws = resolve_sampler(sampler).run(draw_fn, design.labels, target, batch_size=batch, hard_cap=REPLICATE_CAP)
    logger.info("npglm %s: %d replicates", design.formula, draws.total_draws)
    return NpGLMFit(
        design=design,
        loss=loss,
        draws=draws,
        mle=mle,
        ci_level=target.ci_level,
        rope_overrides=dict(rope_overrides or {}),
    )


def np_credible_band(
    fit: NpGLMFit,
    variable: str,
    exemplar: Mapping[str, float | str] | None = None,
    ci_level: float | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> Band:
    """Pointwise quantiles of the per-replicate fitted curves.

    The band describes the spread of the loss minimiser, not a regression
    line any replicate actually fitted.
    """
    level = ci_level or fit.ci_level
    x, rows, settings = band_grid(fit.design, variable, exemplar, grid_size)
    curves = fit.loss.linkinv(fit.draws.draws @ rows.T)
    half = (1.0 - level) / 2.0
    lower, center, upper = np.quantile(curves, [half, 0.5, 1.0 - half], axis=0)
    return Band(variable, x, center, lower, upper, level, "credible", settings)


def replicate_weights(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Dirichlet(1, ..., 1) weight vectors, one per row; rows sum to 1."""
    w = rng.standard_exponential((size, n))
    return w / w.sum(axis=1, keepdims=True)


def weighted_minimizer(
    design: DesignSpec,
    weights: np.ndarray,
    family: str = "gaussian",
    loss: str | LossSpec = "self-information",
    config: NewtonConfig | None = None,
) -> np.ndarray:
    """Minimiser of Σᵢ n·wᵢ·ℓ for given weight rows; shape (B, p)."""
    loss = get_loss(family, loss)
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if weights.shape[1] != design.n:
        raise ValueError(f"weights have {weights.shape[1]} columns, design has {design.n} rows")
    scaled = design.n * weights / weights.sum(axis=1, keepdims=True)
    beta, ok = _weighted_newton(loss, design.X, design.y, scaled, np.zeros(design.p), config or NewtonConfig())
    if not ok.all():
        raise ConvergenceError(f"{int((~ok).sum())} weighted minimisation(s) did not converge")
    return beta
