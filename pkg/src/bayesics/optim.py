"""Damped Newton minimisation with step halving."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from bayesics.errors import ConvergenceError
from bayesics.schemas.bs_config import NewtonConfig

logger = logging.getLogger(__name__)

MAX_HALVINGS = 40


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    iterations: int
    trace: tuple[float, ...]


def finite_difference_hessian(grad: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
    """Symmetrised central differences of an analytic gradient."""
    x = np.asarray(x, dtype=float)
    q = x.size
    H = np.empty((q, q))
    for j in range(q):
        h = rel_step * max(1.0, abs(x[j]))
        e = np.zeros(q)
        e[j] = h
        H[:, j] = (grad(x + e) - grad(x - e)) / (2.0 * h)
    return 0.5 * (H + H.T)


def _newton_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    # Levenberg-style shift until H + λI is positive definite
    shift = 0.0
    eye = np.eye(H.shape[0])
    scale = max(1.0, float(np.max(np.abs(np.diag(H)))))
    for _ in range(60):
        try:
            L = np.linalg.cholesky(H + shift * eye)
            return -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            shift = max(2.0 * shift, 1e-8 * scale)
    return -g / scale


def newton_minimize(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    hess: Callable[[np.ndarray], np.ndarray] | None = None,
    config: NewtonConfig | None = None,
    label: str = "objective",
) -> NewtonResult:
    """Minimise ``fun`` from ``x0``.

    Converges when the largest step component falls below ``tol`` relative
    to the iterate, or the gradient vanishes. ``hess`` defaults to finite
    differences of ``grad``.
    """
    config = config or NewtonConfig()
    hess = hess or (lambda x: finite_difference_hessian(grad, x))
    x = np.asarray(x0, dtype=float).copy()
    value = float(fun(x))
    if not np.isfinite(value):
        raise ConvergenceError(f"{label} is not finite at the starting point")
    trace = [value]

    for it in range(1, config.max_iter + 1):
        g = grad(x)
        H = hess(x)
        step = _newton_direction(H, g)

        t = 1.0
        for _ in range(MAX_HALVINGS):
            candidate = x + t * step
            new_value = float(fun(candidate))
            if np.isfinite(new_value) and new_value <= value + 1e-4 * t * float(g @ step):
                break
            t *= 0.5
        else:
            # no decrease along the direction: at the optimum to machine precision
            candidate, new_value = x, value

        moved = t * step
        x, value = candidate, new_value
        trace.append(value)

        if np.max(np.abs(moved)) <= config.tol * (1.0 + np.max(np.abs(x))) or np.max(np.abs(g)) < config.tol:
            g = grad(x)
            logger.debug("%s converged in %d Newton steps (value %.6g)", label, it, value)
            return NewtonResult(x=x, value=value, gradient=g, hessian=hess(x), iterations=it, trace=tuple(trace))

    raise ConvergenceError(f"{label}: Newton iterations hit the cap of {config.max_iter}", trace)
