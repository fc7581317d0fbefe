"""
GLM families on their canonical links.

Pointwise log-likelihoods and their derivatives are vectorised over a
leading draw axis: ``eta`` is (S, n) and ``aux`` (log σ² or log φ) is
(S, 1). Families without an auxiliary parameter ignore ``aux``.
"""

import numpy as np
from scipy import special

from bayesics.errors import DataError

_ETA_CLIP = 700.0
LOG_2PI = float(np.log(2.0 * np.pi))


def _exp(eta: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(eta, -_ETA_CLIP, _ETA_CLIP))


class GLMFamily:
    name: str = ""
    link: str = ""
    aux_name: str | None = None  # name of exp(aux) when the family has one
    ratio_scale: bool = False  # coefficients exponentiate to odds or rate ratios

    @property
    def has_aux(self) -> bool:
        return self.aux_name is not None

    def validate(self, y: np.ndarray) -> None:
        if not np.all(np.isfinite(y)):
            raise DataError(f"{self.name} response contains non-finite values")

    def linkfun(self, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def linkinv(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def variance(self, mu: np.ndarray, aux: np.ndarray | None) -> np.ndarray:
        raise NotImplementedError

    def loglik(self, y: np.ndarray, eta: np.ndarray, aux: np.ndarray | None) -> np.ndarray:
        raise NotImplementedError

    def grad_eta(self, y: np.ndarray, eta: np.ndarray, aux: np.ndarray | None) -> np.ndarray:
        raise NotImplementedError

    def grad_aux(self, y: np.ndarray, eta: np.ndarray, aux: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no auxiliary parameter")

    def info_weights(self, eta: np.ndarray, aux: np.ndarray | None) -> np.ndarray:
        """Expected information per observation for η."""
        raise NotImplementedError

    def simulate(self, rng: np.random.Generator, eta: np.ndarray, aux: np.ndarray | None) -> np.ndarray:
        raise NotImplementedError

    def start_eta(self, y: np.ndarray) -> float:
        return float(self.linkfun(np.asarray(np.mean(y))))

    def start_aux(self, y: np.ndarray) -> float:
        return 0.0


class Gaussian(GLMFamily):
    name = "gaussian"
    link = "identity"
    aux_name = "sigma2"

    def linkfun(self, mu):
        return mu

    def linkinv(self, eta):
        return eta

    def variance(self, mu, aux):
        return np.broadcast_to(np.exp(aux), np.shape(mu))

    def loglik(self, y, eta, aux):
        return -0.5 * (LOG_2PI + aux) - 0.5 * (y - eta) ** 2 * np.exp(-aux)

    def grad_eta(self, y, eta, aux):
        return (y - eta) * np.exp(-aux)

    def grad_aux(self, y, eta, aux):
        return -0.5 + 0.5 * (y - eta) ** 2 * np.exp(-aux)

    def info_weights(self, eta, aux):
        return np.broadcast_to(np.exp(-aux), np.shape(eta))

    def simulate(self, rng, eta, aux):
        return eta + np.sqrt(np.exp(aux)) * rng.standard_normal(np.shape(eta))

    def start_aux(self, y):
        return float(np.log(np.var(y, ddof=1)))


class Binomial(GLMFamily):
    """Bernoulli responses on the logit link."""

    name = "binomial"
    link = "logit"
    ratio_scale = True

    def validate(self, y):
        super().validate(y)
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise DataError("binomial response must be coded 0/1 (or be a two-level factor)")

    def linkfun(self, mu):
        mu = np.clip(mu, 1e-6, 1.0 - 1e-6)
        return special.logit(mu)

    def linkinv(self, eta):
        return special.expit(eta)

    def variance(self, mu, aux):
        return mu * (1.0 - mu)

    def loglik(self, y, eta, aux):
        return y * eta - np.logaddexp(0.0, eta)

    def grad_eta(self, y, eta, aux):
        return y - special.expit(eta)

    def info_weights(self, eta, aux):
        mu = special.expit(eta)
        return mu * (1.0 - mu)

    def simulate(self, rng, eta, aux):
        return (rng.random(np.shape(eta)) < special.expit(eta)).astype(float)


class Poisson(GLMFamily):
    name = "poisson"
    link = "log"
    ratio_scale = True

    def validate(self, y):
        super().validate(y)
        if np.any(y < 0) or not np.all(y == np.round(y)):
            raise DataError(f"{self.name} response must be non-negative integer counts")

    def linkfun(self, mu):
        return np.log(np.maximum(mu, 1e-3))

    def linkinv(self, eta):
        return _exp(eta)

    def variance(self, mu, aux):
        return mu

    def loglik(self, y, eta, aux):
        return y * eta - _exp(eta) - special.gammaln(y + 1.0)

    def grad_eta(self, y, eta, aux):
        return y - _exp(eta)

    def info_weights(self, eta, aux):
        return _exp(eta)

    def simulate(self, rng, eta, aux):
        return rng.poisson(_exp(eta)).astype(float)


class NegativeBinomial(Poisson):
    """NB2: variance μ + μ²/φ, with aux = log φ."""

    name = "negbinom"
    aux_name = "size"

    def variance(self, mu, aux):
        return mu + mu**2 * np.exp(-aux)

    def loglik(self, y, eta, aux):
        phi = np.exp(aux)
        eta = np.clip(eta, -_ETA_CLIP, _ETA_CLIP)
        log_denom = np.logaddexp(aux, eta)  # log(φ + μ)
        return (
            special.gammaln(y + phi)
            - special.gammaln(phi)
            - special.gammaln(y + 1.0)
            + phi * (aux - log_denom)
            + y * (eta - log_denom)
        )

    def grad_eta(self, y, eta, aux):
        phi = np.exp(aux)
        mu = _exp(eta)
        return phi * (y - mu) / (phi + mu)

    def grad_aux(self, y, eta, aux):
        phi = np.exp(aux)
        mu = _exp(eta)
        return phi * (
            special.digamma(y + phi)
            - special.digamma(phi)
            + aux
            - np.logaddexp(aux, eta)
            + 1.0
            - (y + phi) / (phi + mu)
        )

    def info_weights(self, eta, aux):
        phi = np.exp(aux)
        mu = _exp(eta)
        return mu * phi / (phi + mu)

    def simulate(self, rng, eta, aux):
        phi = np.broadcast_to(np.exp(aux), np.shape(eta))
        mu = _exp(eta)
        return rng.negative_binomial(phi, phi / (phi + mu)).astype(float)


FAMILIES: dict[str, type[GLMFamily]] = {
    "gaussian": Gaussian,
    "binomial": Binomial,
    "poisson": Poisson,
    "negbinom": NegativeBinomial,
}


def get_family(name: str | GLMFamily) -> GLMFamily:
    if isinstance(name, GLMFamily):
        return name
    try:
        return FAMILIES[name]()
    except KeyError:
        raise ValueError(f"unknown family '{name}'; expected one of {', '.join(FAMILIES)}") from None
