"""Pieces shared by the model modules: band data, grids, ROPE per coefficient."""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from bayesics.errors import DesignError
from bayesics.formula.design import DesignSpec
from bayesics.inference.core import default_rope
from bayesics.sampling.engine import AdaptiveSampler

DEFAULT_GRID_SIZE = 100


@dataclass(frozen=True, eq=False)
class Band:
    """Pointwise band over one covariate, other covariates held at ``exemplar``."""

    variable: str
    x: np.ndarray
    center: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    ci_level: float
    kind: str
    exemplar: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {self.variable: self.x, "center": self.center, "lower": self.lower, "upper": self.upper}
        )

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "kind": self.kind,
            "ci_level": self.ci_level,
            "exemplar": self.exemplar,
            "x": [v if isinstance(v, str) else float(v) for v in self.x],
            "center": self.center.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }


def band_grid(
    design: DesignSpec,
    variable: str,
    exemplar: Mapping[str, float | str] | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Grid values for ``variable`` and the matching design rows."""
    if variable not in design.term_columns:
        raise DesignError(f"'{variable}' is not a term of {design.formula}")
    settings = design.exemplar(exemplar)
    col = design.data[variable]
    if col.is_numeric:
        x = np.linspace(float(np.min(col.values)), float(np.max(col.values)), grid_size)
    else:
        x = np.array(design.factor_levels[variable], dtype=object)
    rows = {t: [settings[t]] * len(x) for t in design.terms}
    rows[variable] = list(x)
    return x, design.encode(rows), {k: v for k, v in settings.items() if k != variable}


def coefficient_rope(
    design: DesignSpec,
    j: int,
    scale: str,
    response_sd: float | None = None,
) -> tuple[float, float] | None:
    """Default ROPE for coefficient ``j``; ``scale`` is "identity" or "log"."""
    if design.kinds[j] == "intercept":
        return None
    binary = design.kinds[j] == "factor" or design.is_binary(j)
    if scale == "identity":
        if response_sd is None:
            return None
        if binary:
            return default_rope("mean-difference", response_sd=response_sd)
        return default_rope("linear-slope", covariate_sd=design.sds[j], response_sd=response_sd)
    return default_rope("log-odds-slope", covariate_sd=design.sds[j], binary=binary)


def resolve_sampler(sampler: AdaptiveSampler | None) -> AdaptiveSampler:
    return sampler if sampler is not None else AdaptiveSampler()
