"""
Master configuration for bayesics (bayesics.toml).

Search order:
  1. explicit path (``--config``)
  2. $XDG_CONFIG_HOME/bayesics/bayesics.toml
  3. ./bayesics.toml  (working directory)

If not found, all defaults apply silently.
"""

import logging
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # Python 3.10: tomli is the same API under another name
    import tomli as tomllib

from pydantic import BaseModel, Field, ValidationError

logger = logging.getLogger(__name__)


class SamplingConfig(BaseModel):
    pilot_size: int = Field(500, ge=100)
    relative_epsilon: float = Field(0.02, gt=0)  # default ε as a fraction of the pilot SD
    hard_cap: int = Field(10_000_000, ge=1)
    batch_size: int = Field(8192, ge=1)
    threads: int = Field(1, ge=1)


class VBConfig(BaseModel):
    step_size: float = Field(0.05, gt=0)
    mc_samples: int = Field(10, ge=1)
    max_steps: int = Field(50_000, ge=1)
    window: int = Field(50, ge=2)
    rel_tol: float = Field(1e-4, gt=0)
    averaging_steps: int = Field(200, ge=0)
    separation_threshold: float = Field(15.0, gt=0)


class NewtonConfig(BaseModel):
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(200, ge=1)


class SurvivalConfig(BaseModel):
    k_max: int = Field(10, ge=1)
    prior_exposure: float = Field(0.1, gt=0)  # β_k of every gamma hazard prior


class BMAConfig(BaseModel):
    max_terms: int = Field(15, ge=1)


class PValueConfig(BaseModel):
    epsilon: float = Field(0.01, gt=0, lt=0.5)  # MC margin on the p-value itself


class BayesicsConfig(BaseModel):
    sampling: SamplingConfig = SamplingConfig()
    vb: VBConfig = VBConfig()
    newton: NewtonConfig = NewtonConfig()
    survival: SurvivalConfig = SurvivalConfig()
    bma: BMAConfig = BMAConfig()
    pvalue: PValueConfig = PValueConfig()


def config_paths(override_path: str | None = None) -> list[str]:
    paths: list[str] = []
    if override_path:
        paths.append(override_path)

    # XDG_CONFIG_HOME (default ~/.config)
    xdg = os.environ.get("XDG_CONFIG_HOME", os.path.expanduser("~/.config"))
    paths.append(os.path.join(xdg, "bayesics", "bayesics.toml"))

    paths.append(os.path.join(os.getcwd(), "bayesics.toml"))
    return paths


def load_config(override_path: str | None = None) -> BayesicsConfig:
    """
    Load bayesics.toml from the override path, XDG config dir, or cwd.
    Returns defaults if no file is found.
    """
    for path in config_paths(override_path):
        if os.path.isfile(path):
            try:
                with open(path, "rb") as f:
                    data = tomllib.load(f)
                logger.debug("Loaded configuration from %s", path)
                return BayesicsConfig.model_validate(data)
            except (tomllib.TOMLDecodeError, ValidationError) as e:
                logger.warning("Ignoring bad config %s: %s", path, e)
                continue

    return BayesicsConfig()
