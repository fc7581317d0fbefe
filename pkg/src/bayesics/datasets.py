"""
Demo data: seeded simulation generators and the fixture CSV loader.

Fixture CSVs (indo_rct.csv, GBSG2.csv) are looked up in $BAYESICS_FIXTURE_DIR
when it is set, otherwise in the repository's tests/data directory.
"""

import logging
import os
from pathlib import Path

import numpy as np
import pandas as pd

from bayesics.errors import DataError
from bayesics.formula.data import Dataset, read_csv

logger = logging.getLogger(__name__)

FIXTURE_ENV = "BAYESICS_FIXTURE_DIR"
REPO_FIXTURE_DIR = Path(__file__).resolve().parents[2] / "tests" / "data"
FIXTURES = {
    "indo_rct": "indo_rct.csv",
    "GBSG2": "GBSG2.csv",
}
# categorical columns that hold numbers in the CSVs
FIXTURE_TYPE_HINTS = {
    "indo_rct": {"outcome": "categorical"},
    "GBSG2": {},
}
DEMO_SEED = 2026


def negbinom_demo(seed: int = DEMO_SEED, n: int = 500) -> Dataset:
    """Overdispersed counts: log μ = -2 + x1 + 2·[x3 = c] + time, NB size 0.7.

    x2 is pure noise; x3 has five equal blocks a..e.
    """
    if n % 5:
        raise ValueError("n must be a multiple of 5")
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(n)
    x2 = rng.standard_normal(n)
    x3 = np.repeat(list("abcde"), n // 5)
    time = rng.exponential(1.0, n)
    mu = np.exp(-2.0 + x1 + 2.0 * (x3 == "c") + time)
    size = 0.7
    outcome = rng.negative_binomial(size, size / (size + mu))
    frame = pd.DataFrame({"x1": x1, "x2": x2, "x3": x3, "time": time, "outcome": outcome})
    return Dataset.from_frame(frame, type_hints={"x3": "categorical"})


def misspecified_regression(seed: int = DEMO_SEED, n: int = 100) -> Dataset:
    """y = 20x² + Gamma(2, rate 0.5) noise with x ~ U(0, 1): wrong for a straight line."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, n)
    y = 20.0 * x**2 + rng.gamma(2.0, 2.0, n)
    return Dataset.from_frame(pd.DataFrame({"x": x, "y": y}))


def simple_regression(
    seed: int = DEMO_SEED,
    n: int = 25,
    slope: float = 0.25,
    sd: float = 1.0,
) -> Dataset:
    """y = slope·x + N(0, sd²) with x ~ N(0, 1) and zero intercept."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = slope * x + sd * rng.standard_normal(n)
    return Dataset.from_frame(pd.DataFrame({"x": x, "y": y}))


def mediation_demo(seed: int = DEMO_SEED, n: int = 2000, a: float = 1.0, b: float = 2.0, direct: float = 0.5) -> Dataset:
    """Randomised 0/1 treatment, m = a·treat + w + e, y = direct·treat + b·m + w + e."""
    rng = np.random.default_rng(seed)
    treat = rng.integers(0, 2, n).astype(float)
    w = rng.standard_normal(n)
    m = a * treat + w + rng.standard_normal(n)
    y = direct * treat + b * m + w + rng.standard_normal(n)
    return Dataset.from_frame(pd.DataFrame({"treat": treat, "w": w, "m": m, "y": y}))


def fixture_dir() -> Path:
    root = os.environ.get(FIXTURE_ENV)
    return Path(root) if root else REPO_FIXTURE_DIR


def fixture_path(name: str) -> str | None:
    if name not in FIXTURES:
        raise DataError(f"unknown fixture '{name}'; available: {', '.join(FIXTURES)}")
    path = fixture_dir() / FIXTURES[name]
    return str(path) if path.is_file() else None


def fixture_available(name: str) -> bool:
    return fixture_path(name) is not None


def load_fixture(name: str) -> Dataset:
    path = fixture_path(name)
    if path is None:
        raise DataError(
            f"fixture '{name}' not found in {fixture_dir()}; add {FIXTURES[name]} there or set {FIXTURE_ENV}"
        )
    logger.debug("Loading fixture %s from %s", name, path)
    return read_csv(path, type_hints=FIXTURE_TYPE_HINTS.get(name))
