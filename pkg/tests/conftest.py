import numpy as np
import pytest

from bayesics.sampling.engine import AdaptiveSampler
from bayesics.sampling.schema import PrecisionTarget
from bayesics.schemas.bs_config import SamplingConfig

SEED = 2026


@pytest.fixture
def sampler() -> AdaptiveSampler:
    # loose relative margin keeps planned draw counts in the low thousands
    return AdaptiveSampler(seed=SEED, config=SamplingConfig(relative_epsilon=0.1))


@pytest.fixture
def target() -> PrecisionTarget:
    return PrecisionTarget()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture(autouse=True)
def _isolated_config(tmp_path, monkeypatch):
    """No user or working-directory bayesics.toml leaks into a test."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("BAYESICS_SEED", raising=False)
    monkeypatch.delenv("BAYESICS_THREADS", raising=False)
