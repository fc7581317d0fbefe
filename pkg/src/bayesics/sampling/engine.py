"""
Adaptive iid posterior sampler.

Draws a pilot sample, plans the draw count per monitored estimand from it,
then draws the remainder in batches. Every batch gets its own counter-based
random stream derived from (seed, call index, batch index), so the draws are
bit-identical for a given seed whether batches run on one thread or many.
"""

import itertools
import logging
import threading
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from bayesics.errors import SamplingBudgetError
from bayesics.sampling.plan import plan_from_pilot
from bayesics.sampling.schema import PrecisionTarget, SamplePlan
from bayesics.schemas.bs_config import SamplingConfig

logger = logging.getLogger(__name__)

# draw_fn(rng, size) -> array of shape (size, k) (or (size,) when k == 1)
DrawFn = Callable[[np.random.Generator, int], np.ndarray]


class RandomStreams:
    """Seedable, splittable streams on the Philox counter-based generator."""

    def __init__(self, seed: int | None = None):
        if seed is None:
            seed = int(np.random.SeedSequence().entropy)
        self.seed = int(seed)

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class AdaptiveDraws:
    draws: np.ndarray  # (total, k), pilot rows first
    labels: tuple[str, ...]
    plans: tuple[SamplePlan, ...]

    @property
    def total_draws(self) -> int:
        return int(self.draws.shape[0])

    def column(self, label: str) -> np.ndarray:
        return self.draws[:, self.labels.index(label)]


def _as_2d(values: np.ndarray, size: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != size:
        raise ValueError(f"draw function returned {arr.shape[0]} rows, expected {size}")
    return arr


class AdaptiveSampler:
    """Runs draw functions until every monitored estimand meets its plan."""

    def __init__(
        self,
        seed: int | None = None,
        config: SamplingConfig | None = None,
        threads: int | None = None,
    ):
        self.config = config or SamplingConfig()
        self.streams = RandomStreams(seed)
        self.threads = threads if threads is not None else self.config.threads
        self._calls = itertools.count()
        self._lock = threading.Lock()
        self.history: list[SamplePlan] = []

    @property
    def seed(self) -> int:
        return self.streams.seed

    def _next_call(self) -> int:
        with self._lock:
            return next(self._calls)

    def generator(self) -> np.random.Generator:
        """A fresh stream for work outside the planner (optimiser noise, permutations)."""
        return self.streams.generator(self._next_call(), 0)

    def _batch_sizes(self, total: int, batch_size: int) -> list[int]:
        full, rest = divmod(total, batch_size)
        return [batch_size] * full + ([rest] if rest else [])

    def _map_batches(self, draw_fn: DrawFn, call: int, sizes: list[int], first_key: int) -> list[np.ndarray]:
        def one(i_size: tuple[int, int]) -> np.ndarray:
            i, size = i_size
            return _as_2d(draw_fn(self.streams.generator(call, first_key + i), size), size)

        jobs = list(enumerate(sizes))
        if self.threads <= 1 or len(jobs) <= 1:
            return [one(job) for job in jobs]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            # map keeps submission order, so results do not depend on scheduling
            return list(pool.map(one, jobs))

    def draw(self, draw_fn: DrawFn, n: int, batch_size: int | None = None) -> np.ndarray:
        """Draw a fixed number of rows through the batched stream machinery."""
        call = self._next_call()
        sizes = self._batch_sizes(int(n), batch_size or self.config.batch_size)
        return np.vstack(self._map_batches(draw_fn, call, sizes, 0))

    def run(
        self,
        draw_fn: DrawFn,
        labels: Sequence[str],
        target: PrecisionTarget | None = None,
        monitor: Sequence[int] | None = None,
        batch_size: int | None = None,
        hard_cap: int | None = None,
    ) -> AdaptiveDraws:
        """Pilot, plan, and top up until every monitored column meets its plan."""
        target = target or PrecisionTarget()
        labels = tuple(labels)
        monitor = list(range(len(labels))) if monitor is None else list(monitor)
        call = self._next_call()
        pilot_size = self.config.pilot_size

        pilot = _as_2d(draw_fn(self.streams.generator(call, 0), pilot_size), pilot_size)
        if pilot.shape[1] != len(labels):
            raise ValueError(f"draw function returned {pilot.shape[1]} columns for {len(labels)} labels")

        plans = tuple(
            plan_from_pilot(pilot[:, j], target, self.config.relative_epsilon, label=labels[j])
            for j in monitor
        )
        total = max(plan.total_draws for plan in plans)
        cap = hard_cap or self.config.hard_cap
        if total > cap:
            worst = max(plans, key=lambda plan: plan.total_draws)
            raise SamplingBudgetError(
                f"Monte Carlo plan for '{worst.label}' needs {total} draws, above the cap of "
                f"{cap}; pass a larger epsilon (currently {worst.epsilon:.3g})."
            )
        logger.info("Pilot of %d draws -> planned total %d (%s)", pilot_size, total, ", ".join(labels))

        batches = self._map_batches(
            draw_fn, call, self._batch_sizes(total - pilot_size, batch_size or self.config.batch_size), 1
        )
        draws = np.vstack([pilot, *batches])
        self.history.extend(plans)
        return AdaptiveDraws(draws=draws, labels=labels, plans=plans)
