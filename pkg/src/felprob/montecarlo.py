"""Seeded Monte-Carlo sampling of the uniform-error model.

The model: for a fixed size h the two errors are independent, the order-k
error uniform on [0, C_k h^k] and the order-m error uniform on [0, C_m h^m].
A trial succeeds when the order-m error is <= the order-k error.

Random numbers come from PCG64 driven by raw 64-bit output (not from
``Generator`` methods, whose streams numpy does not freeze). Trials are cut
into fixed blocks of ``BLOCK_SIZE``; block ``i`` is seeded with
``SeedSequence(seed, spawn_key=(i,))``. Blocks may run on any number of
threads and are summed in block order, so results depend only on
(seed, trials, inputs).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distribution import SizeFamily, SuccessDistribution
from .errors import DomainError
from .law import ElementPair, ErrorConstants

BLOCK_SIZE = 65536
RNG_SCHEME = "pcg64-seedsequence-raw53-v1"

_TWO_POW_M53 = 2.0**-53


@dataclass(frozen=True)
class UniformErrorModel:
    """Upper ends of the two error intervals at one size h."""

    bound_low: float
    bound_high: float

    def __post_init__(self):
        for name in ("bound_low", "bound_high"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")

    @classmethod
    def from_constants(cls, constants: ErrorConstants, pair: ElementPair, h: float):
        if not h > 0:
            raise DomainError(f"mesh size must be positive, got {h}")
        return cls(constants.c_low * h**pair.k, constants.c_high * h**pair.m)

    def exact_probability(self) -> float:
        a, b = self.bound_low, self.bound_high
        if b <= a:
            return 1.0 - b / (2.0 * a)
        return a / (2.0 * b)


@dataclass(frozen=True)
class TrialResult:
    trials: int
    successes: int
    seed: int

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def std_error(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)


def _check_run(trials: int, seed: int, workers: int) -> None:
    if int(trials) != trials or trials < 1:
        raise DomainError(f"trials must be a positive integer, got {trials}")
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise DomainError(f"seed must be an integer in [0, 2^64), got {seed}")
    if int(workers) != workers or workers < 1:
        raise DomainError(f"workers must be a positive integer, got {workers}")


def _block_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def block_generator(seed: int, block: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(block,)))


def uniform01(bitgen: np.random.PCG64, n: int) -> np.ndarray:
    """n doubles in [0, 1) from the top 53 bits of raw 64-bit draws."""
    raw = bitgen.random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53


def _run_blocks(fn, trials: int, workers: int) -> list:
    sizes = _block_sizes(trials)
    if workers == 1 or len(sizes) == 1:
        return [fn(i, n) for i, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def _count_wins(bitgen, n: int, bound_low: float, bound_high: float) -> np.ndarray:
    x_low = uniform01(bitgen, n) * bound_low
    x_high = uniform01(bitgen, n) * bound_high
    return x_high <= x_low


def estimate_probability(
    model: UniformErrorModel, trials: int, seed: int, workers: int = 1
) -> TrialResult:
    """Empirical frequency of {X_m <= X_k} over ``trials`` independent draws."""
    _check_run(trials, seed, workers)

    def block(i, n):
        wins = _count_wins(block_generator(seed, i), n, model.bound_low, model.bound_high)
        return int(np.count_nonzero(wins))

    successes = sum(_run_blocks(block, trials, workers))
    return TrialResult(trials=int(trials), successes=successes, seed=int(seed))


@dataclass(frozen=True)
class FamilySimulation:
    trials: int
    seed: int
    counts: tuple

    @property
    def distribution(self) -> SuccessDistribution:
        return SuccessDistribution(tuple(c / self.trials for c in self.counts))


def simulate_family_counts(
    family: SizeFamily | Sequence[float],
    constants: ErrorConstants,
    pair: ElementPair,
    trials: int,
    seed: int,
    workers: int = 1,
) -> FamilySimulation:
    """Histogram of S_N, the number of sizes where the order-m error wins, per trial.

    Within a block, sizes are sampled in family order, two uniform vectors
    each, from the block's generator.
    """
    _check_run(trials, seed, workers)
    if not isinstance(family, SizeFamily):
        family = SizeFamily(tuple(family))
    models = [UniformErrorModel.from_constants(constants, pair, h) for h in family.sizes]
    n_sizes = len(models)

    def block(i, n):
        bitgen = block_generator(seed, i)
        wins = np.zeros(n, dtype=np.int64)
        for model in models:
            wins += _count_wins(bitgen, n, model.bound_low, model.bound_high)
        return np.bincount(wins, minlength=n_sizes + 1)

    counts = np.zeros(n_sizes + 1, dtype=np.int64)
    for c in _run_blocks(block, trials, workers):
        counts += c
    return FamilySimulation(trials=int(trials), seed=int(seed), counts=tuple(int(c) for c in counts))
