"""Distribution of the number of sizes (meshes or simplexes) where P_m wins.

Each size h_n gives an independent Bernoulli trial with success probability
P(h_n). Their sum S_N follows a Poisson-binomial law, computed here by the
forward recurrence

    Prob{S_N = n} = p_N Prob{S_{N-1} = n-1} + (1 - p_N) Prob{S_{N-1} = n}

with a subset-enumeration oracle for small N, and an O(N) closed form for
Prob{S_N >= 1}.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .law import AccuracyLaw, accuracy_probability

DEFAULT_DP_CAP = 100_000
BRUTE_FORCE_CAP = 20
DP_CAP_ENV = "FELPROB_DP_CAP"


def dp_cap() -> int:
    """Largest N handled by :func:`exact_distribution`; ``FELPROB_DP_CAP`` overrides it."""
    raw = os.environ.get(DP_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DP_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise DomainError(f"{DP_CAP_ENV} must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise DomainError(f"{DP_CAP_ENV} must be a positive integer, got {raw!r}")
    return cap


@dataclass(frozen=True)
class BernoulliSequence:
    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise DomainError("a Bernoulli sequence needs at least one probability")
        for i, p in enumerate(probs):
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"probability at index {i} is outside [0, 1]: {p}")
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class SuccessDistribution:
    """``mass[n] = Prob{S_N = n}`` for n = 0..N."""

    mass: tuple

    def __post_init__(self):
        object.__setattr__(self, "mass", tuple(float(x) for x in self.mass))
        if not self.mass:
            raise DomainError("a distribution needs at least one mass entry")

    @property
    def n(self) -> int:
        return len(self.mass) - 1

    def as_array(self) -> np.ndarray:
        return np.array(self.mass)


@dataclass(frozen=True)
class SizeFamily:
    """Mesh sizes h_n of a family of meshes, or diameters of a set of simplexes."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(float(h) for h in self.sizes)
        if not sizes:
            raise DomainError("a size family needs at least one size")
        for i, h in enumerate(sizes):
            if not (h > 0 and math.isfinite(h)):
                raise DomainError(f"size at index {i} must be positive and finite, got {h}")
        object.__setattr__(self, "sizes", sizes)

    def __len__(self):
        return len(self.sizes)


@dataclass(frozen=True)
class Partition:
    """Counts of sizes at or below h* (n1) and strictly above it (n2)."""

    n1: int
    n2: int

    @property
    def total(self) -> int:
        return self.n1 + self.n2


def _sequence(seq) -> BernoulliSequence:
    return seq if isinstance(seq, BernoulliSequence) else BernoulliSequence(tuple(seq))


def _family(family) -> SizeFamily:
    return family if isinstance(family, SizeFamily) else SizeFamily(tuple(family))


def family_success_probs(law: AccuracyLaw, family: SizeFamily | Sequence[float]) -> BernoulliSequence:
    family = _family(family)
    return BernoulliSequence(tuple(accuracy_probability(law, h) for h in family.sizes))


def exact_distribution(seq: BernoulliSequence | Sequence[float]) -> SuccessDistribution:
    """Exact law of S_N by the forward recurrence, O(N^2) time."""
    seq = _sequence(seq)
    cap = dp_cap()
    if len(seq) > cap:
        raise CapacityError(
            f"exact distribution is capped at N={cap} (got N={len(seq)}); "
            "use at_least_one for Prob{S_N >= 1} on large families"
        )
    row = np.zeros(len(seq) + 1)
    row[0] = 1.0
    for i, p in enumerate(seq.probs):
        prev = row[: i + 1].copy()
        row[: i + 1] = prev * (1.0 - p)
        row[1 : i + 2] += prev * p
        np.clip(row[: i + 2], 0.0, 1.0, out=row[: i + 2])
    return SuccessDistribution(tuple(row.tolist()))


def brute_force_distribution(seq: BernoulliSequence | Sequence[float]) -> SuccessDistribution:
    """Law of S_N by enumerating all 2^N outcomes. Test oracle, N <= 20."""
    seq = _sequence(seq)
    n = len(seq)
    if n > BRUTE_FORCE_CAP:
        raise CapacityError(f"enumeration is capped at N={BRUTE_FORCE_CAP} (got N={n})")
    mass = [0.0] * (n + 1)
    for outcome in itertools.product((0, 1), repeat=n):
        weight = math.prod(p if y else 1.0 - p for p, y in zip(seq.probs, outcome))
        mass[sum(outcome)] += weight
    return SuccessDistribution(tuple(mass))


def cumulative_at_least(dist: SuccessDistribution, n_e: int) -> float:
    """Prob{S_N >= n_e}."""
    if int(n_e) != n_e or not 0 <= n_e <= dist.n:
        raise DomainError(f"threshold must be an integer in [0, {dist.n}], got {n_e}")
    if n_e == 0:
        return 1.0
    return min(1.0, math.fsum(dist.mass[n_e:]))


def at_least_one(seq: BernoulliSequence | Sequence[float]) -> float:
    """Prob{S_N >= 1} = 1 - prod(1 - p_n)."""
    seq = _sequence(seq)
    if any(p == 1.0 for p in seq.probs):
        return 1.0
    log_none = math.fsum(math.log1p(-p) for p in seq.probs)
    return -math.expm1(log_none)


def partition_sizes(law: AccuracyLaw, family: SizeFamily | Sequence[float]) -> Partition:
    family = _family(family)
    n1 = sum(1 for h in family.sizes if h <= law.h_star)
    return Partition(n1=n1, n2=len(family) - n1)


def at_least_one_structured(
    law: AccuracyLaw, family: SizeFamily | Sequence[float]
) -> tuple[float, Partition]:
    """Prob{S_N >= 1} from the partitioned closed form.

    Sizes h <= h* contribute the factor (h/h*)^delta / 2 each, sizes above h*
    contribute 1 - (h*/h)^delta / 2. Ties at h* count in the first group.
    """
    family = _family(family)
    log_star = math.log(law.h_star)
    fine = [h for h in family.sizes if h <= law.h_star]
    coarse = [h for h in family.sizes if h > law.h_star]

    terms = [-len(fine) * math.log(2.0)]
    terms.extend(law.delta * (math.log(h) - log_star) for h in fine)
    for h in coarse:
        x = law.delta * (log_star - math.log(h))
        terms.append(math.log1p(-0.5 * math.exp(x)))
    log_none = math.fsum(terms)
    return -math.expm1(log_none), Partition(n1=len(fine), n2=len(coarse))


def tail_bound_none(law: AccuracyLaw, h_max: float, n: int) -> float:
    """Upper bound beta^n on Prob{S_n = 0} for sizes in (0, h_max], beta = 1 - P(h_max)."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n}")
    beta = 1.0 - accuracy_probability(law, h_max)
    if beta == 0.0:
        return 0.0
    return math.exp(n * math.log(beta))
