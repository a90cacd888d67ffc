"""Critical mesh size and the probability that P_m beats P_k.

Two Lagrange elements of orders k < m have a priori error bounds C_k h^k and
C_m h^m. The curves cross at h*, and under the uniform-error model the
probability that the P_m error is not larger than the P_k error depends only
on h/h* and delta = m - k::

    P(h) = 1 - (h/h*)^delta / 2    for 0 < h <= h*
    P(h) = (h*/h)^delta / 2        for h >= h*

The same formula applies per simplex with h replaced by the simplex diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class ElementPair:
    """Polynomial orders (k, m) of the two compared elements, 1 <= k < m."""

    k: int
    m: int

    def __post_init__(self):
        if int(self.k) != self.k or int(self.m) != self.m:
            raise DomainError(f"element orders must be integers, got k={self.k}, m={self.m}")
        if self.k < 1:
            raise DomainError(f"lower order k must be >= 1, got {self.k}")
        if self.k >= self.m:
            raise DomainError(f"need k < m, got k={self.k}, m={self.m}")

    def delta(self) -> int:
        return self.m - self.k


@dataclass(frozen=True)
class ErrorConstants:
    """Aggregate bound constants C_k and C_m (constant times solution semi-norm)."""

    c_low: float
    c_high: float

    def __post_init__(self):
        if not (self.c_low > 0 and self.c_high > 0) or not (
            math.isfinite(self.c_low) and math.isfinite(self.c_high)
        ):
            raise DomainError(
                f"constants must be positive and finite, got c_low={self.c_low}, c_high={self.c_high}"
            )


@dataclass(frozen=True)
class AccuracyLaw:
    """The law is fully determined by the crossover size h* and delta = m - k."""

    h_star: float
    delta: int

    def __post_init__(self):
        if not (self.h_star > 0 and math.isfinite(self.h_star)):
            raise DomainError(f"h_star must be positive and finite, got {self.h_star}")
        if int(self.delta) != self.delta or self.delta < 1:
            raise DomainError(f"delta must be an integer >= 1, got {self.delta}")

    def __call__(self, h: float) -> float:
        return accuracy_probability(self, h)


def critical_size(constants: ErrorConstants, pair: ElementPair) -> AccuracyLaw:
    """Return the law whose h* = (C_k / C_m)^(1/(m-k)), computed in log space."""
    delta = pair.delta()
    log_h = (math.log(constants.c_low) - math.log(constants.c_high)) / delta
    h_star = math.exp(log_h) if log_h < 709.0 else math.inf
    if h_star == 0.0 or not math.isfinite(h_star):
        raise DomainError(f"h* = exp({log_h}) is not representable as a positive double")
    return AccuracyLaw(h_star=h_star, delta=delta)


def _check_size(h: float) -> None:
    if not h > 0 or math.isnan(h):
        raise DomainError(f"mesh size must be positive, got {h}")


def _ratio_power(log_ratio: float, delta: int) -> float:
    # exp underflows to 0.0 on its own; clamp the overflow side too.
    x = delta * log_ratio
    if x > 709.0:
        return math.inf
    return math.exp(x)


def probability_below(law: AccuracyLaw, h: float) -> float:
    """Branch valid for 0 < h <= h*: 1 - (h/h*)^delta / 2."""
    _check_size(h)
    r = _ratio_power(math.log(h) - math.log(law.h_star), law.delta)
    return max(0.0, 1.0 - 0.5 * r)


def probability_above(law: AccuracyLaw, h: float) -> float:
    """Branch valid for h >= h*: (h*/h)^delta / 2."""
    _check_size(h)
    r = _ratio_power(math.log(law.h_star) - math.log(h), law.delta)
    return min(1.0, 0.5 * r)


def accuracy_probability(law: AccuracyLaw, h: float) -> float:
    """Probability that the order-m error does not exceed the order-k error at size h.

    ``h`` may be a global mesh size or a single simplex diameter. A tie
    ``h == h_star`` is evaluated on the lower branch; both give exactly 0.5.
    """
    _check_size(h)
    if h <= law.h_star:
        return probability_below(law, h)
    return probability_above(law, h)


def size_for_probability(law: AccuracyLaw, target: float) -> float:
    """Inverse of :func:`accuracy_probability`: the size h at which P(h) == target."""
    if not 0.0 < target < 1.0:
        raise DomainError(f"target probability must lie in (0, 1), got {target}")
    if target >= 0.5:
        log_r = math.log(2.0 * (1.0 - target)) / law.delta
    else:
        log_r = -math.log(2.0 * target) / law.delta
    return law.h_star * math.exp(log_r)
