"""Fit the bound constant C in error ~ C h^k from convergence data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import DomainError


@dataclass(frozen=True)
class FitResult:
    order: int
    constant: float
    residual: float  # RMS of the log residuals


def fit_constants(observations: Iterable[tuple[float, float]], order: int) -> FitResult:
    """Least-squares fit of ln(error) = ln(C) + order * ln(h) with the slope held fixed.

    The optimum is ln(C) = mean(ln e_i - order * ln h_i).
    """
    if int(order) != order or order < 1:
        raise DomainError(f"order must be an integer >= 1, got {order}")
    obs = [(float(h), float(e)) for h, e in observations]
    if not obs:
        raise DomainError("need at least one (h, error) observation")
    for i, (h, e) in enumerate(obs):
        if not (h > 0 and e > 0 and math.isfinite(h) and math.isfinite(e)):
            raise DomainError(f"observation {i} must have positive h and error, got ({h}, {e})")

    offsets = [math.log(e) - order * math.log(h) for h, e in obs]
    log_c = math.fsum(offsets) / len(offsets)
    residual = math.sqrt(math.fsum((r - log_c) ** 2 for r in offsets) / len(offsets))
    return FitResult(order=int(order), constant=math.exp(log_c), residual=residual)


def parse_observations(text: str) -> list[tuple[float, float]]:
    """Read ``h error`` pairs, one per line; '#' comments and blank lines skipped."""
    obs = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 2:
            raise DomainError(f"line {no}: expected 'h error', got {len(line)} field(s)")
        try:
            h, e = float(line[0]), float(line[1])
        except ValueError:
            raise DomainError(f"line {no}: not a number in {raw.strip()!r}") from None
        if not (h > 0 and e > 0):
            raise DomainError(f"line {no}: h and error must be positive")
        obs.append((h, e))
    return obs


def parse_sizes(text: str) -> list[float]:
    """Read one positive size per line; '#' comments and blank lines skipped."""
    sizes = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            h = float(line)
        except ValueError:
            raise DomainError(f"line {no}: not a number: {line!r}") from None
        if not (h > 0 and math.isfinite(h)):
            raise DomainError(f"line {no}: size must be positive, got {line}")
        sizes.append(h)
    if not sizes:
        raise DomainError("sizes file contains no sizes")
    return sizes
