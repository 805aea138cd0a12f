"""Factorial-moment framework shared by every distribution family.

A factorial-moment sequence a_0, a_1, ... (a_0 = 1) determines raw moments
through Stirling numbers, the skewness through the first three entries, and
for sufficiently fast-decaying tails the pmf itself through an alternating
inversion, which the test-suite uses as a family-independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConvergenceError, DomainError
from .special import CONSECUTIVE, REL_TOL, stirling2


@dataclass(frozen=True)
class FactorialMomentSequence:
    """Sequence a_k = E[X (X-1) ... (X-k+1)] for k = 0 .. len(a)-1."""

    a: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.a)
        if not vals or vals[0] != 1.0:
            raise DomainError("factorial moment sequence must start with a_0 = 1")
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("factorial moments must be finite")
        object.__setattr__(self, "a", vals)

    def __len__(self):
        return len(self.a)

    def __getitem__(self, k):
        return self.a[k]


@dataclass(frozen=True)
class SummaryStats:
    """First moments of a count distribution plus its dispersion index."""

    mean: float
    variance: float
    skewness: float
    fisher_index: float

    def __post_init__(self):
        if not self.variance > 0:
            raise DomainError("variance must be positive")


def moments_from_factorial(a: Sequence[float] | FactorialMomentSequence, k: int) -> float:
    """k-th raw moment E[X^k] = sum_r S(k, r) a_r."""
    if k < 0:
        raise DomainError("moment order must be >= 0")
    if k == 0:
        return 1.0
    if k >= len(a):
        raise DomainError(f"need factorial moments up to order {k}, got {len(a) - 1}")
    return math.fsum(stirling2(k, r) * a[r] for r in range(1, k + 1))


def skewness_from_factorial(a1: float, a2: float, a3: float) -> float:
    """Skewness from the first three factorial moments."""
    var = a1 + a2 - a1 * a1
    if not var > 0:
        raise DomainError(f"variance expression a1 + a2 - a1^2 = {var} must be positive")
    c3 = a3 + 3.0 * a2 + a1 * (1.0 - 3.0 * a2 + a1 * (2.0 * a1 - 3.0))
    return c3 / var**1.5


def summary_from_factorial(a: Sequence[float] | FactorialMomentSequence) -> SummaryStats:
    """Mean, variance, skewness and Fisher index from a_1, a_2, a_3."""
    if len(a) < 4:
        raise DomainError("need factorial moments up to order 3")
    mean = a[1]
    var = a[1] + a[2] - a[1] ** 2
    return SummaryStats(mean, var, skewness_from_factorial(a[1], a[2], a[3]), var / mean)


def pmf_from_factorial(a: Sequence[float] | FactorialMomentSequence, x: int) -> float:
    """Invert a factorial-moment sequence into P(X = x).

    Alternating sum (1/x!) sum_k (-1)^k a_{k+x} / k!, summed with exact
    compensation.  The sequence must be long enough for the tail to meet the
    stopping rule, otherwise ConvergenceError is raised.
    """
    if x < 0:
        raise DomainError("x must be >= 0")
    terms = []
    lfact = 0.0
    small_run = 0
    converged = False
    for k in range(len(a) - x):
        t = a[k + x] * (-1.0) ** k / math.exp(lfact)
        terms.append(t)
        partial = math.fsum(terms)
        if abs(t) < REL_TOL * max(abs(partial), 1e-300) + 1e-300:
            small_run += 1
            if small_run >= CONSECUTIVE:
                converged = True
                break
        else:
            small_run = 0
        lfact += math.log1p(k)
    if not converged:
        raise ConvergenceError(
            "factorial moment sequence too short for the inversion to converge"
        )
    return math.fsum(terms) / math.factorial(x)
