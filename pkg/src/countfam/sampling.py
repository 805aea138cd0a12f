"""Random variate generation and Monte Carlo estimators.

One-sided stable variates come from the sine-product formula driven by two
open-interval uniforms; fractional-Poisson counts from the renewal clock
T <- T + V^(1/alpha) S with exponential V; weighted-Poisson counts from
inverse-CDF lookup over the recursion-built pmf table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .wpd import WpdParams, wpd_pmf_table

_EVENT_CAP = 10_000_000  # runaway guard on the renewal loop, events per variate


class RngStream:
    """Deterministic uniform stream on the open interval (0, 1).

    Endpoints are excluded because the stable-variate formula divides by
    sin(pi u) and takes log u.  One stream must be owned by one execution
    context; create independent seeded streams for parallel work.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.default_rng(self.seed)

    def uniforms(self, n: int) -> np.ndarray:
        u = self._gen.random(n)
        mask = u <= 0.0
        while mask.any():
            u[mask] = self._gen.random(int(mask.sum()))
            mask = u <= 0.0
        return u

    def next_uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def spawn(self, offset: int) -> "RngStream":
        """Independent derived stream (for parallel batches)."""
        return RngStream(np.random.SeedSequence([self.seed, int(offset)]).generate_state(1)[0])


@dataclass(frozen=True)
class SampleBatch:
    """A batch of simulated counts plus the seed that produced it."""

    values: np.ndarray
    n: int
    seed: int

    def __post_init__(self):
        if len(self.values) != self.n:
            raise DomainError("n must equal len(values)")

    def histogram(self) -> dict:
        vals, counts = np.unique(self.values, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


def sample_stable(alpha: float, n: int, rng: RngStream) -> np.ndarray:
    """One-sided stable variates S with E e^(-tS) = e^(-t^alpha).

    S = sin(a pi U1) sin((1-a) pi U1)^(1/a - 1) /
        (sin(pi U1)^(1/a) |ln U2|^(1/a - 1));
    at alpha = 1 the formula degenerates to the constant 1.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if n < 1:
        raise DomainError("n must be >= 1")
    if alpha == 1.0:
        return np.ones(n)
    u1 = rng.uniforms(n)
    u2 = rng.uniforms(n)
    th = math.pi * u1
    inv = 1.0 / alpha
    return (
        np.sin(alpha * th)
        * np.sin((1.0 - alpha) * th) ** (inv - 1.0)
        / (np.sin(th) ** inv * np.abs(np.log(u2)) ** (inv - 1.0))
    )


def sample_fpd(alpha: float, mu: float, n: int, rng: RngStream) -> SampleBatch:
    """Fractional-Poisson counts by the renewal algorithm.

    Each variate starts at X = 0, T = 0 and, while T <= 1, adds
    V^(1/alpha) S to the clock (V exponential with rate mu, S stable) and
    counts the arrivals that land inside [0, 1].  Fresh V and S are drawn at
    every event.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not mu > 0:
        raise DomainError("mu must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    x = np.zeros(n, dtype=np.int64)
    t = np.zeros(n)
    active = np.ones(n, dtype=bool)
    inv = 1.0 / alpha
    events = 0
    while active.any():
        idx = np.nonzero(active)[0]
        k = len(idx)
        v = -np.log(rng.uniforms(k)) / mu
        s = sample_stable(alpha, k, rng)
        t[idx] = t[idx] + v**inv * s
        done = t[idx] > 1.0
        x[idx[~done]] += 1
        active[idx] = ~done
        events += 1
        if events > _EVENT_CAP:
            raise ConvergenceError("renewal loop exceeded the event cap")
    return SampleBatch(x, n, rng.seed)


def sample_wpd(p: WpdParams, n: int, rng: RngStream) -> SampleBatch:
    """Weighted-Poisson counts by inverse-CDF over the pmf table.

    The table is extended until its cumulative mass exceeds 1 - 1e-12.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    table = wpd_pmf_table(p)
    cdf = np.cumsum(table)
    u = rng.uniforms(n)
    x = np.searchsorted(cdf, u, side="left")
    x[x >= len(table)] = len(table) - 1
    return SampleBatch(x.astype(np.int64), n, rng.seed)


def mc_moment(alpha: float, mu: float, k: int, n: int, rng: RngStream) -> tuple[float, float]:
    """Monte Carlo estimate of E X^k for the fractional law, with standard error."""
    if k < 0:
        raise DomainError("k must be >= 0")
    if k == 0:
        return 1.0, 0.0
    batch = sample_fpd(alpha, mu, n, rng)
    v = batch.values.astype(float) ** k
    se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return float(v.mean()), se
