"""Deterministic randomness for reproducible verification runs.

A fixed 64-bit linear congruential generator (Knuth's MMIX constants) keeps
verify reports byte-identical across platforms and numpy versions; the
top 53 bits of each state feed the uniform floats.
"""

from __future__ import annotations

import numpy as np

from .measures import IdempotentMeasure, TestFunction, normalize
from .semiring import NEG_INF
from .spaces import FiniteMetricSpace

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg64:
    """x <- 6364136223846793005 x + 1442695040888963407 (mod 2^64)."""

    def __init__(self, seed: int = 0):
        self.state = (seed ^ 0x9E3779B97F4A7C15) & _MASK

    def next_u64(self) -> int:
        self.state = (_MULT * self.state + _INC) & _MASK
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u

    def uniform_array(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        return np.array([self.uniform(lo, hi) for _ in range(n)])

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self.next_u64() >> 11) % n


def random_measure(
    space: FiniteMetricSpace,
    rng: Lcg64,
    support_prob: float = 0.7,
    depth: float = 3.0,
    points=None,
) -> IdempotentMeasure:
    """Random density: each candidate point finite with the given probability.

    Finite values are uniform in [-depth, 0]; at least one point is forced
    finite, and normalize() pins the maximum to an exact 0.  `points`
    restricts the candidate support (density is bottom elsewhere).
    """
    candidates = np.arange(space.n_points) if points is None else np.asarray(points, int)
    raw = np.full(space.n_points, NEG_INF)
    for i in candidates:
        if rng.uniform() < support_prob:
            raw[i] = rng.uniform(-depth, 0.0)
    if not np.any(raw > NEG_INF):
        raw[candidates[rng.randint(candidates.size)]] = rng.uniform(-depth, 0.0)
    return normalize(space, raw)


def random_test_function(
    space: FiniteMetricSpace, rng: Lcg64, scale: float = 1.0
) -> TestFunction:
    return TestFunction(space, rng.uniform_array(space.n_points, -scale, scale))
