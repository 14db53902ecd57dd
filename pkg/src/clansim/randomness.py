"""Splittable, reproducible random streams.

Every stream is identified by a root ``seed`` and a ``path`` of derivation
indices.  The underlying bit generator is Philox (counter based), keyed by a
``numpy.random.SeedSequence`` built from ``(seed, path)``, so a child stream
is a pure function of its parent and its index and never depends on how many
draws the parent has consumed.
"""
from __future__ import annotations

import math

import numpy as np

INFINITY = math.inf

_BLOCK = 256


class InvalidParameter(ValueError):
    """A distribution parameter is outside its domain."""


class RandomStream:
    """Single-owner source of uniforms with a draw counter.

    Uniforms are pulled from the generator in fixed-size blocks; the block
    size does not affect the sequence of values, only the refill cadence.
    """

    __slots__ = ("seed", "path", "counter", "_gen", "_buf", "_pos")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidParameter(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.path = tuple(int(i) for i in path)
        self.counter = 0
        ss = np.random.SeedSequence(seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf: list[float] = []
        self._pos = 0

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path}, counter={self.counter})"

    def derive(self, index: int) -> "RandomStream":
        return derive_stream(self, index)

    def uniform(self) -> float:
        """Next uniform in [0, 1)."""
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self.counter += 1
        return u

    def exponential(self, rate: float = 1.0) -> float:
        return next_exponential(self, rate)

    def first_event(self, effective_mass: float, lower: float) -> float:
        return sample_first_event(self, effective_mass, lower)

    def choice_index(self, cumulative: list[float]) -> int:
        """Index drawn proportionally to the increments of ``cumulative``."""
        total = cumulative[-1]
        u = self.uniform() * total
        lo, hi = 0, len(cumulative) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if cumulative[mid] > u:
                hi = mid
            else:
                lo = mid + 1
        return lo


def derive_stream(root: RandomStream, index: int) -> RandomStream:
    if index < 0:
        raise InvalidParameter(f"derivation index must be nonnegative, got {index}")
    return RandomStream(root.seed, root.path + (int(index),))


def next_uniform(s: RandomStream) -> float:
    return s.uniform()


def next_exponential(s: RandomStream, rate: float = 1.0) -> float:
    """Exp(rate) variate by inversion, ``-log(1 - U) / rate``."""
    if not rate > 0:
        raise InvalidParameter(f"exponential rate must be positive, got {rate}")
    return -math.log1p(-s.uniform()) / rate


def first_event_from_uniform(u: float, effective_mass: float, lower: float) -> float:
    """Inverse-CDF map for the first point after ``lower`` of a Poisson process
    with intensity ``effective_mass * exp(-t)`` on ``(lower, inf)``.

    The process has no point at all with probability
    ``exp(-effective_mass * exp(-lower))``; that event corresponds to
    ``u <= exp(-effective_mass * exp(-lower))``.
    """
    if effective_mass <= 0.0 or u <= 0.0:
        return INFINITY
    rest = math.exp(-lower) + math.log(u) / effective_mass
    if rest <= 0.0:
        return INFINITY
    t = -math.log(rest)
    # guard against rounding when the event lands right at the lower bound
    return t if t > lower else math.nextafter(lower, INFINITY)


def sample_first_event(s: RandomStream, effective_mass: float, lower: float) -> float:
    """First event time after ``lower`` of the decaying-rate Poisson process.

    Always consumes exactly one uniform so that draw order is independent of
    the parameters.
    """
    if effective_mass < 0 or lower < 0:
        raise InvalidParameter("effective_mass and lower must be nonnegative")
    return first_event_from_uniform(s.uniform(), effective_mass, lower)
