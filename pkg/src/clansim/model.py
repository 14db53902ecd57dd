"""The contract shared by every target process.

A model is the free (dominating) process plus two things that turn it into
the interacting one: the acceptance probability ``acceptance(gamma, xi)`` and
the incompatibility relation saying which individuals can change it.
Discrete models enumerate individuals with weights; continuous models
describe a homogeneous germ intensity plus a mark law and expose bounding
boxes for the germs of possibly-incompatible individuals.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Sequence

Individual = Hashable


class ModelError(ValueError):
    """Invalid model parameters."""


class InvalidIndividual(ModelError):
    """An individual of the wrong kind was passed to a model."""


class UnboundedRegion(ModelError):
    """A finite mass was requested for an unbounded region."""


# --------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[lo, hi]`` in R^d."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ModelError("box bounds must be nonempty and of equal length")
        if any(not (math.isfinite(a) and math.isfinite(b)) for a, b in zip(lo, hi)):
            raise UnboundedRegion("box bounds must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise ModelError(f"box has lo > hi: {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, p: Sequence[float]) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lo, p, self.hi))

    def grow(self, margin: float) -> "Box":
        return Box(tuple(a - margin for a in self.lo), tuple(b + margin for b in self.hi))

    def distance(self, p: Sequence[float]) -> float:
        """Euclidean distance from ``p`` to the box (0 inside)."""
        s = 0.0
        for a, x, b in zip(self.lo, p, self.hi):
            if x < a:
                s += (a - x) ** 2
            elif x > b:
                s += (x - b) ** 2
        return math.sqrt(s)


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise UnboundedRegion("ball radius must be finite and nonnegative")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return ball_volume(self.dim, self.radius)

    def contains(self, p: Sequence[float]) -> bool:
        return math.dist(self.center, p) <= self.radius

    def bounding_box(self, margin: float = 0.0) -> Box:
        r = self.radius + margin
        return Box(tuple(c - r for c in self.center), tuple(c + r for c in self.center))


@dataclass(frozen=True)
class LabelSet:
    """Window for abstract discrete families: the labels it meets."""

    labels: frozenset

    def __init__(self, labels: Iterable[Hashable]):
        object.__setattr__(self, "labels", frozenset(labels))


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d


# --------------------------------------------------------------------------
# configurations


@dataclass
class Configuration:
    """Finite counting measure on individuals, optionally tied to a window."""

    counts: Counter = field(default_factory=Counter)
    window: Any = None

    @classmethod
    def of(cls, individuals: Iterable[Individual], window=None) -> "Configuration":
        return cls(Counter(individuals), window)

    def __len__(self):
        return sum(self.counts.values())

    def __iter__(self):
        for g in sorted(self.counts, key=sort_key):
            for _ in range(self.counts[g]):
                yield g

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return +self.counts == +other.counts

    def key(self) -> tuple:
        """Canonical hashable label, used to tabulate empirical laws."""
        return tuple((g, n) for g, n in sorted(self.counts.items(), key=lambda kv: sort_key(kv[0])) if n)

    def max_multiplicity(self) -> int:
        return max(self.counts.values(), default=0)


def sort_key(g: Individual):
    return (type(g).__name__, g) if not isinstance(g, str) else ("", g)


# --------------------------------------------------------------------------
# the model contract


class ModelSpec:
    """Base class for target processes.

    Subclasses set ``kind``, ``discrete``, ``exclusion`` (product-form 0/1
    acceptance) and ``delta`` (the dominating ratio) and implement the
    methods below.
    """

    kind = "abstract"
    discrete = True
    exclusion = False
    delta = 1.0
    finite_family = False

    def incompatible(self, g: Individual, t: Individual) -> bool:
        """True iff the presence of ``t`` can change the birth rate of ``g``."""
        raise NotImplementedError

    def acceptance(self, g: Individual, xi: Sequence[Individual]) -> float:
        """``M(g | xi)``.  Only members of ``xi`` incompatible with ``g`` matter."""
        raise NotImplementedError

    def size(self, g: Individual) -> float:
        return 1.0

    def intersects(self, g: Individual, window) -> bool:
        raise NotImplementedError

    def dominating_mass(self, region) -> float:
        raise NotImplementedError

    def validate(self, g: Individual) -> None:
        pass

    def alpha_bounds(self) -> dict[str, float]:
        """Closed-form subcriticality bounds keyed by a short name."""
        raise NotImplementedError

    @cached_property
    def alpha(self) -> float:
        return min(self.alpha_bounds().values())

    # serialization hooks
    def individual_to_json(self, g: Individual):
        return g

    def individual_from_json(self, obj) -> Individual:
        return obj

    def describe(self) -> dict:
        return {"kind": self.kind}


class DiscreteModel(ModelSpec):
    """Countable family of individuals with weights ``w``."""

    discrete = True

    def weight(self, g: Individual) -> float:
        raise NotImplementedError

    def neighbors(self, g: Individual) -> list[tuple[Individual, float]]:
        """All ``(t, w(t))`` with ``incompatible(g, t)``."""
        raise NotImplementedError

    def family(self, window) -> dict[Individual, float]:
        """Individuals meeting ``window`` with their weights (insertion order
        is canonical)."""
        raise NotImplementedError

    def dominating_mass(self, region) -> float:
        if region is None and not self.finite_family:
            raise UnboundedRegion("an infinite discrete family needs a bounded window")
        return math.fsum(self.family(region).values())

    def acceptance(self, g, xi):
        # product form: M = prod over xi of [1 - I(g, t)]
        for t in xi:
            if self.incompatible(g, t):
                return 0.0
        return 1.0

    def alpha_bounds(self) -> dict[str, float]:
        return {"discrete": self._discrete_alpha()}

    def _catalog_for_alpha(self) -> Iterable[Individual]:
        raise NotImplementedError

    def _discrete_alpha(self) -> float:
        best = 0.0
        for g in self._catalog_for_alpha():
            tot = math.fsum(self.size(t) * w for t, w in self.neighbors(g))
            best = max(best, tot / self.size(g))
        return best


class ContinuousModel(ModelSpec):
    """Homogeneous germ intensity ``density`` in R^d with an optional mark."""

    discrete = False
    density = 0.0
    dim = 1

    def sample_individual(self, s, box: Box) -> Individual:
        """Germ uniform in ``box`` (d uniforms, in axis order), then the mark."""
        raise NotImplementedError

    def germ(self, g: Individual) -> tuple[float, ...]:
        raise NotImplementedError

    def influence_box(self, g: Individual) -> Box:
        """Box containing the germ of every ``t`` with ``incompatible(g, t)``."""
        raise NotImplementedError

    def window_box(self, window) -> Box:
        """Box containing the germ of every individual meeting ``window``."""
        raise NotImplementedError
