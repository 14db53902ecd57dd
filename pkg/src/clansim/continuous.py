"""Continuous models: area-interaction with a fixed grain, Strauss, and the
1-D continuous loss network."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy import integrate

from .model import Ball, Box, ContinuousModel, InvalidIndividual, ModelError, UnboundedRegion, ball_volume


class NonIntegrable(ModelError):
    """Parameters for which the target density is not integrable."""


@dataclass(frozen=True, order=True)
class Germ:
    pos: tuple[float, ...]


@dataclass(frozen=True, order=True)
class Call:
    """Call occupying the closed segment ``[x, x + length]``."""

    x: float
    length: float

    @property
    def right(self) -> float:
        return self.x + self.length


# --------------------------------------------------------------------------
# grains


@dataclass(frozen=True)
class Grain:
    """Disc (radius ``r``) or axis-aligned square (side ``r``) centered on the
    germ.  In d = 1 both are intervals."""

    shape: str
    r: float
    dim: int = 2

    def __post_init__(self):
        if self.shape not in ("disc", "square"):
            raise ModelError(f"unknown grain shape {self.shape!r}")
        if not self.r > 0:
            raise ModelError("grain size must be positive")
        if self.dim not in (1, 2):
            raise ModelError("grains are supported in d = 1 and d = 2")

    @property
    def half_width(self) -> float:
        return self.r if self.shape == "disc" else self.r / 2

    @property
    def content(self) -> float:
        if self.shape == "disc":
            return ball_volume(self.dim, self.r)
        return self.r**self.dim

    @property
    def dilation_content(self) -> float:
        """Content of ``{x : (x+G) meets G}``; G is symmetric so this is 2G."""
        return 2**self.dim * self.content

    def overlaps(self, x: Sequence[float], y: Sequence[float]) -> bool:
        """Grains at x and y share positive content."""
        if self.shape == "disc":
            return math.dist(x, y) < 2 * self.r
        return all(abs(a - b) < self.r for a, b in zip(x, y))

    def meets(self, x: Sequence[float], window) -> bool:
        """Closed grain at x meets the window."""
        if isinstance(window, Ball):
            if self.shape == "disc":
                return math.dist(x, window.center) <= window.radius + self.r
            h = self.half_width
            return Box(tuple(c - h for c in x), tuple(c + h for c in x)).distance(window.center) <= window.radius
        if self.shape == "disc":
            return window.distance(x) <= self.r
        h = self.half_width
        return all(a - h <= c <= b + h for a, c, b in zip(window.lo, x, window.hi))

    def dilated_volume(self, window) -> float:
        """Content of the set of germs whose grain meets the window."""
        if isinstance(window, Ball):
            if self.shape != "disc":
                raise ModelError("ball windows are supported for disc grains only")
            return ball_volume(window.dim, window.radius + self.r)
        sides = [b - a for a, b in zip(window.lo, window.hi)]
        if self.shape == "square":
            return math.prod(s + self.r for s in sides)
        r = self.r
        if self.dim == 1:
            return sides[0] + 2 * r
        w, h = sides
        return w * h + 2 * r * (w + h) + math.pi * r * r

    def chord(self, center: Sequence[float], y: float) -> tuple[float, float] | None:
        """Horizontal section of the 2-D grain at height y."""
        cx, cy = center
        if self.shape == "disc":
            d = self.r * self.r - (y - cy) ** 2
            if d <= 0:
                return None
            h = math.sqrt(d)
            return cx - h, cx + h
        h = self.r / 2
        if abs(y - cy) >= h:
            return None
        return cx - h, cx + h


def _uncovered_length(seg: tuple[float, float], covers: list[tuple[float, float]]) -> float:
    a, b = seg
    total = b - a
    for lo, hi in sorted(covers):
        lo, hi = max(lo, a), min(hi, b)
        if hi > lo:
            total -= hi - lo
            a = hi
    return max(total, 0.0)


def _chord_function(x, others, grain):
    def f(y):
        seg = grain.chord(x, y)
        if seg is None:
            return 0.0
        covers = [c for c in (grain.chord(o, y) for o in others) if c is not None]
        return _uncovered_length(seg, covers)
    return f


def _breakpoints(x, others, grain) -> list[float]:
    """Heights where the section structure can change."""
    lo, hi = x[1] - grain.half_width, x[1] + grain.half_width
    pts = {lo, hi}
    centers = [x] + list(others)
    for c in others:
        pts.update((c[1] - grain.half_width, c[1] + grain.half_width))
    if grain.shape == "disc":
        r = grain.r
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                (x1, y1), (x2, y2) = centers[i], centers[j]
                d = math.dist(centers[i], centers[j])
                if 0 < d < 2 * r:
                    mx, my = (x1 + x2) / 2, (y1 + y2) / 2
                    h = math.sqrt(r * r - d * d / 4)
                    pts.add(my + h * (x2 - x1) / d)
                    pts.add(my - h * (x2 - x1) / d)
    return sorted(p for p in pts if lo <= p <= hi)


def _lens_area(d: float, r: float) -> float:
    if d >= 2 * r:
        return 0.0
    return 2 * r * r * math.acos(d / (2 * r)) - d / 2 * math.sqrt(4 * r * r - d * d)


def uncovered_content(x: Sequence[float], xi: Sequence[Sequence[float]], grain: Grain,
                      method: str = "auto") -> float:
    """Content of ``(x + G)`` not covered by the grains of ``xi``.

    ``method='auto'`` uses closed-form geometry when it is available (any
    number of squares, intervals in 1-D, or at most one overlapping disc) and
    adaptive quadrature over horizontal sections otherwise; ``'exact'`` and
    ``'quad'`` force a path.
    """
    x = tuple(x)
    others = [tuple(o) for o in xi if grain.overlaps(x, o)]
    if not others:
        return grain.content
    if grain.dim == 1:
        h = grain.half_width
        return _uncovered_length((x[0] - h, x[0] + h), [(o[0] - h, o[0] + h) for o in others])
    f = _chord_function(x, others, grain)
    pts = _breakpoints(x, others, grain)
    if grain.shape == "square" and method != "quad":
        return math.fsum(f((a + b) / 2) * (b - a) for a, b in zip(pts, pts[1:]))
    if method == "exact" or (method == "auto" and len(others) == 1):
        if len(others) > 1:
            raise ModelError("closed-form disc geometry handles a single overlap only")
        return grain.content - _lens_area(math.dist(x, others[0]), grain.r)
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        if b > a:
            val, _ = integrate.quad(f, a, b, epsabs=1e-11 * grain.content, epsrel=1e-11, limit=200)
            total += val
    return min(max(total, 0.0), grain.content)


# --------------------------------------------------------------------------
# area interaction


class AreaInteractionModel(ContinuousModel):
    """Germs with intensity ``kappa`` weighted by ``phi ** -(covered content)``.

    Repulsive (``phi < 1``): dominating density ``kappa * phi**-|G|`` and
    ``M = phi ** (|G| - uncovered)``.  Attractive (``phi >= 1``): density
    ``kappa`` and ``M = phi ** -uncovered``.
    """

    kind = "area"

    def __init__(self, kappa: float, phi: float, grain: Grain, quadrature: str = "auto"):
        if not kappa > 0:
            raise ModelError("kappa must be positive")
        if not phi > 0:
            raise ModelError("phi must be positive")
        self.kappa, self.phi, self.grain = float(kappa), float(phi), grain
        self.dim = grain.dim
        self.quadrature = quadrature
        m = grain.content
        self.repulsive = self.phi < 1
        self.delta = self.phi ** (-m) if self.repulsive else 1.0
        self.density = self.kappa * self.delta

    def validate(self, g):
        if not isinstance(g, Germ) or len(g.pos) != self.dim:
            raise InvalidIndividual(f"{g!r} is not a {self.dim}-D germ")

    def germ(self, g):
        return g.pos

    def incompatible(self, g, t):
        self.validate(g)
        self.validate(t)
        return self.grain.overlaps(g.pos, t.pos)

    def acceptance(self, g, xi):
        if self.phi == 1.0:
            return 1.0
        u = uncovered_content(g.pos, [t.pos for t in xi], self.grain, self.quadrature)
        if self.repulsive:
            return min(1.0, self.phi ** (self.grain.content - u))
        return self.phi ** (-u)

    def intersects(self, g, window):
        return self.grain.meets(g.pos, window)

    def dominating_mass(self, region):
        if region is None:
            raise UnboundedRegion("region must be bounded")
        return self.density * self.grain.dilated_volume(region)

    def sample_individual(self, s, box):
        return Germ(tuple(a + (b - a) * s.uniform() for a, b in zip(box.lo, box.hi)))

    def influence_box(self, g):
        reach = 2 * self.grain.half_width
        return Box(tuple(c - reach for c in g.pos), tuple(c + reach for c in g.pos))

    def window_box(self, window):
        h = self.grain.half_width
        if isinstance(window, Ball):
            return window.bounding_box(h)
        return window.grow(h)

    def alpha_bounds(self):
        return {"area": self.density * self.grain.dilation_content}

    def individual_to_json(self, g):
        return list(g.pos)

    def individual_from_json(self, obj):
        return Germ(tuple(float(v) for v in obj))

    def describe(self):
        return {"kind": self.kind, "kappa": self.kappa, "phi": self.phi,
                "grain": {"shape": self.grain.shape, "r": self.grain.r, "dim": self.grain.dim}}


def area_model(kappa: float, phi: float, grain: Grain) -> AreaInteractionModel:
    return AreaInteractionModel(kappa, phi, grain)


# --------------------------------------------------------------------------
# Strauss


class StraussModel(ContinuousModel):
    """Strauss process: Poisson(``base_rate``) reweighted by
    ``exp(beta1 N + beta2 S)`` with S the number of pairs closer than ``r``.

    ``beta2 = -inf`` is carried as ``hard_core=True``.
    """

    kind = "strauss"

    def __init__(self, beta1: float, beta2: float, r: float, base_rate: float = 1.0, dim: int = 2):
        if beta2 > 0:
            raise NonIntegrable("beta2 > 0 gives a non-integrable Strauss density")
        if not r > 0 or not base_rate > 0:
            raise ModelError("r and base_rate must be positive")
        if not math.isfinite(beta1):
            raise ModelError("beta1 must be finite")
        self.beta1, self.r, self.base_rate, self.dim = float(beta1), float(r), float(base_rate), int(dim)
        self.hard_core = beta2 == -math.inf
        self.beta2 = None if self.hard_core else float(beta2)
        self.delta = math.exp(self.beta1)
        self.density = self.base_rate * self.delta
        self.exclusion = self.hard_core

    def validate(self, g):
        if not isinstance(g, Germ) or len(g.pos) != self.dim:
            raise InvalidIndividual(f"{g!r} is not a {self.dim}-D point")

    def germ(self, g):
        return g.pos

    def incompatible(self, g, t):
        self.validate(g)
        self.validate(t)
        return math.dist(g.pos, t.pos) < self.r

    def neighbor_count(self, g, xi) -> int:
        return sum(1 for t in xi if math.dist(g.pos, t.pos) < self.r)

    def acceptance(self, g, xi):
        n = self.neighbor_count(g, xi)
        if self.hard_core:
            return 1.0 if n == 0 else 0.0
        return math.exp(self.beta2 * n)

    def intersects(self, g, window):
        return window.contains(g.pos)

    def dominating_mass(self, region):
        if region is None:
            raise UnboundedRegion("region must be bounded")
        return self.density * region.volume

    def sample_individual(self, s, box):
        return Germ(tuple(a + (b - a) * s.uniform() for a, b in zip(box.lo, box.hi)))

    def influence_box(self, g):
        return Box(tuple(c - self.r for c in g.pos), tuple(c + self.r for c in g.pos))

    def window_box(self, window):
        return window.bounding_box() if isinstance(window, Ball) else window

    def alpha_bounds(self):
        return {"strauss": self.density * ball_volume(self.dim, self.r)}

    def individual_to_json(self, g):
        return list(g.pos)

    def individual_from_json(self, obj):
        return Germ(tuple(float(v) for v in obj))

    def describe(self):
        return {"kind": self.kind, "beta1": self.beta1,
                "beta2": "-inf" if self.hard_core else self.beta2,
                "r": self.r, "base_rate": self.base_rate, "dim": self.dim}


def strauss_model(beta1: float, beta2: float, r: float, base_rate: float = 1.0, dim: int = 2) -> StraussModel:
    return StraussModel(beta1, beta2, r, base_rate, dim)


# --------------------------------------------------------------------------
# loss network


@dataclass(frozen=True)
class LengthLaw:
    """Bounded call-length law: ``fixed(L)``, ``uniform(0, lmax)`` or an
    exponential of the given mean truncated at ``lmax``."""

    kind: str
    L: float = 0.0
    lmax: float = 0.0
    mean: float = 0.0

    def __post_init__(self):
        if self.kind == "fixed":
            if not (self.L > 0 and math.isfinite(self.L)):
                raise ModelError("fixed length must be positive and finite")
        elif self.kind in ("uniform", "truncexp"):
            if not (self.lmax > 0 and math.isfinite(self.lmax)):
                raise UnboundedRegion("call lengths need a finite cutoff lmax")
            if self.kind == "truncexp" and not self.mean > 0:
                raise ModelError("truncated exponential needs a positive mean")
        else:
            raise ModelError(f"unknown length law {self.kind!r}")

    @property
    def sup(self) -> float:
        return self.L if self.kind == "fixed" else self.lmax

    @property
    def moments(self) -> tuple[float, float]:
        """First and second moments."""
        if self.kind == "fixed":
            return self.L, self.L**2
        if self.kind == "uniform":
            return self.lmax / 2, self.lmax**2 / 3
        lam, c = 1 / self.mean, self.lmax
        z = -math.expm1(-lam * c)
        e = math.exp(-lam * c)
        m1 = (1 / lam - e * (c + 1 / lam)) / z
        m2 = (2 / lam**2 - e * (c * c + 2 * c / lam + 2 / lam**2)) / z
        return m1, m2

    def sample(self, s) -> float:
        """One uniform, by inversion."""
        u = s.uniform()
        if self.kind == "fixed":
            return self.L
        if self.kind == "uniform":
            # open at 0: lengths must be positive
            return self.lmax * (1.0 - u)
        lam = 1 / self.mean
        return -math.log1p(-u * -math.expm1(-lam * self.lmax)) / lam

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "L": self.L}
        if self.kind == "uniform":
            return {"kind": "uniform", "lmax": self.lmax}
        return {"kind": "truncexp", "mean": self.mean, "lmax": self.lmax}


class LossNetworkModel(ContinuousModel):
    """Calls ``[x, x+L]`` with leftmost points at rate ``kappa`` and lengths
    from ``law``; a call is refused if some point of its span would carry more
    than ``C`` calls.  Sizes are ``max(L, 1)``."""

    kind = "lossnet"
    exclusion = True
    dim = 1

    def __init__(self, kappa: float, law: LengthLaw, C: int = 1):
        if not kappa > 0:
            raise ModelError("kappa must be positive")
        if int(C) != C or C < 1:
            raise ModelError("capacity C must be a positive integer")
        self.kappa, self.law, self.C = float(kappa), law, int(C)
        self.density = self.kappa

    def validate(self, g):
        if not isinstance(g, Call) or not g.length > 0:
            raise InvalidIndividual(f"{g!r} is not a call")

    def germ(self, g):
        return (g.x,)

    def incompatible(self, g, t):
        self.validate(g)
        self.validate(t)
        return g.x <= t.right and t.x <= g.right

    def load(self, g: Call, xi: Sequence[Call]) -> int:
        """Largest number of calls of ``xi`` over a point of ``g``'s span."""
        events = []
        for t in xi:
            lo, hi = max(t.x, g.x), min(t.right, g.right)
            if lo <= hi:
                events.append((lo, 0))
                events.append((hi, 1))
        best = cur = 0
        for _, kind in sorted(events):
            if kind == 0:
                cur += 1
                best = max(best, cur)
            else:
                cur -= 1
        return best

    def acceptance(self, g, xi):
        return 1.0 if self.load(g, xi) + 1 <= self.C else 0.0

    def size(self, g):
        return max(g.length, 1.0)

    def intersects(self, g, window):
        return g.x <= window.hi[0] and window.lo[0] <= g.right

    def dominating_mass(self, region):
        if region is None:
            raise UnboundedRegion("region must be bounded")
        rho1, _ = self.law.moments
        return self.kappa * (region.hi[0] - region.lo[0] + rho1)

    def sample_individual(self, s, box):
        x = box.lo[0] + (box.hi[0] - box.lo[0]) * s.uniform()
        return Call(x, self.law.sample(s))

    def influence_box(self, g):
        return Box((g.x - self.law.sup,), (g.right,))

    def window_box(self, window):
        return Box((window.lo[0] - self.law.sup,), (window.hi[0],))

    def alpha_bounds(self):
        rho1, rho2 = self.law.moments
        k = self.kappa
        return {
            "unit_size": k * (rho1 + self.law.sup),
            "size_max_L_1": k * (rho2 + rho1 + 1),
            "maric": k * (math.sqrt(rho2) + rho1),
        }

    def individual_to_json(self, g):
        return {"x": g.x, "L": g.length}

    def individual_from_json(self, obj):
        return Call(float(obj["x"]), float(obj["L"]))

    def describe(self):
        return {"kind": self.kind, "kappa": self.kappa, "C": self.C, "pi": self.law.to_dict()}


def lossnet_model(kappa: float, law: LengthLaw, C: int = 1) -> LossNetworkModel:
    return LossNetworkModel(kappa, law, C)
