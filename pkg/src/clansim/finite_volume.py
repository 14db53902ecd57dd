"""Forward constructions on a bounded domain, used as independent oracles.

Every construction runs the free process restricted to individuals meeting
``domain`` and thins it with the acceptance test.  Draw order per attempted
birth (shared by ``simulate_forward`` and ``two_sweep``): Exp(R) waiting
time, the individual, its Exp(1) lifetime, then its flag.  Initial
individuals draw only a lifetime, in canonical sorted order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from scipy import stats

from .clan import Cylinder, TruncatedClan
from .cleaner import KeptSet, birth_order, clean_cylinders, project
from .model import Configuration, ModelSpec, UnboundedRegion, sort_key
from .randomness import RandomStream


class RegenerationTooDeep(TruncatedClan):
    """No empty instant of the free process found within the depth limit."""

    def __init__(self, depth: float):
        super().__init__(f"regeneration search exceeded depth limit at {depth:.3f}")
        self.depth = depth


class FreeFamily:
    """Sampler of the free birth law over the individuals meeting ``domain``.

    ``rate`` is the total birth rate.  ``draw`` may return ``None`` for a
    continuous candidate that misses the domain; such candidates belong to a
    larger dominating process and are dropped by callers.
    """

    def __init__(self, m: ModelSpec, domain):
        self.m, self.domain = m, domain
        if m.discrete:
            fam = m.family(domain)
            self.items = list(fam)
            self.cum = []
            acc = 0.0
            for g in self.items:
                acc += fam[g]
                self.cum.append(acc)
            self.rate = acc
        else:
            if domain is None:
                raise UnboundedRegion("continuous models need a bounded domain")
            self.box = m.window_box(domain)
            self.rate = m.density * self.box.volume

    def draw(self, s: RandomStream):
        if self.m.discrete:
            return self.items[s.choice_index(self.cum)]
        g = self.m.sample_individual(s, self.box)
        return g if self.m.intersects(g, self.domain) else None


@dataclass
class Event:
    time: float
    kind: str          # "birth" or "death"
    index: int
    kept: bool | None = None


@dataclass
class Trajectory:
    """Initial cylinders come first in ``cylinders``; ``kept`` lists the
    cylinders that survive the acceptance test (initial ones included)."""

    t0: float
    t_fin: float
    cylinders: list[Cylinder] = field(default_factory=list)
    n_initial: int = 0
    events: list[Event] = field(default_factory=list)
    kept: list[int] = field(default_factory=list)

    def at(self, t: float, window=None, m: ModelSpec | None = None) -> Configuration:
        """Configuration at time ``t``: bases of kept cylinders alive then."""
        out = [self.cylinders[i].basis for i in self.kept
               if self.cylinders[i].birth <= t < self.cylinders[i].death]
        if window is not None and m is not None:
            out = [g for g in out if m.intersects(g, window)]
        return Configuration.of(out, window)

    def final(self) -> Configuration:
        return self.at(self.t_fin)

    def to_text(self, m: ModelSpec) -> str:
        import json
        lines = []
        for e in self.events:
            c = self.cylinders[e.index]
            lines.append(f"{e.time:.17g}\t{e.kind}\t{e.index}\t"
                         f"{json.dumps(m.individual_to_json(c.basis))}\t{e.kept}")
        return "\n".join(lines) + ("\n" if lines else "")


def _initial_cylinders(xi0: Configuration | None, t0: float, s: RandomStream) -> list[Cylinder]:
    out = []
    if xi0 is None:
        return out
    for g in sorted(xi0, key=sort_key):
        out.append(Cylinder(g, t0, s.exponential(1.0), None, None))
    return out


def _free_sweep(fam: FreeFamily, t0: float, t_fin: float, s: RandomStream):
    """Yield free cylinders (with flags) born in ``(t0, t_fin]`` in time order."""
    if fam.rate <= 0:
        return
    t = t0
    while True:
        t += s.exponential(fam.rate)
        if t > t_fin:
            return
        g = fam.draw(s)
        life = s.exponential(1.0)
        z = s.uniform()
        if g is not None:
            yield Cylinder(g, t, life, None, z)


def _check_span(t_span):
    t0, t_fin = t_span
    if not t0 <= t_fin:
        raise ValueError("t_span must be increasing")
    return float(t0), float(t_fin)


def simulate_forward(m: ModelSpec, domain, xi0: Configuration | None, t_span,
                     s: RandomStream) -> Trajectory:
    """Sequential construction: each free birth is accepted iff its flag is
    below ``M(g | current configuration)``."""
    t0, t_fin = _check_span(t_span)
    fam = FreeFamily(m, domain)
    tr = Trajectory(t0, t_fin)
    tr.cylinders = _initial_cylinders(xi0, t0, s)
    tr.n_initial = len(tr.cylinders)
    tr.kept = list(range(tr.n_initial))
    alive = list(tr.kept)
    deaths: list[tuple[float, int]] = [(tr.cylinders[i].death, i) for i in alive]
    for c in _free_sweep(fam, t0, t_fin, s):
        # retire everything that died strictly before this birth
        for d, i in sorted(deaths):
            if d < c.birth:
                tr.events.append(Event(d, "death", i))
        deaths = [(d, i) for d, i in deaths if d >= c.birth]
        alive = [i for _, i in deaths]
        xi = [tr.cylinders[i].basis for i in alive]
        idx = len(tr.cylinders)
        tr.cylinders.append(c)
        keep = c.flag < m.acceptance(c.basis, [g for g in xi if m.incompatible(c.basis, g)])
        tr.events.append(Event(c.birth, "birth", idx, keep))
        if keep:
            tr.kept.append(idx)
            deaths.append((c.death, idx))
    for d, i in sorted(deaths):
        if d < t_fin:
            tr.events.append(Event(d, "death", i))
    return tr


def two_sweep(m: ModelSpec, domain, xi0: Configuration | None, t_span,
              s: RandomStream) -> tuple[KeptSet, Trajectory]:
    """Generate all free cylinders first, then replay the acceptance tests in
    birth order."""
    t0, t_fin = _check_span(t_span)
    fam = FreeFamily(m, domain)
    tr = Trajectory(t0, t_fin)
    tr.cylinders = _initial_cylinders(xi0, t0, s)
    tr.n_initial = len(tr.cylinders)
    tr.cylinders.extend(_free_sweep(fam, t0, t_fin, s))
    cyl = tr.cylinders
    order = sorted(range(tr.n_initial, len(cyl)), key=lambda i: (cyl[i].birth, i))
    ks = clean_cylinders(cyl, m, lambda i: cyl[i].flag, order=order,
                         initial=tuple(range(tr.n_initial)))
    tr.kept = sorted(ks.kept)
    verdict = {v.index: v.kept for v in ks.verdicts}
    for i in order:
        tr.events.append(Event(cyl[i].birth, "birth", i, verdict[i]))
    for i in tr.kept:
        if cyl[i].death < t_fin:
            tr.events.append(Event(cyl[i].death, "death", i))
    tr.events.sort(key=lambda e: (e.time, e.kind != "death"))
    return ks, tr


def regeneration_cylinders(fam: FreeFamily, s: RandomStream, max_depth: float = 1e3):
    """Free cylinders born after the last instant before 0 at which none is alive.

    The free process is stationary and time-reversible, so its reversal is
    again an infinite-server queue: start with Poisson(R) individuals present
    at 0 whose ages are Exp(1), let reversed arrivals come at rate R, and stop
    when the system empties.  Returns ``(cylinders, depth)``; cylinders
    carry no flag.  Draws: the Poisson count, then per present individual its
    age, residual life and basis, then per reversed arrival the gap, the
    length and the basis.
    """
    rate = fam.rate
    cyl: list[Cylinder] = []
    if rate <= 0:
        return cyl, 0.0
    n0 = int(stats.poisson.ppf(s.uniform(), rate))
    busy_until = 0.0   # reversed time at which every present individual has left
    for _ in range(n0):
        age = s.exponential(1.0)
        resid = s.exponential(1.0)
        g = fam.draw(s)
        busy_until = max(busy_until, age)
        if g is not None:
            cyl.append(Cylinder(g, -age, age + resid))
    r = 0.0
    while True:
        r += s.exponential(rate)
        if r > busy_until:
            break
        if r > max_depth:
            raise RegenerationTooDeep(r)
        length = s.exponential(1.0)
        g = fam.draw(s)
        busy_until = max(busy_until, r + length)
        if g is not None:
            cyl.append(Cylinder(g, -(r + length), length))
    if busy_until > max_depth:
        raise RegenerationTooDeep(busy_until)
    return cyl, busy_until


def stationary_run(m: ModelSpec, window, s: RandomStream, domain=None,
                   max_depth: float = 1e3) -> tuple[Configuration, float, int]:
    """``stationary_window`` plus the regeneration depth and the number of
    free cylinders that were cleaned."""
    if domain is None:
        domain = window
    fam = FreeFamily(m, domain)
    cyl, depth = regeneration_cylinders(fam, s, max_depth)
    ks = clean_cylinders(cyl, m, lambda i: s.uniform(), order=birth_order(cyl))
    return project(ks, window, m), depth, len(cyl)


def stationary_window(m: ModelSpec, window, s: RandomStream, domain=None,
                      max_depth: float = 1e3) -> Configuration:
    """Exact sample of the finite-volume law on ``domain`` seen through ``window``.

    ``domain`` defaults to ``window``.  Cleaning starts from the empty
    regeneration instant, so the result has the stationary law of the
    finite-volume process on ``domain``.
    """
    return stationary_run(m, window, s, domain, max_depth)[0]
