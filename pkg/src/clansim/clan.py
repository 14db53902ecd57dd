"""Backward-in-time construction of the clan of ancestors of a window.

Discrete models.  Potential bases are grouped by their current value of
``TI`` (the birth of the most recently inserted clan cylinder they clash
with, or 0 for bases that only meet the window).  Within a group every basis
has the intensity ``w * exp(-(s + TI))`` (it must live from its birth at
``-s`` up to ``TI``), so the group's first event is drawn
once from the pooled mass and the basis is then picked proportionally to
``w``.  A group's pending time is kept until its membership changes; by the
independent increments of Poisson processes the kept time is still a valid
draw of the first event after the new backward time.

Continuous models.  Candidates come from a dominating process made of one
box per clan cylinder (plus one for the window), box ``k`` carrying the
intensity ``density * exp(-(s + birth_k))``.  A candidate at ``theta`` is
kept with probability ``1{theta potential} exp(-TI) / sum_{k: theta in box k}
exp(-birth_k)``, which never exceeds one because the cylinder realising
``TI`` has a box containing ``theta``.

Canonical draw order, per iteration:
  discrete:   one uniform per resampled group (ascending group id, window
              group first), then the basis choice, then Exp(1) for the
              lifetime surplus.
  continuous: candidate time, box choice, germ coordinates and mark (see
              ``sample_individual``), acceptance uniform, and Exp(1) if kept.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any

from .model import ModelSpec
from .randomness import INFINITY, RandomStream, sample_first_event


class NotSubcritical(RuntimeError):
    """The model is not certified subcritical and no override was given."""


class TruncatedClan(RuntimeError):
    """An operation needs a complete clan but got a truncated one."""


@dataclass(slots=True)
class Cylinder:
    basis: Any
    birth: float
    lifetime: float
    parent: int | None = None
    flag: float | None = None

    @property
    def death(self) -> float:
        return self.birth + self.lifetime

    def alive_at(self, t: float) -> bool:
        return self.birth <= t <= self.birth + self.lifetime


@dataclass
class Limits:
    """Impatience limits: backward depth, cylinder count, basis size."""

    max_depth: float = 1e3
    max_size: int = 10**6
    size_cutoff: float | None = None

    def __post_init__(self):
        if not (self.max_depth > 0 and self.max_size > 0):
            raise ValueError("limits must be positive")
        if self.size_cutoff is not None and not self.size_cutoff > 0:
            raise ValueError("limits must be positive")


@dataclass
class Clan:
    """Cylinders in insertion order (strictly decreasing births)."""

    window: Any
    cylinders: list[Cylinder] = field(default_factory=list)
    depth: float = 0.0
    truncated: bool = False
    reason: str | None = None
    uniforms: int = 0
    max_basis_size: float = 0.0
    _gen: list | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.cylinders)

    def roots(self, m: ModelSpec) -> list[int]:
        return [i for i, c in enumerate(self.cylinders)
                if c.death >= 0 and m.intersects(c.basis, self.window)]

    def ancestors_of(self, m: ModelSpec, i: int) -> list[int]:
        """Clan cylinders alive at the birth of cylinder i that clash with it."""
        c = self.cylinders[i]
        return [j for j in range(i + 1, len(self.cylinders))
                if self.cylinders[j].death >= c.birth
                and m.incompatible(c.basis, self.cylinders[j].basis)]

    def generation_index(self, m: ModelSpec) -> list[int | None]:
        """Shortest ancestor-link distance to a root (roots are 0)."""
        if self._gen is None:
            gen: list[int | None] = [None] * len(self.cylinders)
            queue = deque()
            for r in self.roots(m):
                gen[r] = 0
                queue.append(r)
            while queue:
                i = queue.popleft()
                for j in self.ancestors_of(m, i):
                    if gen[j] is None:
                        gen[j] = gen[i] + 1
                        queue.append(j)
            self._gen = gen
        return self._gen

    def generations(self, m: ModelSpec) -> list[list[int]]:
        """``[A_0 (roots), A_1, A_2, ...]`` as lists of cylinder indices."""
        gen = self.generation_index(m)
        out: list[list[int]] = []
        for i, g in enumerate(gen):
            if g is None:
                continue
            while len(out) <= g:
                out.append([])
            out[g].append(i)
        return out

    def n_generations(self, m: ModelSpec) -> int:
        return len(self.generations(m))


def clan_generations(c: Clan, m: ModelSpec) -> list[list[int]]:
    """Generations ``A_1, A_2, ...`` (roots excluded)."""
    return c.generations(m)[1:]


def check_ancestor_property(c: Clan, m: ModelSpec) -> None:
    """Every cylinder is a root or an ancestor of a later-born one."""
    cyl = c.cylinders
    for i, ci in enumerate(cyl):
        if ci.lifetime < 0:
            raise AssertionError(f"cylinder {i} has negative lifetime")
        if i + 1 < len(cyl) and not cyl[i + 1].birth < ci.birth:
            raise AssertionError("births must strictly decrease along insertion order")
        if ci.death >= 0 and m.intersects(ci.basis, c.window):
            continue
        if not any(cyl[j].birth <= ci.death and m.incompatible(cyl[j].basis, ci.basis)
                   for j in range(i)):
            raise AssertionError(f"cylinder {i} is neither a root nor an ancestor")


# --------------------------------------------------------------------------
# potential bases / TI


def ti(H: list[Cylinder], window, theta, m: ModelSpec) -> float:
    """``min{birth(C) : C in H, I(basis(C), theta) = 1}``, 0 if none.

    Raises ``ValueError`` when ``theta`` is not a potential basis.
    """
    best = None
    for c in H:
        if m.incompatible(c.basis, theta) and (best is None or c.birth < best):
            best = c.birth
    if best is not None:
        return best
    if m.intersects(theta, window):
        return 0.0
    raise ValueError(f"{theta!r} is not a potential ancestor basis")


@dataclass
class BasisDomain:
    """Potential-ancestor bases.  Discrete: ``bases`` lists them.  Continuous:
    ``boxes`` is a superset of their germs and ``member`` decides exactly."""

    bases: list | None
    boxes: list | None
    member: Any


def potential_bases(H: list[Cylinder], window, m: ModelSpec) -> BasisDomain:
    if m.discrete:
        seen: dict = {}
        for c in H:
            for t, _ in m.neighbors(c.basis):
                seen.setdefault(t, None)
        for t in m.family(window):
            seen.setdefault(t, None)
        bases = list(seen)
        return BasisDomain(bases, None, lambda t: t in seen)
    boxes = [m.window_box(window)] + [m.influence_box(c.basis) for c in H]

    def member(t):
        return m.intersects(t, window) or any(m.incompatible(c.basis, t) for c in H)
    return BasisDomain(None, boxes, member)


# --------------------------------------------------------------------------
# builders


def _window_table(m, window):
    cache = m.__dict__.setdefault("_clan_window_cache", {})
    tab = cache.get(window)
    if tab is None:
        fam = m.family(window)
        items = list(fam)
        cum, acc = [], 0.0
        for t in items:
            acc += fam[t]
            cum.append(acc)
        tab = (fam, items, cum, math.fsum(fam.values()))
        cache[window] = tab
    return tab


def _build_discrete(m, window, s: RandomStream, limits: Limits, always_resample: bool) -> Clan:
    fam, items, cum, w_fam = _window_table(m, window)
    clan = Clan(window)
    H = clan.cylinders
    claimed: dict = {}            # basis -> group id (clan index)
    claimed_window: dict = {}     # window bases that left the window group
    members: dict[int, dict] = {}
    ti_of: dict[int, float] = {-1: 0.0}
    weight: dict[int, float] = {-1: w_fam}
    pending: dict[int, float] = {}
    dirty = {-1}
    tau = 0.0
    while True:
        for g in sorted(weight) if always_resample else sorted(dirty):
            mass = weight[g]
            if mass > 0:
                # intensity mass * exp(-(s + TI)); shifted so exp(-TI) never overflows
                base = -ti_of[g]
                pending[g] = base + sample_first_event(s, mass, tau - base)
            else:
                pending[g] = INFINITY
        dirty.clear()
        gstar, t_new = -1, INFINITY
        for g, t in pending.items():
            if t < t_new:
                gstar, t_new = g, t
        if t_new == INFINITY:
            break
        if t_new > limits.max_depth:
            clan.truncated, clan.reason = True, "depth"
            break
        if len(H) >= limits.max_size:
            clan.truncated, clan.reason = True, "size"
            break
        tau = t_new
        if gstar == -1:
            while True:
                theta = items[s.choice_index(cum)]
                if theta not in claimed:
                    break
        else:
            grp = members[gstar]
            u = s.uniform() * weight[gstar]
            acc = 0.0
            theta = None
            for t, w in grp.items():
                acc += w
                theta = t
                if acc > u:
                    break
        base_ti = ti_of[gstar]
        life = tau + base_ti + s.exponential(1.0)
        assert tau + base_ti >= 0.0
        j = len(H)
        H.append(Cylinder(theta, -tau, life, None if gstar == -1 else gstar))
        clan.max_basis_size = max(clan.max_basis_size, m.size(theta))
        new: dict = {}
        for t, w in m.neighbors(theta):
            old = claimed.get(t)
            if old is not None:
                del members[old][t]
                dirty.add(old)
            elif t in fam:
                claimed_window[t] = w
                dirty.add(-1)
            claimed[t] = j
            new[t] = w
        members[j] = new
        ti_of[j] = -tau
        dirty.add(j)
        dirty.add(gstar)
        for g in dirty:
            if g == -1:
                if len(claimed_window) >= len(fam):
                    weight[-1] = 0.0
                else:
                    weight[-1] = max(0.0, w_fam - math.fsum(claimed_window.values()))
            else:
                weight[g] = math.fsum(members[g].values())
    clan.depth = tau
    return clan


def _build_continuous(m, window, s: RandomStream, limits: Limits) -> Clan:
    clan = Clan(window)
    H = clan.cylinders
    wb = m.window_box(window)
    boxes = [wb]
    depths = [0.0]     # backward depth of the box owner (0 for the window)
    tau = 0.0
    while True:
        # box k carries density * exp(-(s - depth_k)); weights taken relative to tau
        rel = [math.exp(d - tau) for d in depths]
        cum, acc = [], 0.0
        for b, f in zip(boxes, rel):
            acc += b.volume * f
            cum.append(acc)
        dt = sample_first_event(s, m.density * acc, 0.0)
        if dt == INFINITY:
            break
        t = tau + dt
        if t > limits.max_depth:
            clan.truncated, clan.reason = True, "depth"
            break
        if len(H) >= limits.max_size:
            clan.truncated, clan.reason = True, "size"
            break
        tau = t
        k = s.choice_index(cum)
        theta = m.sample_individual(s, boxes[k])
        x = m.germ(theta)
        cover = math.fsum(math.exp(d - tau) for b, d in zip(boxes, depths) if b.contains(x))
        parent = None
        for j in range(len(H) - 1, -1, -1):
            if m.incompatible(H[j].basis, theta):
                parent = j
                break
        member = parent is not None or m.intersects(theta, window)
        base_ti = H[parent].birth if parent is not None else 0.0
        u = s.uniform()
        if not member or u * cover >= math.exp(-base_ti - tau):
            continue
        life = tau + base_ti + s.exponential(1.0)
        assert tau + base_ti >= 0.0
        H.append(Cylinder(theta, -tau, life, parent))
        clan.max_basis_size = max(clan.max_basis_size, m.size(theta))
        boxes.append(m.influence_box(theta))
        depths.append(tau)
    clan.depth = tau
    return clan


def certify(m: ModelSpec) -> bool:
    return m.alpha < 1.0


def build_clan(m: ModelSpec, window, s: RandomStream, limits: Limits | None = None,
               force: bool = False, always_resample: bool = False) -> Clan:
    """Clan of ancestors of the cylinders alive at time 0 whose basis meets
    ``window``, for the free process of ``m``.

    Refuses models that are not certified subcritical unless ``force``.
    Exceeding a limit returns a partial clan with ``truncated=True``.
    """
    if not force and not certify(m):
        raise NotSubcritical(f"{m.kind}: alpha = {m.alpha:.6g} >= 1; pass force=True to override")
    limits = limits or Limits()
    start = s.counter
    if m.discrete:
        clan = _build_discrete(m, window, s, limits, always_resample)
    else:
        clan = _build_continuous(m, window, s, limits)
    clan.uniforms = s.counter - start
    if (not clan.truncated and limits.size_cutoff is not None
            and clan.max_basis_size >= limits.size_cutoff):
        clan.truncated, clan.reason = True, "size_cutoff"
    return clan


# --------------------------------------------------------------------------
# text format: one cylinder per line


def clan_to_text(c: Clan, m: ModelSpec) -> str:
    import json
    gen = c.generation_index(m)
    lines = [f"# depth={c.depth!r} truncated={c.truncated} n={len(c)}"]
    for i, cy in enumerate(c.cylinders):
        lines.append("\t".join([
            json.dumps(m.individual_to_json(cy.basis), separators=(",", ":")),
            repr(cy.birth), repr(cy.lifetime),
            "-" if cy.parent is None else str(cy.parent),
            "-" if gen[i] is None else str(gen[i]),
        ]))
    return "\n".join(lines) + "\n"


def clan_from_text(text: str, m: ModelSpec, window) -> Clan:
    import json
    lines = text.splitlines()
    head = dict(kv.split("=") for kv in lines[0][2:].split())
    clan = Clan(window, depth=float(head["depth"]), truncated=head["truncated"] == "True")
    for ln in lines[1:]:
        b, birth, life, parent, _ = ln.split("\t")
        clan.cylinders.append(Cylinder(m.individual_from_json(json.loads(b)), float(birth),
                                       float(life), None if parent == "-" else int(parent)))
    return clan
