"""Forward trimming of a clan into kept cylinders, and projection at time 0."""
from __future__ import annotations

from dataclasses import dataclass, field

from .clan import Clan, Cylinder, TruncatedClan
from .model import Configuration, ModelSpec
from .randomness import RandomStream


@dataclass
class Verdict:
    index: int
    m_value: float
    flag: float
    kept: bool


@dataclass
class KeptSet:
    """Kept cylinder indices (into ``cylinders``) and the verdict log in test order."""

    cylinders: list[Cylinder]
    kept: list[int] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    biased: bool = False

    def kept_cylinders(self) -> list[Cylinder]:
        return [self.cylinders[i] for i in self.kept]


def birth_order(cylinders: list[Cylinder]) -> list[int]:
    """Increasing birth; ties go to the later-inserted cylinder first."""
    return sorted(range(len(cylinders)), key=lambda i: (cylinders[i].birth, -i))


def clean_cylinders(cylinders: list[Cylinder], m: ModelSpec, flags, order=None,
                    initial: tuple[int, ...] = ()) -> KeptSet:
    """Test each cylinder in ``order`` against the kept cylinders alive at its
    birth that clash with it.  ``flags(i)`` returns the uniform for cylinder
    ``i``; indices in ``initial`` are kept without a test."""
    out = KeptSet(cylinders)
    alive: list[int] = list(initial)
    out.kept.extend(initial)
    for i in order if order is not None else birth_order(cylinders):
        if i in initial:
            continue
        c = cylinders[i]
        b = c.birth
        alive = [j for j in alive if cylinders[j].death >= b]
        xi = [cylinders[j].basis for j in alive if m.incompatible(c.basis, cylinders[j].basis)]
        mv = m.acceptance(c.basis, xi)
        z = flags(i)
        keep = z < mv
        out.verdicts.append(Verdict(i, mv, z, keep))
        if keep:
            out.kept.append(i)
            alive.append(i)
    return out


def clean(c: Clan, m: ModelSpec, s: RandomStream, biased: bool = False) -> KeptSet:
    """Keep-or-erase pass over a complete clan, one fresh uniform per cylinder
    in birth order."""
    if c.truncated and not biased:
        raise TruncatedClan(f"clan truncated ({c.reason}); pass biased=True to clean anyway")
    ks = clean_cylinders(c.cylinders, m, lambda i: s.uniform())
    ks.biased = c.truncated
    return ks


def project(k: KeptSet, window, m: ModelSpec, t: float = 0.0) -> Configuration:
    """Bases of kept cylinders alive at ``t`` that meet ``window``."""
    return Configuration.of((c.basis for c in k.kept_cylinders()
                             if c.alive_at(t) and m.intersects(c.basis, window)), window)


def perfect_sample(m: ModelSpec, window, s: RandomStream, limits=None, force: bool = False,
                   biased: bool = False):
    """Build the clan, clean it and project.  Returns ``(configuration, clan)``."""
    from .clan import build_clan
    clan = build_clan(m, window, s, limits, force=force)
    if clan.truncated and not biased:
        return None, clan
    ks = clean(clan, m, s, biased=biased)
    return project(ks, window, m), clan
