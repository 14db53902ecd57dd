"""Exact laws of tiny discrete models, exact draws, and the comparison harness."""
from __future__ import annotations

import bisect
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .discrete import BondConfig, RandomClusterModel, all_bond_configs, rc_project
from .model import Configuration, ModelSpec
from .randomness import RandomStream

MAX_STATES = 2 ** 20


class StateSpaceTooLarge(ValueError):
    def __init__(self, estimate: float):
        super().__init__(f"configuration space too large to enumerate "
                         f"(at least {estimate:.3g} states, limit {MAX_STATES})")
        self.estimate = estimate


@dataclass
class ExactLaw:
    """Finite law over configurations keyed by ``Configuration.key()``."""

    keys: list[tuple]
    probs: list[float]
    Z: float
    configs: dict = field(default_factory=dict, repr=False)
    tail_mass: float = 0.0

    def __post_init__(self):
        self._index = {k: i for i, k in enumerate(self.keys)}
        self._cum = list(np.cumsum(self.probs))

    def prob(self, key) -> float:
        i = self._index.get(key)
        return 0.0 if i is None else self.probs[i]

    def as_dict(self) -> dict:
        return dict(zip(self.keys, self.probs))

    def __len__(self):
        return len(self.keys)

    def to_records(self, m: ModelSpec) -> str:
        """One JSON object per atom, for committed regression baselines."""
        out = []
        for k, p in zip(self.keys, self.probs):
            ind = [[m.individual_to_json(g), n] for g, n in k]
            out.append(json.dumps({"configuration": ind, "p": p}, separators=(",", ":")))
        return "\n".join(out) + "\n"


def _law_from_weights(items: list[tuple[Configuration, float]], tail: float = 0.0) -> ExactLaw:
    Z = math.fsum(w for _, w in items)
    keys = [c.key() for c, _ in items]
    probs = [w / Z for _, w in items]
    return ExactLaw(keys, probs, Z, {c.key(): c for c, _ in items}, tail)


def _independent_sets(fam: list, weights: list[float], clash: list[set[int]]):
    """Yield ``(indices, weight)`` for all pairwise-compatible subsets."""
    n = len(fam)
    count = 0
    chosen: list[int] = []

    def rec(i, banned: frozenset, w):
        nonlocal count
        if i == n:
            count += 1
            if count > MAX_STATES:
                raise StateSpaceTooLarge(count)
            yield list(chosen), w
            return
        yield from rec(i + 1, banned, w)
        if i not in banned:
            chosen.append(i)
            yield from rec(i + 1, banned | clash[i], w * weights[i])
            chosen.pop()

    yield from rec(0, frozenset(), 1.0)


def enumerate_exact(m: ModelSpec, window=None, cap: int = 6) -> ExactLaw:
    """Exact finite-volume law of a discrete model on ``window``.

    Exclusion models: pairwise compatible sets with product weights.
    Free models: independent Poisson multiplicities truncated at ``cap``;
    the truncated mass is kept in ``tail_mass``.
    """
    if not m.discrete:
        raise ValueError("exact enumeration is for discrete models only")
    fam_w = m.family(window)
    fam = list(fam_w)
    if m.exclusion:
        clash = [{j for j, t in enumerate(fam) if m.incompatible(g, t)} for g in fam]
        items = []
        for idx, w in _independent_sets(fam, [fam_w[g] for g in fam], clash):
            items.append((Configuration.of([fam[i] for i in idx], window), w))
        return _law_from_weights(items)
    # free: product of truncated Poisson laws
    if (cap + 1) ** len(fam) > MAX_STATES:
        raise StateSpaceTooLarge((cap + 1) ** len(fam))
    items = []
    tail = 1.0 - math.prod(stats.poisson.cdf(cap, fam_w[g]) for g in fam)
    for ns in np.ndindex(*([cap + 1] * len(fam))):
        w = math.prod(stats.poisson.pmf(n, fam_w[g]) for g, n in zip(fam, ns))
        c = Configuration.of([g for g, n in zip(fam, ns) for _ in range(n)], window)
        items.append((c, w))
    return _law_from_weights(items, tail)


# --------------------------------------------------------------------------
# random cluster


def rc_bond_law(m: RandomClusterModel) -> dict[BondConfig, float]:
    """Normalized law ``p^open (1-p)^closed q^clusters`` over bond configurations."""
    w = {z: m.p ** z.n_open * (1 - m.p) ** z.n_closed * m.q ** z.n_clusters
         for z in all_bond_configs(m.grid)}
    Z = math.fsum(w.values())
    return {z: v / Z for z, v in w.items()}


def rc_pushforward(m: RandomClusterModel) -> ExactLaw:
    """Law of the animal configuration obtained by splitting a random bond
    configuration into its open clusters."""
    acc: dict = {}
    configs = {}
    for z, p in rc_bond_law(m).items():
        c = Configuration.of(rc_project(z))
        acc.setdefault(c.key(), []).append(p)
        configs[c.key()] = c
    keys = sorted(acc)
    return ExactLaw(keys, [math.fsum(acc[k]) for k in keys], 1.0, configs)


def rc_exact_law(m: RandomClusterModel) -> ExactLaw:
    return enumerate_exact(m, None)


def max_abs_difference(a: ExactLaw, b: ExactLaw) -> float:
    keys = set(a.keys) | set(b.keys)
    return max(abs(a.prob(k) - b.prob(k)) for k in keys)


# --------------------------------------------------------------------------
# draws and statistics


def exact_sample(law: ExactLaw, s: RandomStream) -> Configuration:
    u = s.uniform() * law._cum[-1]
    i = min(bisect.bisect_right(law._cum, u), len(law.keys) - 1)
    k = law.keys[i]
    return law.configs.get(k) or Configuration(Counter(dict(k)))


def tv_distance(empirical, law: ExactLaw) -> float:
    """Half the L1 distance between the normalized counts and ``law``."""
    counts = Counter(empirical)
    n = sum(counts.values())
    if n == 0:
        raise ValueError("no observations")
    keys = set(counts) | set(law.keys)
    return 0.5 * math.fsum(abs(counts.get(k, 0) / n - law.prob(k)) for k in keys)


@dataclass
class ChiSquare:
    statistic: float
    p_value: float
    dof: int
    cells: int


def _pool(obs: np.ndarray, exp: np.ndarray, min_expected: float):
    order = np.argsort(exp, kind="stable")
    obs, exp = obs[order], exp[order]
    # merge the smallest cells until the pooled cell reaches min_expected
    k = 0
    while k < len(exp) - 1 and exp[:k + 1].sum() < min_expected:
        k += 1
    o = np.concatenate([[obs[:k + 1].sum()], obs[k + 1:]])
    e = np.concatenate([[exp[:k + 1].sum()], exp[k + 1:]])
    return o, e


def chisq_gof(observed, expected, min_expected: float = 5.0) -> ChiSquare:
    """Pearson goodness of fit.  ``observed`` are counts, ``expected``
    probabilities over the same cells (a residual cell is added when they
    sum to less than one).  Cells below ``min_expected`` are pooled."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(expected, dtype=float)
    n = obs.sum()
    if n <= 0:
        raise ValueError("all observations are zero")
    if np.any((p <= 0) & (obs > 0)):
        # an observation the law calls impossible; pooling must not hide it
        return ChiSquare(math.inf, 0.0, len(obs) - 1, len(obs))
    rest = 1.0 - p.sum()
    if rest > 1e-12:
        obs = np.append(obs, 0.0)
        p = np.append(p, rest)
    o, e = _pool(obs, p * n, min_expected)
    if np.any((e <= 0) & (o > 0)):
        return ChiSquare(math.inf, 0.0, len(o) - 1, len(o))
    keep = e > 0
    o, e = o[keep], e[keep]
    if len(o) < 2:
        return ChiSquare(0.0, 1.0, 0, len(o))
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(o) - 1
    return ChiSquare(stat, float(stats.chi2.sf(stat, dof)), dof, len(o))


def poisson_gof(counts, mean: float) -> ChiSquare:
    """Observed window counts against Poisson(mean)."""
    counts = np.asarray(counts)
    kmax = int(counts.max())
    obs = np.bincount(counts, minlength=kmax + 2).astype(float)
    probs = stats.poisson.pmf(np.arange(kmax + 1), mean)
    probs = np.append(probs, stats.poisson.sf(kmax, mean))
    return chisq_gof(obs, probs)


def chisq_two_sample(a, b, min_expected: float = 5.0) -> ChiSquare:
    """Homogeneity test for two samples of hashable labels."""
    ca, cb = Counter(a), Counter(b)
    if not ca or not cb:
        raise ValueError("both samples must be nonempty")
    keys = sorted(set(ca) | set(cb), key=repr)
    table = np.array([[ca.get(k, 0) for k in keys], [cb.get(k, 0) for k in keys]], float)
    # pool rare columns (expected count below threshold in either row)
    tot = table.sum(axis=1, keepdims=True)
    colsum = table.sum(axis=0)
    exp_min = colsum * tot.min() / tot.sum()
    rare = exp_min < min_expected
    if rare.any():
        pooled = table[:, rare].sum(axis=1, keepdims=True)
        table = np.hstack([table[:, ~rare], pooled])
        if pooled.sum() * tot.min() / tot.sum() < min_expected and table.shape[1] > 2:
            table = np.hstack([table[:, :-2], table[:, -2:].sum(axis=1, keepdims=True)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return ChiSquare(0.0, 1.0, 0, table.shape[1])
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return ChiSquare(float(stat), float(p), int(dof), table.shape[1])


@dataclass
class CompareReport:
    n: int
    tv: float
    chisq: ChiSquare
    level: float
    passed: bool

    def text(self) -> str:
        return (f"n={self.n} TV={self.tv:.5f} chi2={self.chisq.statistic:.4g} "
                f"dof={self.chisq.dof} p={self.chisq.p_value:.4g} "
                f"-> {'pass' if self.passed else 'FAIL'} at level {self.level}")


def compare_counts(counts: Counter, law: ExactLaw, level: float = 0.01) -> CompareReport:
    n = sum(counts.values())
    keys = list(law.keys)
    extra = [k for k in counts if k not in law._index]
    obs = [counts.get(k, 0) for k in keys] + [counts[k] for k in extra]
    probs = list(law.probs) + [0.0] * len(extra)
    cs = chisq_gof(obs, probs)
    return CompareReport(n, tv_distance(counts, law), cs, level, cs.p_value > level)


def compare(sampler: Callable[[int], Configuration], law: ExactLaw, n: int,
            level: float = 0.01) -> CompareReport:
    """Draw ``sampler(i)`` for ``i < n`` and test the counts against ``law``."""
    if n < 1000:
        raise ValueError(f"compare needs n >= 1000, got {n}")
    counts = Counter(sampler(i).key() for i in range(n))
    return compare_counts(counts, law, level)
