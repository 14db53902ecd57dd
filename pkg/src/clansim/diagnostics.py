"""Subcriticality certificates, generation-decay checks and the bias ledger."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .clan import Clan
from .model import ModelSpec

# one-line description of the size function each model uses
SIZE_FUNCTIONS = {
    "toy": "q = sizes table (default 1)",
    "contour": "q = number of links",
    "random_cluster": "q = number of vertices",
    "area": "q = 1",
    "strauss": "q = 1",
    "lossnet": "q = max(L, 1)",
}


@dataclass
class SubcriticalityReport:
    model: str
    alpha: float
    q: str
    bounds: dict[str, float]
    subcritical: bool
    tail_note: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def text(self) -> str:
        lines = [f"model: {self.model}", f"size function: {self.q}"]
        for k, v in self.bounds.items():
            lines.append(f"  bound {k}: {v:.10g}")
        lines.append(f"alpha = {self.alpha:.10g}")
        if self.tail_note:
            lines.append(f"note: {self.tail_note}")
        lines.append("verdict: " + ("subcritical" if self.subcritical else "not certified"))
        return "\n".join(lines)


def alpha(m: ModelSpec) -> SubcriticalityReport:
    """Tightest closed-form bound available for ``m``.  A value >= 1 means
    "not certified", never "supercritical"."""
    bounds = dict(m.alpha_bounds())
    a = min(bounds.values())
    note = None
    if m.kind == "contour":
        note = (f"contours longer than the cutoff k={m.cutoff} are excluded; "
                f"their weight is of order exp(-beta*k) = {math.exp(-m.beta * m.cutoff):.3g}")
    return SubcriticalityReport(m.kind, a, SIZE_FUNCTIONS.get(m.kind, "q = size(g)"),
                                bounds, a < 1.0, note)


# --------------------------------------------------------------------------
# generation decay


@dataclass
class GenerationDecay:
    n: list[int]
    mean: list[float]
    se: list[float]
    bound: list[float]
    ratio: list[float | None]
    violations: list[int]
    n_clans: int

    @property
    def ok(self) -> bool:
        return not self.violations


def generation_sizes(clans, m: ModelSpec, n_max: int) -> np.ndarray:
    """``|A_n|`` for n = 0..n_max, one row per clan (A_0 = roots)."""
    out = np.zeros((len(clans), n_max + 1))
    for r, c in enumerate(clans):
        for n, gen in enumerate(c.generations(m)[:n_max + 1]):
            out[r, n] = len(gen)
    return out


def generation_decay_check(clans, m: ModelSpec, alpha_value: float, q_root: float = 1.0,
                           n_max: int = 6) -> GenerationDecay:
    """Compare the empirical ``E|A_n|`` with ``q_root * alpha**n``; flag ``n``
    where the mean exceeds the bound by more than three standard errors."""
    sizes = generation_sizes(clans, m, n_max) if len(clans) else np.zeros((0, n_max + 1))
    k = max(len(clans), 1)
    mean = sizes.mean(axis=0) if len(clans) else np.zeros(n_max + 1)
    se = sizes.std(axis=0, ddof=1) / math.sqrt(k) if len(clans) > 1 else np.zeros(n_max + 1)
    ns = list(range(n_max + 1))
    bound = [q_root * alpha_value ** n for n in ns]
    ratio = [float(mean[n + 1] / mean[n]) if mean[n] > 0 else None for n in ns[:-1]] + [None]
    viol = [n for n in ns if mean[n] > bound[n] + 3 * se[n]]
    return GenerationDecay(ns, mean.tolist(), se.tolist(), bound, ratio, viol, len(clans))


# --------------------------------------------------------------------------
# bias


def bias_bound(p_exceed: float) -> float:
    """Total-variation cost of discarding runs that hit a limit: ``p/(1-p)``."""
    if not 0.0 <= p_exceed < 1.0:
        raise ValueError(f"p_exceed must lie in [0, 1), got {p_exceed}")
    return p_exceed / (1.0 - p_exceed)


@dataclass
class LedgerEntry:
    index: int
    depth: float
    generations: int
    uniforms: int
    size: int
    max_basis_size: float
    truncated: bool
    reason: str | None = None


@dataclass
class BiasLedger:
    """Append-only record of clan builds."""

    entries: list[LedgerEntry] = field(default_factory=list)

    def record(self, index: int, clan: Clan, m: ModelSpec) -> LedgerEntry:
        e = LedgerEntry(index, clan.depth, clan.n_generations(m), clan.uniforms, len(clan),
                        clan.max_basis_size, clan.truncated, clan.reason)
        self.entries.append(e)
        return e

    def append(self, e: LedgerEntry) -> None:
        self.entries.append(e)

    def __len__(self):
        return len(self.entries)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(e), separators=(",", ":")) + "\n" for e in self.entries)

    @classmethod
    def from_jsonl(cls, text: str) -> "BiasLedger":
        return cls([LedgerEntry(**json.loads(ln)) for ln in text.splitlines() if ln.strip()])


@dataclass
class TailFit:
    slope: float
    se: float
    points: int

    def below(self, log_alpha: float) -> bool:
        return self.slope <= log_alpha + 3 * self.se


def fit_log_tail(values, min_count: int = 100) -> TailFit | None:
    """Least squares of ``log P[X > n]`` on ``n`` over integer levels with at
    least ``min_count`` exceedances.  ``None`` if fewer than three levels."""
    x = np.asarray(values)
    pts = []
    for n in range(int(x.max()) + 1 if x.size else 0):
        k = int((x > n).sum())
        if k < min_count:
            break
        pts.append((n, math.log(k / x.size)))
    if len(pts) < 3:
        return None
    a = np.array(pts)
    res = np.polyfit(a[:, 0], a[:, 1], 1, cov=True)
    (slope, _), cov = res
    return TailFit(float(slope), float(math.sqrt(cov[0, 0])), len(pts))


@dataclass
class LedgerSummary:
    runs: int
    truncated: int
    p_depth: float
    p_size: float
    p_exceed: float
    bound: float
    depth_quantiles: dict[str, float]
    size_tail: dict[str, float]
    fit: TailFit | None
    alpha: float | None
    fit_ok: bool | None

    def to_dict(self) -> dict:
        return asdict(self)


def bias_ledger_summary(ledger: BiasLedger, S: float | None = None, k: float | None = None,
                        alpha_value: float | None = None,
                        size_levels=(6, 8, 10)) -> LedgerSummary:
    """Empirical tails ``P[T > S]`` (uniforms consumed) and ``P[K >= k]``
    (largest basis size), the combined ``p/(1-p)`` bound, and a geometric fit
    of the generation-depth tail compared with ``log alpha``."""
    if not len(ledger):
        raise ValueError("empty ledger")
    E = ledger.entries
    n = len(E)
    over_t = [e.truncated and e.reason in ("depth", "size") or (S is not None and e.uniforms > S)
              for e in E]
    over_k = [(e.truncated and e.reason == "size_cutoff") or (k is not None and e.max_basis_size >= k)
              for e in E]
    p_depth = sum(over_t) / n
    p_size = sum(over_k) / n
    p_exceed = sum(a or b for a, b in zip(over_t, over_k)) / n
    depths = np.array([e.depth for e in E])
    qs = {f"q{int(100 * q)}": float(np.quantile(depths, q)) for q in (0.5, 0.9, 0.99)}
    qs["max"] = float(depths.max())
    ks = np.array([e.max_basis_size for e in E])
    size_tail = {str(lv): float((ks >= lv).mean()) for lv in size_levels}
    fit = fit_log_tail([e.generations for e in E])
    ok = None
    if fit is not None and alpha_value is not None and alpha_value > 0:
        ok = fit.below(math.log(alpha_value))
    return LedgerSummary(n, sum(e.truncated for e in E), p_depth, p_size, p_exceed,
                         bias_bound(p_exceed) if p_exceed < 1 else math.inf,
                         qs, size_tail, fit, alpha_value, ok)
