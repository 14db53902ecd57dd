"""Deterministic SVG pictures of single samples.

The view is the sample window (grown to show whole grains); its center is
the canvas center.  Point patterns are drawn as germ dots with grain
outlines, contours as closed polylines on the dual lattice, calls as
horizontal segments stacked greedily by overlap, bond animals as line
segments, toy individuals as text.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

SIZE = 400
PAD = 20


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi
        span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-12)
        self.scale = (SIZE - 2 * PAD) / span
        self.cx, self.cy = (lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2

    def pt(self, x, y):
        return (SIZE / 2 + (x - self.cx) * self.scale, SIZE / 2 - (y - self.cy) * self.scale)


def stack_levels(calls: list[tuple[float, float]]) -> list[int]:
    """Greedy interval colouring: lowest level whose calls all end before ``x``."""
    order = sorted(range(len(calls)), key=lambda i: (calls[i][0], calls[i][1]))
    ends: list[float] = []
    level = [0] * len(calls)
    for i in order:
        x, r = calls[i]
        for k, e in enumerate(ends):
            if e < x:
                ends[k] = r
                level[i] = k
                break
        else:
            level[i] = len(ends)
            ends.append(r)
    return level


def link_cycles(links) -> list[list[tuple[int, int]]]:
    """Split a closed link set into closed vertex walks (first point repeated)."""
    adj: dict = {}
    for a, b in sorted(links):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for v in adj:
        adj[v].sort()
    used: set = set()
    cycles = []
    for a, b in sorted(links):
        if frozenset((a, b)) in used:
            continue
        walk = [a]
        cur = a
        while True:
            nxt = next((w for w in adj[cur] if frozenset((cur, w)) not in used), None)
            if nxt is None:
                break
            used.add(frozenset((cur, nxt)))
            walk.append(nxt)
            cur = nxt
            if cur == a:
                break
        cycles.append(walk)
    return cycles


def _doc(body: list[str], legend: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
            f'viewBox="0 0 {SIZE} {SIZE}">')
    bg = f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white" stroke="none"/>'
    leg = f'<text x="{PAD}" y="{SIZE - 6}" font-size="11" font-family="monospace">{escape(legend)}</text>'
    return "\n".join([head, bg, *body, leg, "</svg>"]) + "\n"


def empty_svg(legend: str = "no samples") -> str:
    return _doc([], legend)


def _window_rect(c: _Canvas, lo, hi) -> str:
    (x0, y1), (x1, y0) = c.pt(lo[0], lo[1]), c.pt(hi[0], hi[1])
    return (f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" height="{_fmt(y1 - y0)}" '
            f'fill="none" stroke="#888" stroke-dasharray="4 2"/>')


def render(config: dict, record: dict) -> str:
    """SVG of one sample record, given the run configuration of its file."""
    md, wd = config["model"], config.get("window") or {}
    kind = md["kind"]
    inds = record.get("individuals") or []
    legend = f"{kind} sample {record['index']}: {len(inds)} individuals"
    body: list[str] = []
    if kind in ("area", "strauss"):
        r = md["r"] if kind == "strauss" else (md["r"] if md.get("shape", "disc") == "disc" else md["r"] / 2)
        lo, hi = _box_of(wd)
        if len(lo) == 1:
            lo, hi = (lo[0], -1.0), (hi[0], 1.0)
        reach = r if kind == "area" else r / 2
        c = _Canvas(tuple(a - reach for a in lo), tuple(b + reach for b in hi))
        body.append(_window_rect(c, lo, hi))
        for p in inds:
            x, y = p[0], p[1] if len(p) > 1 else 0.0
            px, py = c.pt(x, y)
            rr = reach * c.scale
            if kind == "area" and md.get("shape", "disc") == "square":
                body.append(f'<rect x="{_fmt(px - rr)}" y="{_fmt(py - rr)}" width="{_fmt(2 * rr)}" '
                            f'height="{_fmt(2 * rr)}" fill="none" stroke="steelblue"/>')
            else:
                body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="{_fmt(rr)}" '
                            f'fill="none" stroke="steelblue"/>')
            body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="2" fill="black"/>')
    elif kind == "lossnet":
        lo, hi = _box_of(wd)
        ln = md["length"]
        lmax = ln.get("L", ln.get("lmax", 1.0))
        c = _Canvas((lo[0] - lmax, 0.0), (hi[0], 0.0))
        calls = [(o["x"], o["x"] + o["L"]) for o in inds]
        levels = stack_levels(calls)
        (wx0, _), (wx1, _) = c.pt(lo[0], 0), c.pt(hi[0], 0)
        body.append(f'<line x1="{_fmt(wx0)}" y1="{PAD}" x2="{_fmt(wx1)}" y2="{PAD}" stroke="#888"/>')
        for (a, b), k in zip(calls, levels):
            (x0, _), (x1, _) = c.pt(a, 0), c.pt(b, 0)
            y = PAD + 12 * (k + 1)
            body.append(f'<line x1="{_fmt(x0)}" y1="{y}" x2="{_fmt(x1)}" y2="{y}" '
                        f'stroke="firebrick" stroke-width="3"/>')
    elif kind == "contour":
        from .discrete import Contour
        lo, hi = _box_of(wd)
        c = _Canvas(lo, hi)
        body.append(_window_rect(c, lo, hi))
        for o in inds:
            g = Contour(tuple(o["anchor"]), tuple(tuple(x) for x in o["shape"]))
            for walk in link_cycles(g.links):
                pts = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in (c.pt(*v) for v in walk))
                body.append(f'<polyline points="{pts}" fill="none" stroke="darkgreen"/>')
    elif kind == "random_cluster":
        nx, ny = (int(v) for v in md.get("grid", [2, 2]))
        c = _Canvas((-0.5, -0.5), (nx - 0.5, ny - 0.5))
        for x in range(nx):
            for y in range(ny):
                px, py = c.pt(x, y)
                body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="#888"/>')
        for o in inds:
            for a, b in o:
                (x0, y0), (x1, y1) = c.pt(*a), c.pt(*b)
                body.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
                            f'stroke="purple" stroke-width="4"/>')
    else:
        for k, o in enumerate(inds):
            body.append(f'<text x="{PAD}" y="{PAD + 14 * (k + 1)}" font-size="12" '
                        f'font-family="monospace">{escape(str(o))}</text>')
    return _doc(body, legend)


def _box_of(wd: dict):
    if "center" in wd:
        r = wd["radius"]
        return tuple(v - r for v in wd["center"]), tuple(v + r for v in wd["center"])
    return tuple(wd["lo"]), tuple(wd["hi"])
