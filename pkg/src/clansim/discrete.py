"""Discrete models: toy exclusion families, 2-D Peierls contours, and the
bond-animal representation of the random-cluster model."""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Mapping

from .model import Box, DiscreteModel, InvalidIndividual, LabelSet, ModelError

# --------------------------------------------------------------------------
# toy exclusion families


class ToyModel(DiscreteModel):
    """Finite family of labelled individuals.

    With ``free=True`` nothing interacts (``I == 0``, ``M == 1``) and the
    invariant law is a product of Poisson laws.  Otherwise the model is an
    exclusion family: ``I`` is the symmetric closure of ``pairs`` plus the
    diagonal, and ``M`` has product form.
    """

    kind = "toy"
    finite_family = True

    def __init__(self, weights: Mapping[Hashable, float], pairs: Iterable[tuple] = (),
                 sizes: Mapping[Hashable, float] | None = None, free: bool = False):
        self.weights = dict(weights)
        for g, w in self.weights.items():
            if not (w > 0 and math.isfinite(w)):
                raise ModelError(f"weight of {g!r} must be finite and positive, got {w}")
        self.free = bool(free)
        self.exclusion = not self.free
        self.pairs = frozenset(frozenset(p) for p in pairs)
        for p in self.pairs:
            for g in p:
                if g not in self.weights:
                    raise ModelError(f"pair member {g!r} has no weight")
        self.sizes = dict(sizes or {})
        if any(v < 1 for v in self.sizes.values()):
            raise ModelError("sizes must be >= 1")
        self._nbrs: dict = {}
        for g in self.weights:
            if self.free:
                self._nbrs[g] = []
            else:
                self._nbrs[g] = [(t, self.weights[t]) for t in self.weights
                                 if t == g or frozenset((g, t)) in self.pairs]

    def validate(self, g):
        if g not in self.weights:
            raise InvalidIndividual(f"{g!r} is not an individual of this toy model")

    def weight(self, g):
        return self.weights[g]

    def incompatible(self, g, t):
        self.validate(g)
        self.validate(t)
        if self.free:
            return False
        return g == t or frozenset((g, t)) in self.pairs

    def acceptance(self, g, xi):
        if self.free:
            return 1.0
        return super().acceptance(g, xi)

    def size(self, g):
        return float(self.sizes.get(g, 1.0))

    def neighbors(self, g):
        return self._nbrs[g]

    def intersects(self, g, window):
        if window is None:
            return True
        return g in window.labels

    def family(self, window):
        return {g: w for g, w in self.weights.items() if self.intersects(g, window)}

    def _catalog_for_alpha(self):
        return list(self.weights)

    def describe(self):
        return {"kind": self.kind, "weights": self.weights,
                "pairs": sorted(sorted(map(str, p)) for p in self.pairs), "free": self.free}


def toy_hardcore(weights: Mapping[Hashable, float], pairs: Iterable[tuple] = (),
                 sizes: Mapping[Hashable, float] | None = None) -> ToyModel:
    return ToyModel(weights, pairs, sizes)


def toy_free(weights: Mapping[Hashable, float]) -> ToyModel:
    return ToyModel(weights, free=True)


# --------------------------------------------------------------------------
# Peierls contours (d = 2)

Cell = tuple[int, int]
Vertex = tuple[int, int]
Link = tuple[Vertex, Vertex]


def cell_links(c: Cell) -> tuple[Link, ...]:
    i, j = c
    return (((i, j), (i + 1, j)), ((i, j + 1), (i + 1, j + 1)),
            ((i, j), (i, j + 1)), ((i + 1, j), (i + 1, j + 1)))


def boundary_links(cells: Iterable[Cell]) -> frozenset[Link]:
    """Links bordering exactly one cell of ``cells`` (the mod-2 boundary)."""
    odd: set[Link] = set()
    for c in cells:
        for e in cell_links(c):
            odd ^= {e}
    return frozenset(odd)


def links_connected(links: Iterable[Link]) -> bool:
    links = list(links)
    if not links:
        return False
    parent: dict[Vertex, Vertex] = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in links:
        parent[find(a)] = find(b)
    roots = {find(a) for a, _ in links}
    return len(roots) == 1


def links_closed(links: Iterable[Link]) -> bool:
    deg: dict[Vertex, int] = {}
    for a, b in links:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return all(d % 2 == 0 for d in deg.values())


def canonical_cells(cells: Iterable[Cell]) -> tuple[Cell, tuple[Cell, ...]]:
    """Split ``cells`` into (anchor, shape): the shape is the translate whose
    lexicographically smallest cell sits at the origin."""
    cells = sorted(cells)
    ax, ay = cells[0]
    return (ax, ay), tuple((x - ax, y - ay) for x, y in cells)


@dataclass(frozen=True)
class ContourShape:
    cells: tuple[Cell, ...]
    links: frozenset[Link]

    @cached_property
    def vertices(self) -> frozenset[Vertex]:
        return frozenset(v for e in self.links for v in e)

    @property
    def length(self) -> int:
        return len(self.links)


@dataclass(frozen=True, order=True)
class Contour:
    """Anchored contour: ``anchor`` + canonical ``shape`` (cells it encloses)."""

    anchor: Cell
    shape: tuple[Cell, ...]

    @property
    def cells(self) -> tuple[Cell, ...]:
        ax, ay = self.anchor
        return tuple((ax + x, ay + y) for x, y in self.shape)

    @property
    def links(self) -> frozenset[Link]:
        ax, ay = self.anchor
        return frozenset(((a[0] + ax, a[1] + ay), (b[0] + ax, b[1] + ay))
                         for a, b in _shape_info(self.shape).links)

    @property
    def vertices(self) -> frozenset[Vertex]:
        ax, ay = self.anchor
        return frozenset((x + ax, y + ay) for x, y in _shape_info(self.shape).vertices)

    def __len__(self):
        return _shape_info(self.shape).length


_SHAPES: dict[tuple[Cell, ...], ContourShape] = {}


def _shape_info(shape: tuple[Cell, ...]) -> ContourShape:
    info = _SHAPES.get(shape)
    if info is None:
        info = ContourShape(shape, boundary_links(shape))
        _SHAPES[shape] = info
    return info


_MAX_BOX_CELLS = 20


def enumerate_shapes(k: int) -> list[ContourShape]:
    """All contour shapes with at most ``k`` links, in canonical order
    (by length, then cells).

    A closed link set in the plane is the mod-2 boundary of a unique finite
    cell set, and a connected boundary of length ``k`` fits in a cell
    bounding box ``w x h`` with ``2 (w + h) <= k``; so it suffices to scan
    the subsets of such boxes.
    """
    if k < 4:
        return []
    half = k // 2
    found: dict[tuple[Cell, ...], ContourShape] = {}
    for w in range(1, half):
        for h in range(1, half - w + 1):
            if w * h > _MAX_BOX_CELLS:
                raise ModelError(f"contour cutoff k={k} is too large to enumerate")
            box = [(x, y) for x in range(w) for y in range(h)]
            for mask in range(1, 1 << len(box)):
                cells = [box[i] for i in range(len(box)) if mask >> i & 1]
                xs = {c[0] for c in cells}
                ys = {c[1] for c in cells}
                if min(xs) or min(ys) or max(xs) != w - 1 or max(ys) != h - 1:
                    continue
                links = boundary_links(cells)
                if len(links) > k or not links_connected(links):
                    continue
                _, shape = canonical_cells(cells)
                if shape not in found:
                    found[shape] = _shape_info(shape)
    return sorted(found.values(), key=lambda s: (s.length, s.cells))


def window_cells(window: Box) -> list[Cell]:
    """Cells (unit squares ``[i, i+1] x [j, j+1]``) whose centers lie in the box."""
    if window.dim != 2:
        raise ModelError("contour windows are 2-D boxes")
    (x0, y0), (x1, y1) = window.lo, window.hi
    xs = range(math.ceil(x0 - 0.5), math.floor(x1 - 0.5) + 1)
    ys = range(math.ceil(y0 - 0.5), math.floor(y1 - 0.5) + 1)
    return [(i, j) for i in xs for j in ys]


@functools.lru_cache(maxsize=64)
def _cell_set(window: Box) -> frozenset[Cell]:
    return frozenset(window_cells(window))


def contour_weight(g, beta: float) -> float:
    if not beta > 0:
        raise ModelError("beta must be positive")
    n = len(g) if isinstance(g, Contour) else g.length
    return math.exp(-beta * n)


def contour_compatible(g: Contour, t: Contour) -> bool:
    """No link of ``g`` shares an endpoint with a link of ``t``."""
    return g.vertices.isdisjoint(t.vertices)


def enumerate_contours(k: int, region: Box) -> list[Contour]:
    """Anchored contours with at most ``k`` links enclosing a cell of ``region``."""
    cells = window_cells(region)
    out: list[Contour] = []
    for s in enumerate_shapes(k):
        anchors = {(u[0] - c[0], u[1] - c[1]) for u in cells for c in s.cells}
        out.extend(Contour(a, s.cells) for a in sorted(anchors))
    return out


def catalog_text(shapes: Iterable[ContourShape]) -> str:
    """Plain-text link lists, one shape per line."""
    lines = []
    for i, s in enumerate(shapes):
        links = " ".join(f"{a[0]},{a[1]}-{b[0]},{b[1]}" for a, b in sorted(s.links))
        lines.append(f"{i} len={s.length} {links}")
    return "\n".join(lines) + ("\n" if lines else "")


class ContourModel(DiscreteModel):
    """Low-temperature 2-D Ising contours with a link-count cutoff ``k``.

    A contour meets a window when it encloses a cell whose center lies in the
    window.
    """

    kind = "contour"
    exclusion = True

    def __init__(self, beta: float, cutoff: int = 10):
        if not beta > 0:
            raise ModelError("beta must be positive")
        self.beta = float(beta)
        self.cutoff = int(cutoff)
        self.shapes = enumerate_shapes(self.cutoff)
        self._shape_set = {s.cells for s in self.shapes}
        self._w = {s.cells: math.exp(-self.beta * s.length) for s in self.shapes}
        self._offsets: dict[tuple, dict[tuple, frozenset]] = {}
        self._nbr_table: dict[tuple, list] = {}
        self._family_cache: dict = {}

    def validate(self, g):
        if not isinstance(g, Contour) or g.shape not in self._shape_set:
            raise InvalidIndividual(f"{g!r} is not a contour within cutoff {self.cutoff}")

    def weight(self, g):
        return self._w[g.shape]

    def size(self, g):
        return float(len(g))

    def _pair_offsets(self, s: tuple, t: tuple) -> frozenset:
        row = self._offsets.setdefault(s, {})
        off = row.get(t)
        if off is None:
            vs, vt = _shape_info(s).vertices, _shape_info(t).vertices
            off = frozenset((a[0] - b[0], a[1] - b[1]) for a in vs for b in vt)
            row[t] = off
        return off

    def incompatible(self, g, t):
        if not (isinstance(g, Contour) and isinstance(t, Contour)):
            raise InvalidIndividual("contour model compares contours only")
        d = (t.anchor[0] - g.anchor[0], t.anchor[1] - g.anchor[1])
        return d in self._pair_offsets(g.shape, t.shape)

    def neighbors(self, g):
        table = self._nbr_table.get(g.shape)
        if table is None:
            table = []
            for s in self.shapes:
                w = self._w[s.cells]
                for off in sorted(self._pair_offsets(g.shape, s.cells)):
                    table.append((off, s.cells, w))
            self._nbr_table[g.shape] = table
        ax, ay = g.anchor
        return [(Contour((ax + dx, ay + dy), t), w) for (dx, dy), t, w in table]

    def intersects(self, g, window):
        cells = _cell_set(window)
        return any(c in cells for c in g.cells)

    def family(self, window):
        if window is None:
            raise ModelError("contour model needs a bounded window")
        fam = self._family_cache.get(window)
        if fam is None:
            fam = {g: self._w[g.shape] for g in enumerate_contours(self.cutoff, window)}
            self._family_cache[window] = fam
        return fam

    def _catalog_for_alpha(self):
        return [Contour((0, 0), s.cells) for s in self.shapes]

    def individual_to_json(self, g):
        return {"anchor": list(g.anchor), "shape": [list(c) for c in g.shape]}

    def individual_from_json(self, obj):
        return Contour(tuple(obj["anchor"]), tuple(tuple(c) for c in obj["shape"]))

    def describe(self):
        return {"kind": self.kind, "beta": self.beta, "cutoff": self.cutoff}


# --------------------------------------------------------------------------
# random cluster: bond animals on a small grid

Bond = tuple[Vertex, Vertex]


def grid_bonds(grid: tuple[int, int]) -> list[Bond]:
    nx, ny = grid
    out = []
    for x in range(nx):
        for y in range(ny):
            if x + 1 < nx:
                out.append(((x, y), (x + 1, y)))
            if y + 1 < ny:
                out.append(((x, y), (x, y + 1)))
    return sorted(out)


@dataclass(frozen=True, order=True)
class BondAnimal:
    """Connected set of bonds, stored sorted."""

    bonds: tuple[Bond, ...]

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = self.__dict__["_hash"] = hash(self.bonds)
        return h

    @cached_property
    def vertices(self) -> frozenset[Vertex]:
        return frozenset(v for b in self.bonds for v in b)

    @property
    def B(self) -> int:
        return len(self.bonds)

    @property
    def V(self) -> int:
        return len(self.vertices)


def rc_weight(g: BondAnimal, p: float, q: float) -> float:
    """Poisson mean of an animal: ``(p/(1-p))**B * (1/q)**(V-1)``."""
    if not 0 < p < 1:
        raise ModelError(f"p must lie in (0, 1), got {p}")
    if not q > 0:
        raise ModelError(f"q must be positive, got {q}")
    return (p / (1 - p)) ** g.B * (1 / q) ** (g.V - 1)


@dataclass(frozen=True)
class BondConfig:
    """0/1 assignment of the bonds of ``grid``, stored as the open set."""

    grid: tuple[int, int]
    open: frozenset

    @property
    def n_open(self) -> int:
        return len(self.open)

    @property
    def n_closed(self) -> int:
        return len(grid_bonds(self.grid)) - len(self.open)

    @property
    def n_clusters(self) -> int:
        nx, ny = self.grid
        return nx * ny - sum(a.V - 1 for a in rc_project(self))


def _components(bonds: Iterable[Bond]) -> list[list[Bond]]:
    parent: dict = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    bonds = sorted(bonds)
    for a, b in bonds:
        parent[find(a)] = find(b)
    groups: dict = {}
    for bd in bonds:
        groups.setdefault(find(bd[0]), []).append(bd)
    return list(groups.values())


def rc_project(z: BondConfig) -> frozenset[BondAnimal]:
    """Maximal connected open-bond components."""
    return frozenset(BondAnimal(tuple(sorted(c))) for c in _components(z.open))


def reassemble(animals: Iterable[BondAnimal], grid: tuple[int, int]) -> BondConfig:
    """Union of vertex-disjoint animals; sharing a vertex is an error."""
    seen: set = set()
    bonds: set = set()
    for a in animals:
        if seen & a.vertices:
            raise ModelError("animals overlap; cannot reassemble")
        seen |= a.vertices
        bonds |= set(a.bonds)
    return BondConfig(tuple(grid), frozenset(bonds))


def all_bond_configs(grid: tuple[int, int]) -> Iterable[BondConfig]:
    bonds = grid_bonds(grid)
    for mask in range(1 << len(bonds)):
        yield BondConfig(tuple(grid), frozenset(b for i, b in enumerate(bonds) if mask >> i & 1))


def enumerate_animals(grid: tuple[int, int]) -> list[BondAnimal]:
    bonds = grid_bonds(grid)
    out = []
    for r in range(1, len(bonds) + 1):
        for sub in itertools.combinations(bonds, r):
            if len(_components(sub)) == 1:
                out.append(BondAnimal(tuple(sorted(sub))))
    return out


class RandomClusterModel(DiscreteModel):
    """Bond animals on a finite grid; two animals clash when they share a
    vertex.  Sizes are vertex counts."""

    kind = "random_cluster"
    exclusion = True
    finite_family = True
    MAX_BONDS = 12

    def __init__(self, p: float, q: float, grid: tuple[int, int] = (2, 2)):
        if not 0 < p < 1:
            raise ModelError(f"p must lie in (0, 1), got {p}")
        if not q > 0:
            raise ModelError(f"q must be positive, got {q}")
        self.p, self.q = float(p), float(q)
        self.grid = tuple(int(v) for v in grid)
        if len(grid_bonds(self.grid)) > self.MAX_BONDS:
            raise ModelError("random-cluster animals are enumerated only on grids up to 3x3")
        self.animals = enumerate_animals(self.grid)
        self._w = {a: rc_weight(a, self.p, self.q) for a in self.animals}
        self._nbrs = {a: [(b, self._w[b]) for b in self.animals if a.vertices & b.vertices]
                      for a in self.animals}

    def validate(self, g):
        if g not in self._w:
            raise InvalidIndividual(f"{g!r} is not an animal of grid {self.grid}")

    def weight(self, g):
        return self._w[g]

    def size(self, g):
        return float(g.V)

    def incompatible(self, g, t):
        self.validate(g)
        self.validate(t)
        return not g.vertices.isdisjoint(t.vertices)

    def neighbors(self, g):
        return self._nbrs[g]

    def intersects(self, g, window):
        if window is None:
            return True
        return any(window.contains(v) for v in g.vertices)

    def family(self, window):
        return {a: w for a, w in self._w.items() if self.intersects(a, window)}

    def _catalog_for_alpha(self):
        return self.animals

    def individual_to_json(self, g):
        return [[list(a), list(b)] for a, b in g.bonds]

    def individual_from_json(self, obj):
        return BondAnimal(tuple(sorted((tuple(a), tuple(b)) for a, b in obj)))

    def describe(self):
        return {"kind": self.kind, "p": self.p, "q": self.q, "grid": list(self.grid)}
