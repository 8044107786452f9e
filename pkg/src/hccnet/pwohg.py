"""Generalized tensors as partitioned, weakly ordered hypergraphs.

Edges are lists of index classes (a strict weak order). Modes partition
the edges. Slice-ordering compatibility is checked by assigning integer
coordinates with a breadth-first search and looking for conflicts.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .hcc import Hcc, restrict


class GenTensorError(ValueError):
    pass


class EncodingError(GenTensorError):
    pass


class PathError(GenTensorError):
    pass


class SoccError(GenTensorError):
    """Precondition failure: the graph is inconsistent or disconnected."""


class JaggedError(GenTensorError):
    pass


class HyperError(GenTensorError):
    pass


class InjectivityError(GenTensorError):
    pass


@dataclass(frozen=True)
class WeakOrder:
    """A strict weak order written as a list of incomparability classes."""

    classes: tuple[frozenset, ...]

    def __post_init__(self):
        if not self.classes or any(not c for c in self.classes):
            raise GenTensorError("weak orders need non-empty classes")
        seen: set = set()
        for c in self.classes:
            if seen & c:
                raise GenTensorError("element repeated inside one edge")
            seen |= c

    @classmethod
    def of(cls, blocks: Iterable) -> "WeakOrder":
        """Build from a list where each item is a label or a collection of labels."""
        out = []
        for b in blocks:
            if isinstance(b, (set, frozenset, list, tuple)):
                out.append(frozenset(b))
            else:
                out.append(frozenset([b]))
        return cls(tuple(out))

    @property
    def length(self) -> int:
        return len(self.classes)

    @property
    def carrier(self) -> frozenset:
        return frozenset().union(*self.classes)

    def index_of(self, v) -> int:
        for i, c in enumerate(self.classes, start=1):
            if v in c:
                return i
        raise KeyError(v)

    def index_map(self) -> dict:
        return {v: i for i, c in enumerate(self.classes, start=1) for v in c}

    def __contains__(self, v) -> bool:
        return any(v in c for c in self.classes)


@dataclass(frozen=True)
class Mode:
    name: str
    edges: tuple[WeakOrder, ...]


@dataclass(frozen=True)
class Pwohg:
    vertices: tuple
    modes: tuple[Mode, ...]

    @classmethod
    def build(cls, modes: Sequence[tuple[str, Iterable]], vertices: Sequence | None = None) -> "Pwohg":
        ms = []
        for name, edges in modes:
            es = []
            for e in edges:
                e = e if isinstance(e, WeakOrder) else WeakOrder.of(e)
                if e not in es:
                    es.append(e)
            ms.append(Mode(str(name), tuple(es)))
        if vertices is None:
            order: list = []
            seen: set = set()
            for m in ms:
                for e in m.edges:
                    for c in e.classes:
                        for v in sorted(c, key=_sort_key):
                            if v not in seen:
                                seen.add(v)
                                order.append(v)
            vertices = order
        vs = tuple(vertices)
        covered = set().union(*(e.carrier for m in ms for e in m.edges)) if ms else set()
        if not covered <= set(vs):
            raise GenTensorError("edges mention unknown vertices")
        return cls(vs, tuple(ms))

    def mode_index(self, mode) -> int:
        if isinstance(mode, int):
            return mode
        for i, m in enumerate(self.modes):
            if m.name == mode:
                return i
        raise KeyError(mode)

    def edge(self, ref: tuple[int, int]) -> WeakOrder:
        return self.modes[ref[0]].edges[ref[1]]

    def edge_refs(self):
        for p, m in enumerate(self.modes):
            for k in range(len(m.edges)):
                yield (p, k)

    # JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "elements": list(self.vertices),
            "modes": [
                {"name": m.name, "edges": [[sorted(c, key=_sort_key) for c in e.classes] for e in m.edges]}
                for m in self.modes
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Pwohg":
        try:
            modes = [(m.get("name", f"m{i}"), [[list(c) for c in e] for e in m["edges"]]) for i, m in enumerate(obj["modes"])]
        except (KeyError, TypeError) as exc:
            raise GenTensorError(f"malformed GT JSON: {exc}") from exc
        return cls.build(modes, obj.get("elements"))


def _sort_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


# ---------------------------------------------------------------------------
# distances

def path_distance(g: Pwohg, path: Sequence, mode) -> int:
    """Signed ``mode``-distance of ``[v0, ref0, v1, ref1, ...]``.

    Edge refs are ``(mode_index, edge_index)`` pairs.
    """
    if len(path) % 2 == 0:
        raise PathError("a path alternates vertices and edges and ends on a vertex")
    p = g.mode_index(mode)
    total = 0
    for i in range(0, len(path) - 1, 2):
        a, ref, b = path[i], tuple(path[i + 1]), path[i + 2]
        e = g.edge(ref)
        if a not in e or b not in e:
            raise PathError(f"{a!r} and {b!r} are not joined by edge {ref}")
        if ref[0] == p:
            total += e.index_of(b) - e.index_of(a)
    return total


def path_distances(g: Pwohg, path: Sequence) -> tuple[int, ...]:
    return tuple(path_distance(g, path, p) for p in range(len(g.modes)))


def reverse_path(path: Sequence) -> list:
    return list(reversed(path))


def _incidence(g: Pwohg) -> dict:
    inc: dict = {v: [] for v in g.vertices}
    for ref in g.edge_refs():
        for v in g.edge(ref).carrier:
            inc[v].append(ref)
    return inc


@dataclass
class _Bfs:
    coords: dict
    component: dict
    parent: dict
    witness: list | None


def _bfs(g: Pwohg) -> _Bfs:
    n = len(g.modes)
    inc = _incidence(g)
    idx = {ref: g.edge(ref).index_map() for ref in g.edge_refs()}
    coords: dict = {}
    comp: dict = {}
    parent: dict = {}
    witness = None
    for cid, root in enumerate(v for v in g.vertices):
        if root in coords:
            continue
        coords[root] = np.zeros(n, dtype=np.int64)
        comp[root] = cid
        parent[root] = None
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for ref in inc[u]:
                im = idx[ref]
                for w, iw in im.items():
                    if w == u:
                        continue
                    implied = coords[u].copy()
                    implied[ref[0]] += iw - im[u]
                    if w not in coords:
                        coords[w] = implied
                        comp[w] = comp[root]
                        parent[w] = (u, ref)
                        queue.append(w)
                    elif witness is None and not np.array_equal(coords[w], implied):
                        witness = _close_cycle(parent, u, ref, w)
    return _Bfs(coords, comp, parent, witness)


def _tree_path(parent: dict, v) -> list:
    """Path from the BFS root to ``v``."""
    rev = [v]
    while parent[v] is not None:
        u, ref = parent[v]
        rev += [ref, u]
        v = u
    return rev[::-1]


def _close_cycle(parent: dict, u, ref, w) -> list:
    to_u = _tree_path(parent, u)
    to_w = _tree_path(parent, w)
    return to_u + [ref] + to_w[::-1]


def check_socc(g: Pwohg) -> dict:
    """Validity report: ``{"connected", "consistent", "witness"}``."""
    b = _bfs(g)
    return {
        "connected": len(set(b.component.values())) <= 1,
        "consistent": b.witness is None,
        "witness": b.witness,
    }


def _require(g: Pwohg, connected: bool = True) -> _Bfs:
    b = _bfs(g)
    if b.witness is not None:
        raise SoccError("slice ordering is inconsistent")
    if connected and len(set(b.component.values())) > 1:
        raise SoccError("hypergraph is not connected")
    return b


def tuples(g: Pwohg) -> list[frozenset]:
    """Zero-distance classes of vertices, ordered by first vertex."""
    b = _require(g, connected=False)
    groups: dict = {}
    for v in g.vertices:
        groups.setdefault((b.component[v], tuple(b.coords[v])), []).append(v)
    return [frozenset(vs) for vs in groups.values()]


@dataclass
class MultiIndexAssignment:
    """``mapping`` places the origin at all-ones; ``offsets`` shift to min 1."""

    mapping: dict
    offsets: tuple[int, ...]

    def normalized(self) -> dict:
        off = np.array(self.offsets, dtype=np.int64)
        return {t: tuple(int(x) for x in np.asarray(c) + off) for t, c in self.mapping.items()}


def assign_multi_indices(g: Pwohg, origin) -> MultiIndexAssignment:
    b = _require(g, connected=False)
    tups = tuples(g)
    if not isinstance(origin, (set, frozenset)):
        origin = frozenset([origin])
    o = next(iter(origin))
    if o not in b.coords:
        raise GenTensorError(f"unknown origin {o!r}")
    reach = [t for t in tups if b.component[next(iter(t))] == b.component[o]]
    if len(reach) != len(tups):
        raise SoccError("some tuples are unreachable from the origin")
    base = b.coords[o]
    mapping = {t: tuple(int(x) for x in b.coords[next(iter(t))] - base + 1) for t in tups}
    mins = np.min(np.array(list(mapping.values()), dtype=np.int64), axis=0) if mapping else np.zeros(len(g.modes), dtype=np.int64)
    return MultiIndexAssignment(mapping, tuple(int(1 - m) for m in mins))


# ---------------------------------------------------------------------------
# representatives

def maximal_representative(g: Pwohg) -> Pwohg:
    """Add the 1-cells missing for zero and unit distances between vertices."""
    b = _require(g, connected=False)
    n = len(g.modes)
    edges = [list(m.edges) for m in g.modes]
    for a, c in itertools.combinations(g.vertices, 2):
        if b.component[a] != b.component[c]:
            continue
        d = b.coords[c] - b.coords[a]
        l1 = int(np.abs(d).sum())
        if l1 == 0:
            for p in range(n):
                if not any(a in e and c in e for e in edges[p]):
                    edges[p].append(WeakOrder((frozenset([a, c]),)))
        elif l1 == 1:
            p = int(np.flatnonzero(d)[0])
            if not any(a in e and c in e for e in edges[p]):
                lo, hi = (a, c) if d[p] > 0 else (c, a)
                edges[p].append(WeakOrder((frozenset([lo]), frozenset([hi]))))
    return Pwohg.build([(m.name, es) for m, es in zip(g.modes, edges)], g.vertices)


def _strong(g: Pwohg) -> _Bfs:
    b = _require(g, connected=False)
    seen: dict = {}
    for v in g.vertices:
        key = (b.component[v], tuple(b.coords[v]))
        if key in seen:
            raise SoccError(f"strong condition fails: {seen[key]!r} and {v!r} share a tuple")
        seen[key] = v
    return b


def canonical_representative(g: Pwohg) -> Pwohg:
    """Merge overlapping same-mode edges of the maximal representative."""
    b = _strong(g)
    m = maximal_representative(g)
    pos = {v: i for i, v in enumerate(g.vertices)}
    out = []
    for p, mode in enumerate(m.modes):
        parent = {v: v for v in g.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        touched = set()
        for e in mode.edges:
            vs = sorted(e.carrier, key=pos.__getitem__)
            touched.update(vs)
            for v in vs[1:]:
                ra, rb = find(vs[0]), find(v)
                if ra != rb:
                    parent[rb] = ra
        comps: dict = {}
        for v in g.vertices:
            if v in touched:
                comps.setdefault(find(v), []).append(v)
        edges = []
        for vs in comps.values():
            vs.sort(key=lambda v: (int(b.coords[v][p]), pos[v]))
            edges.append(WeakOrder(tuple(frozenset([v]) for v in vs)))
        edges.sort(key=lambda e: pos[next(iter(e.classes[0]))])
        out.append((mode.name, edges))
    return Pwohg.build(out, g.vertices)


# ---------------------------------------------------------------------------
# rank-3 encoding

def encode_rank3(g: Pwohg) -> tuple[Hcc, int]:
    """Each edge c1<...<cL becomes its suffix unions; modes become 2-cells.

    Returns the complex and the handle of its rank-3 cell.
    """
    h = Hcc(g.vertices)
    twos = []
    for mode in g.modes:
        ones = []
        for e in mode.edges:
            acc: frozenset = frozenset()
            for c in reversed(e.classes):
                acc = acc | c
                ones.append(h.add_set(acc))
        twos.append(h.add_cell(ones))
    top = h.add_cell(twos)
    return h, top.handle


def decode_rank3(h: Hcc, top: int | None = None) -> Pwohg:
    if top is None:
        threes = h.level(3)
        if len(threes) != 1:
            raise EncodingError(f"expected one rank-3 cell, found {len(threes)}")
        top_cell = threes[0]
    else:
        top_cell = h.cell(top)
        if top_cell.rank != 3:
            raise EncodingError("top cell must have rank 3")
    modes = []
    for i, two in enumerate(h.children(top_cell)):
        cells = [h.elements_of(c) for c in h.children(two)]
        maxi = [e for e in cells if not any(e < s for s in cells)]
        edges = []
        for e in maxi:
            inner = sorted((s for s in cells if s < e), key=len, reverse=True)
            for big, small in zip(inner, inner[1:]):
                if not small < big:
                    raise EncodingError(f"cells inside {sorted(e, key=_sort_key)} do not form a chain")
            index = {x: 1 + sum(x in s for s in inner) for x in e}
            L = max(index.values())
            classes = tuple(frozenset(x for x in e if index[x] == k) for k in range(1, L + 1))
            if any(not c for c in classes):
                raise EncodingError("chain skips an index")
            edges.append(WeakOrder(classes))
        modes.append((f"m{i}", edges))
    return Pwohg.build(modes, h.labels)


# ---------------------------------------------------------------------------
# arrays <-> generalized tensors

@dataclass
class GenTensor:
    hcc: Hcc
    top: int
    pwohg: Pwohg
    origin: frozenset = field(default_factory=frozenset)


def lines_pwohg(labels: np.ndarray, present: np.ndarray | None = None) -> Pwohg:
    """Hypergraph whose mode-p edges are the 1-slices along axis p."""
    shape = labels.shape
    if present is None:
        present = np.ones(shape, dtype=bool)
    vertices = [labels[i] for i in np.ndindex(shape) if present[i]]
    modes = []
    for p in range(len(shape)):
        rest = [range(s) if q != p else [None] for q, s in enumerate(shape)]
        edges = []
        for fixed in itertools.product(*rest):
            line = []
            for k in range(shape[p]):
                ix = tuple(k if q == p else fixed[q] for q in range(len(shape)))
                if present[ix]:
                    line.append(frozenset([labels[ix]]))
            if line:
                edges.append(WeakOrder(tuple(line)))
        modes.append((f"m{p}", edges))
    return Pwohg.build(modes, vertices)


def gt_from_mda(m) -> GenTensor:
    """Dense injective array to generalized tensor."""
    from .mda import Mda

    if not isinstance(m, Mda):
        m = Mda.from_array(m)
    if not m.is_dense() or m.is_hyper():
        raise GenTensorError("gt_from_mda needs a dense, non-hyper array")
    labels = m.scalars()
    flat = [_hashable(x) for x in labels.ravel()]
    if len(set(flat)) != len(flat):
        raise InjectivityError("duplicate values; represent the array as a mode map instead")
    lab = np.empty(labels.shape, dtype=object)
    for i, x in zip(np.ndindex(labels.shape), flat):
        lab[i] = x
    g = lines_pwohg(lab)
    h, top = encode_rank3(g)
    return GenTensor(h, top, g, frozenset([g.vertices[0]]))


def _hashable(x):
    if isinstance(x, np.generic):
        return x.item()
    return x


def mda_from_gt(g, strict: bool = False):
    """Coordinates from per-mode distances, offset so each mode starts at 0.

    Values of the returned array are the vertex labels (object dtype).
    Missing grid positions give a jagged array unless ``strict``.
    """
    from .mda import Mda

    if isinstance(g, GenTensor):
        g = g.pwohg
    elif isinstance(g, Hcc):
        g = decode_rank3(g)
    b = _require(g)
    if not g.vertices:
        raise GenTensorError("empty tensor")
    coords = np.array([b.coords[v] for v in g.vertices], dtype=np.int64)
    coords -= coords.min(axis=0)
    shape = tuple(int(x) + 1 for x in coords.max(axis=0))
    grid = np.empty(shape, dtype=object)
    present = np.zeros(shape, dtype=bool)
    for v, c in zip(g.vertices, coords):
        c = tuple(int(x) for x in c)
        if present[c]:
            raise HyperError(f"{grid[c]!r} and {v!r} share a multi-index")
        grid[c] = v
        present[c] = True
    if not present.all() and strict:
        raise JaggedError("modes have unequal tensor lengths")
    return Mda.from_array(grid, present=present)
