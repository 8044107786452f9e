"""Hierarchical combinatorial complexes: ranked cells over a base set.

Cells are hash-consed inside an :class:`Hcc`, so two cells with the same
rank and children are the same handle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

MAX_RANK = 5


class HccError(ValueError):
    pass


class RankError(HccError):
    pass


class DegeneratePartitionError(HccError):
    pass


@dataclass(frozen=True)
class Cell:
    """A rank-k cell. ``children`` holds handles of rank k-1 cells.

    Rank-0 cells wrap one element id in ``children`` (a 1-tuple).
    """

    handle: int
    rank: int
    children: tuple[int, ...]


class Hcc:
    """Immutable-after-build ranked family of cells."""

    def __init__(self, elements: Sequence = ()):
        self._cells: list[Cell] = []
        self._index: dict[tuple[int, tuple[int, ...]], int] = {}
        self.labels: list = []
        self._elem_cell: dict = {}
        for e in elements:
            self.add_element(e)

    # construction -----------------------------------------------------
    def add_element(self, label) -> Cell:
        if label in self._elem_cell:
            return self._cells[self._elem_cell[label]]
        eid = len(self.labels)
        self.labels.append(label)
        cell = self._intern(0, (eid,))
        self._elem_cell[label] = cell.handle
        return cell

    def add_cell(self, children: Iterable) -> Cell:
        """Add a cell from child cells (or handles). Rank is inferred."""
        hs = sorted({c.handle if isinstance(c, Cell) else int(c) for c in children})
        if not hs:
            raise HccError("cells of rank >= 1 need at least one child")
        ranks = {self._cells[h].rank for h in hs}
        if len(ranks) != 1:
            raise RankError(f"children of mixed ranks {sorted(ranks)}")
        rank = ranks.pop() + 1
        if rank > MAX_RANK:
            raise RankError(f"rank {rank} exceeds maximum {MAX_RANK}")
        return self._intern(rank, tuple(hs))

    def add_set(self, labels: Iterable) -> Cell:
        """Convenience: rank-1 cell over element labels."""
        return self.add_cell(self.element(x) for x in labels)

    def _intern(self, rank: int, children: tuple[int, ...]) -> Cell:
        key = (rank, children)
        h = self._index.get(key)
        if h is None:
            h = len(self._cells)
            self._cells.append(Cell(h, rank, children))
            self._index[key] = h
        return self._cells[h]

    # queries ----------------------------------------------------------
    def element(self, label) -> Cell:
        return self._cells[self._elem_cell[label]]

    def cell(self, handle: int) -> Cell:
        return self._cells[handle]

    @property
    def rank(self) -> int:
        return max((c.rank for c in self._cells), default=-1)

    def level(self, k: int) -> list[Cell]:
        return [c for c in self._cells if c.rank == k]

    def children(self, cell: Cell) -> list[Cell]:
        if cell.rank == 0:
            return []
        return [self._cells[h] for h in cell.children]

    def label_of(self, cell: Cell):
        if cell.rank != 0:
            raise RankError("only rank-0 cells carry a label")
        return self.labels[cell.children[0]]

    def elements_of(self, cell: Cell) -> frozenset:
        """Labels of all base elements below ``cell``."""
        return frozenset(self.label_of(c) for c in restrict(self, cell, 0)) if cell.rank else frozenset([self.label_of(cell)])

    # JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        cells = [c for c in self._cells if c.rank > 0]
        pos = {c.handle: i for i, c in enumerate(self._cells)}
        return {
            "elements": list(self.labels),
            "cells": [{"rank": c.rank, "children": [pos[h] for h in c.children]} for c in cells],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Hcc":
        """Ids index the element list first, then the cell list."""
        h = cls(obj["elements"])
        if len(h._cells) != len(obj["elements"]):
            raise HccError("duplicate element labels")
        ids = [c.handle for c in h._cells]
        for spec in obj["cells"]:
            kids = spec["children"]
            if any(k >= len(ids) for k in kids):
                raise HccError("cells may only reference earlier ids")
            cell = h.add_cell(ids[k] for k in kids)
            if cell.rank != spec["rank"]:
                raise RankError(f"declared rank {spec['rank']} but children give rank {cell.rank}")
            ids.append(cell.handle)
        return h


def restrict(h: Hcc, cell: Cell, level: int) -> list[Cell]:
    """All ``level``-cells below ``cell``, ordered by handle."""
    if level >= cell.rank or level < 0:
        raise RankError(f"level {level} must be below cell rank {cell.rank}")
    frontier = {cell.handle}
    for _ in range(cell.rank - level):
        frontier = {k for f in frontier for k in h.cell(f).children}
    return [h.cell(x) for x in sorted(frontier)]


def is_partition(parts: Iterable[Iterable], universe: Iterable) -> bool:
    seen: set = set()
    for part in parts:
        part = set(part)
        if seen & part:
            return False
        seen |= part
    return seen == set(universe)


def transversals(partition: Iterable[Iterable]) -> Iterator[frozenset]:
    parts = [sorted(p, key=repr) for p in partition]
    if any(len(p) == 0 for p in parts):
        raise DegeneratePartitionError("partition contains an empty part")
    for pick in itertools.product(*parts):
        yield frozenset(pick)
