"""Multidimensional arrays that may be jagged (a presence mask) or hyper.

Storage is a row-major ``data`` array of shape ``shape + (depth,)`` and a
boolean ``slots`` array of the same shape. The cell at a position is the
sequence of values in its filled slots. A position is present when at
least one slot is filled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np


class MdaError(ValueError):
    pass


class ModeError(MdaError):
    pass


class ShapeError(MdaError):
    pass


class Mda:
    __slots__ = ("data", "slots")

    def __init__(self, data: np.ndarray, slots: np.ndarray):
        if data.shape != slots.shape or data.ndim < 1:
            raise ShapeError("data and slots must share a shape with a trailing depth axis")
        if any(d < 1 for d in data.shape[:-1]):
            raise ShapeError("all dims must be >= 1")
        self.data = data
        self.slots = slots.astype(bool, copy=False)

    # construction -----------------------------------------------------
    @classmethod
    def from_array(cls, values, present=None, dtype=None) -> "Mda":
        arr = np.asarray(values, dtype=dtype)
        if arr.dtype.kind in "iub" and dtype is None:
            arr = arr.astype(np.float64)
        pres = np.ones(arr.shape, dtype=bool) if present is None else np.asarray(present, dtype=bool)
        if pres.shape != arr.shape:
            raise ShapeError(f"mask shape {pres.shape} differs from {arr.shape}")
        return cls(arr[..., None].copy(), pres[..., None].copy())

    @classmethod
    def from_cells(cls, shape: Sequence[int], cells: dict, dtype=np.float64) -> "Mda":
        """``cells`` maps index tuples to value sequences; missing means absent."""
        depth = max((len(c) for c in cells.values()), default=1) or 1
        data = np.zeros(tuple(shape) + (depth,), dtype=dtype)
        if dtype == object:
            data[...] = None
        slots = np.zeros(data.shape, dtype=bool)
        for ix, vals in cells.items():
            for k, v in enumerate(vals):
                data[tuple(ix) + (k,)] = v
                slots[tuple(ix) + (k,)] = True
        return cls(data, slots)

    # basic properties -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape[:-1]

    @property
    def order(self) -> int:
        return len(self.shape)

    @property
    def depth(self) -> int:
        return self.data.shape[-1]

    @property
    def present(self) -> np.ndarray:
        return self.slots.any(axis=-1)

    @property
    def dtype(self):
        return self.data.dtype

    def counts(self) -> np.ndarray:
        return self.slots.sum(axis=-1)

    def is_dense(self) -> bool:
        return bool(self.present.all())

    def is_hyper(self) -> bool:
        return bool((self.counts() > 1).any())

    def regularity(self) -> int | None:
        """α when every present cell holds exactly α values, else None."""
        c = self.counts()[self.present]
        if c.size and (c == c[0]).all():
            return int(c[0])
        return None

    def cell(self, index: Sequence[int]) -> tuple:
        ix = tuple(index)
        return tuple(self.data[ix][self.slots[ix]].tolist())

    def scalars(self, fill=None) -> np.ndarray:
        """Non-hyper view as a plain array; absent positions get ``fill``."""
        if self.is_hyper():
            raise MdaError("hyper arrays have no scalar view")
        first = np.argmax(self.slots, axis=-1)
        out = np.take_along_axis(self.data, first[..., None], axis=-1)[..., 0]
        if fill is not None or not self.is_dense():
            out = out.copy()
            if fill is None:
                fill = np.nan if out.dtype.kind == "f" else None
            if out.dtype.kind != "O" and fill is None:
                out = out.astype(object)
            out[~self.present] = fill
        return out

    # tensor lengths ---------------------------------------------------
    def extent(self) -> tuple[tuple[int, int], ...]:
        """Per mode (first, last) present index."""
        pres = self.present
        if not pres.any():
            raise MdaError("array has no present entries")
        out = []
        for ax in range(self.order):
            other = tuple(a for a in range(self.order) if a != ax)
            hit = np.flatnonzero(pres.any(axis=other))
            out.append((int(hit[0]), int(hit[-1])))
        return tuple(out)

    def lengths(self) -> tuple[int, ...]:
        """Tensor length of each mode: span of present indices."""
        return tuple(b - a + 1 for a, b in self.extent())

    def trim(self) -> "Mda":
        sl = tuple(slice(a, b + 1) for a, b in self.extent())
        return Mda(self.data[sl], self.slots[sl])

    # equality ---------------------------------------------------------
    def allclose(self, other: "Mda", atol: float = 1e-9, rtol: float = 0.0) -> bool:
        if self.shape != other.shape or not np.array_equal(self.present, other.present):
            return False
        if self.is_hyper() or other.is_hyper():
            return all(
                np.allclose(self.cell(ix), other.cell(ix), atol=atol, rtol=rtol)
                for ix in np.ndindex(self.shape)
            )
        a, b = self.scalars(0.0), other.scalars(0.0)
        return bool(np.allclose(a.astype(float), b.astype(float), atol=atol, rtol=rtol))

    def __repr__(self) -> str:
        kind = "hyper" if self.is_hyper() else ("dense" if self.is_dense() else "jagged")
        return f"Mda(shape={self.shape}, {kind}, dtype={self.dtype})"

    # file format ------------------------------------------------------
    def to_json(self) -> dict:
        if self.is_hyper():
            raise MdaError("the tensor file format holds non-hyper arrays only")
        pres = self.present
        vals = self.scalars(0.0)
        if pres.all():
            mask = "dense"
            data = vals.ravel()
        else:
            mask = "".join("1" if x else "0" for x in pres.ravel())
            data = vals[pres]
        return {"shape": list(self.shape), "mask": mask, "data": [float(x) for x in data]}

    @classmethod
    def from_json(cls, obj: dict) -> "Mda":
        try:
            shape = tuple(int(s) for s in obj["shape"])
            mask = obj.get("mask", "dense")
            data = np.asarray(obj["data"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise MdaError(f"malformed tensor file: {exc}") from exc
        size = int(np.prod(shape, dtype=np.int64))
        if mask == "dense":
            pres = np.ones(size, dtype=bool)
        else:
            if len(mask) != size or set(mask) - {"0", "1"}:
                raise MdaError("mask must be 'dense' or a bitstring of the grid size")
            pres = np.array([c == "1" for c in mask], dtype=bool)
        if data.size != int(pres.sum()):
            raise MdaError(f"expected {int(pres.sum())} data values, got {data.size}")
        vals = np.zeros(size)
        vals[pres] = data
        return cls.from_array(vals.reshape(shape), present=pres.reshape(shape))

    def dumps(self) -> str:
        from .jsonio import dumps

        return dumps(self.to_json())


# ---------------------------------------------------------------------------
# slice spaces, broadcasting, reduction

@dataclass
class SliceSpace:
    base: Mda
    outer_modes: tuple[int, ...]
    inner_modes: tuple[int, ...]

    @property
    def outer_shape(self) -> tuple[int, ...]:
        return tuple(self.base.shape[m] for m in self.outer_modes)

    def __getitem__(self, outer: Sequence[int]) -> Mda:
        ix = [slice(None)] * self.base.order
        for m, i in zip(self.outer_modes, outer):
            ix[m] = i
        ix = tuple(ix)
        return Mda(self.base.data[ix], self.base.slots[ix])

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], Mda]]:
        for outer in np.ndindex(self.outer_shape):
            yield outer, self[outer]

    def __len__(self) -> int:
        return int(np.prod(self.outer_shape, dtype=np.int64))

    def reassemble(self) -> Mda:
        data = np.empty_like(self.base.data)
        slots = np.zeros_like(self.base.slots)
        for outer, s in self:
            ix = [slice(None)] * self.base.order
            for m, i in zip(self.outer_modes, outer):
                ix[m] = i
            data[tuple(ix)] = s.data
            slots[tuple(ix)] = s.slots
        return Mda(data, slots)


def _check_modes(t: Mda, modes) -> tuple[int, ...]:
    ms = tuple(sorted(set(int(m) for m in modes)))
    if any(m < 0 or m >= t.order for m in ms):
        raise ModeError(f"modes {ms} out of range for order {t.order}")
    return ms


def slice_space(t: Mda, inner) -> SliceSpace:
    inner = _check_modes(t, inner)
    outer = tuple(m for m in range(t.order) if m not in inner)
    return SliceSpace(t, outer, inner)


def broadcast(t: Mda, target: Sequence[int], mode_map: Sequence[int]) -> Mda:
    """Copy ``t`` along the target modes not hit by ``mode_map``.

    ``mode_map[i]`` is the target mode receiving mode ``i`` of ``t``.
    """
    target = tuple(int(x) for x in target)
    mm = [int(x) for x in mode_map]
    if len(mm) != t.order or len(set(mm)) != len(mm) or any(m < 0 or m >= len(target) for m in mm):
        raise ModeError("mode_map must be an injection into the target modes")
    for i, m in enumerate(mm):
        if t.shape[i] != target[m]:
            raise ShapeError(f"mode {i} has size {t.shape[i]}, target mode {m} has {target[m]}")
    order = np.argsort(mm)
    data = np.transpose(t.data, list(order) + [t.order])
    slots = np.transpose(t.slots, list(order) + [t.order])
    expand = [1] * len(target)
    for m in mm:
        expand[m] = target[m]
    data = data.reshape(tuple(expand) + (t.depth,))
    slots = slots.reshape(tuple(expand) + (t.depth,))
    full = target + (t.depth,)
    return Mda(np.broadcast_to(data, full), np.broadcast_to(slots, full))


def fold_present(values: np.ndarray, mask: np.ndarray, op: Callable, axis: int = -1):
    """Fold ``op`` left to right along ``axis`` over the masked entries.

    Returns (result, any_present). Entries where nothing is present hold
    an arbitrary placeholder.
    """
    values = np.moveaxis(values, axis, -1)
    mask = np.moveaxis(mask, axis, -1)
    acc = values[..., 0].copy()
    have = mask[..., 0].copy()
    for k in range(1, values.shape[-1]):
        v, m = values[..., k], mask[..., k]
        both = have & m
        if both.any():
            acc = np.where(both, _apply(op, acc, v), acc)
        only = m & ~have
        if only.any():
            acc = np.where(only, v, acc)
        have |= m
    return acc, have


def _apply(op, a, b):
    out = op(a, b)
    return np.asarray(out, dtype=a.dtype) if a.dtype != object else out


def fold_tuples(t: Mda, op: Callable) -> Mda:
    """Collapse each hyper cell to one value by folding ``op`` in slot order."""
    acc, have = fold_present(t.data, t.slots, op)
    return Mda(acc[..., None], have[..., None])


def reduce(t: Mda, modes, op: Callable) -> Mda:
    """Fold ``op`` over present entries of each slice spanned by ``modes``.

    Hyper cells are collapsed first with the same ``op``. The fold runs in
    row-major order of the reduced modes. Fully absent slices stay absent.
    """
    ms = _check_modes(t, modes)
    if not ms:
        return t
    if t.depth > 1:
        t = fold_tuples(t, op)
    keep = [m for m in range(t.order) if m not in ms]
    vals = np.transpose(t.data[..., 0], keep + list(ms))
    mask = np.transpose(t.slots[..., 0], keep + list(ms))
    out_shape = vals.shape[: len(keep)]
    vals = vals.reshape(out_shape + (-1,))
    mask = mask.reshape(out_shape + (-1,))
    acc, have = fold_present(vals, mask, op)
    return Mda(np.asarray(acc)[..., None], np.asarray(have)[..., None])
