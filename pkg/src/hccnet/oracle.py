"""Reference evaluator written as plain nested loops.

This module deliberately imports nothing from the engine: it parses the
TOM and tensor JSON on its own and walks every multi-index by hand. It is
the second route in differential tests and behind the ``oracle`` verb.
"""
from __future__ import annotations

import itertools
import operator

SCALAR_OPS = {
    "mul_add": (operator.mul, operator.add),
    "add_min": (operator.add, min),
    "add_max": (operator.add, max),
    "max_add": (max, operator.add),
    "mul_max": (operator.mul, max),
    "add_add": (operator.add, operator.add),
}


class OracleTensor:
    """Dictionary from index tuple to value; missing keys are absent."""

    def __init__(self, shape, entries):
        self.shape = tuple(shape)
        self.entries = dict(entries)

    @classmethod
    def from_nested(cls, values, present=None):
        shape = []
        v = values
        while isinstance(v, (list, tuple)):
            shape.append(len(v))
            v = v[0] if v else None
        entries = {}
        for ix in itertools.product(*[range(s) for s in shape]):
            x = values
            p = present
            for i in ix:
                x = x[i]
                p = p[i] if p is not None else None
            if p is None or p:
                entries[ix] = x
        return cls(shape, entries)

    @classmethod
    def from_file(cls, obj):
        shape = [int(s) for s in obj["shape"]]
        mask = obj.get("mask", "dense")
        grid = list(itertools.product(*[range(s) for s in shape]))
        data = list(obj["data"])
        entries = {}
        k = 0
        for pos, ix in enumerate(grid):
            if mask == "dense" or mask[pos] == "1":
                entries[ix] = float(data[k])
                k += 1
        return cls(shape, entries)

    def to_file(self):
        grid = list(itertools.product(*[range(s) for s in self.shape]))
        if all(ix in self.entries for ix in grid):
            return {"shape": list(self.shape), "mask": "dense", "data": [float(self.entries[ix]) for ix in grid]}
        mask = "".join("1" if ix in self.entries else "0" for ix in grid)
        return {"shape": list(self.shape), "mask": mask, "data": [float(self.entries[ix]) for ix in grid if ix in self.entries]}

    def nested(self, fill=None):
        def build(prefix):
            d = len(prefix)
            if d == len(self.shape):
                return self.entries.get(tuple(prefix), fill)
            return [build(prefix + [i]) for i in range(self.shape[d])]

        return build([])


def _row_columns(incidence, r):
    return [c for c, x in enumerate(incidence[r]) if x]


def oracle_evaluate(tom: dict, operands, base_ops: str | None = None) -> OracleTensor:
    """Evaluate a TOM given as JSON against :class:`OracleTensor` operands."""
    incidence = [[bool(x) for x in row] for row in tom["incidence"]]
    contracted = [bool(x) for x in tom["contracted"]]
    star, diamond = SCALAR_OPS[base_ops or tom.get("base_ops", "mul_add")]
    ncols = len(contracted)
    rows = [_row_columns(incidence, r) for r in range(len(incidence))]

    # column sizes from the span of present indices of each operand
    sizes = [None] * ncols
    lows = []
    for r, t in enumerate(operands):
        keys = list(t.entries)
        low = []
        for m, c in enumerate(rows[r]):
            lo = min(k[m] for k in keys)
            hi = max(k[m] for k in keys)
            low.append(lo)
            n = hi - lo + 1
            if sizes[c] is None:
                sizes[c] = n
            elif sizes[c] != n:
                raise ValueError(f"column {c} has lengths {sizes[c]} and {n}")
        lows.append(low)

    out_cols = [c for c in range(ncols) if not contracted[c]]
    sum_cols = [c for c in range(ncols) if contracted[c]]
    result = {}
    for out_ix in itertools.product(*[range(sizes[c]) for c in out_cols]):
        total = None
        for sum_ix in itertools.product(*[range(sizes[c]) for c in sum_cols]):
            full = [0] * ncols
            for c, i in zip(out_cols, out_ix):
                full[c] = i
            for c, i in zip(sum_cols, sum_ix):
                full[c] = i
            value = None
            for r, t in enumerate(operands):
                key = tuple(full[c] + lo for c, lo in zip(rows[r], lows[r]))
                if key in t.entries:
                    x = t.entries[key]
                    value = x if value is None else star(value, x)
            if value is None:
                continue
            total = value if total is None else diamond(total, value)
        if total is not None:
            result[out_ix] = total
    return OracleTensor([sizes[c] for c in out_cols], result)
