"""Networks as tensor-equation matrices (TEMs).

A TEM is an ordered set of tensor columns and a list of rows. Rows are
tensor operations (a TOM plus operand/output columns), activations and
mode maps. Activations act in place on their target column unless an
``output`` column is named; their affine parameters live on the row.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .mda import Mda
from .modemap import ModeMap
from .ops import Tom, base_ops, evaluate

ROLES = ("input", "weight", "intermediate", "output")


class NetworkError(ValueError):
    pass


class BindingError(NetworkError):
    pass


class ShapeError(NetworkError):
    pass


# ---------------------------------------------------------------------------
# activations

def leaky_relu(x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def relu6(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 6.0)


def silu(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.exp(-x))


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _axes(x: np.ndarray, axis) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(x.ndim))
    axes = (axis,) if isinstance(axis, (int, np.integer)) else tuple(axis)
    if not axes or any(a < 0 or a >= x.ndim for a in axes):
        raise ShapeError(f"axis {axis} invalid for order {x.ndim}")
    return tuple(sorted(set(int(a) for a in axes)))


def softmax(x: np.ndarray, axis=-1) -> np.ndarray:
    if isinstance(axis, int) and axis < 0:
        axis = x.ndim + axis
    ax = _axes(x, axis)
    z = x - x.max(axis=ax, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=ax, keepdims=True)


def layer_norm(x: np.ndarray, axis=None, gamma=None, beta=None, eps: float = 1e-5) -> np.ndarray:
    """Normalize over ``axis`` modes; γ and β are shaped by those modes."""
    ax = _axes(x, axis)
    mu = x.mean(axis=ax, keepdims=True)
    var = x.var(axis=ax, keepdims=True)
    y = (x - mu) / np.sqrt(var + eps)
    shape = [x.shape[a] if a in ax else 1 for a in range(x.ndim)]
    if gamma is not None:
        y = y * np.asarray(gamma).reshape(shape)
    if beta is not None:
        y = y + np.asarray(beta).reshape(shape)
    return y


ACTIVATIONS = ("leaky_relu", "relu6", "layer_norm", "softmax", "silu", "softplus")
AXIS_KINDS = ("layer_norm", "softmax")


# ---------------------------------------------------------------------------
# TEM structure

@dataclass
class TensorCol:
    name: str
    role: str
    shape: tuple[int, ...]

    def __post_init__(self):
        if self.role not in ROLES:
            raise NetworkError(f"unknown role {self.role!r}")
        self.shape = tuple(int(s) for s in self.shape)


@dataclass
class OpRow:
    tom: Tom
    inputs: list[str]
    output: str

    kind = "op"

    def reads(self) -> list[str]:
        return list(self.inputs)

    def writes(self) -> list[str]:
        return [self.output]


@dataclass
class ActRow:
    act: str
    target: str
    axis: list[int] | None = None
    params: dict = field(default_factory=dict)
    output: str | None = None

    kind = "act"

    def __post_init__(self):
        if self.act not in ACTIVATIONS:
            raise NetworkError(f"unknown activation {self.act!r}")
        if self.axis is not None:
            self.axis = [int(a) for a in self.axis]

    def reads(self) -> list[str]:
        return [self.target]

    def writes(self) -> list[str]:
        return [self.output] if self.output else []

    def affine_shape(self, target_shape: Sequence[int]) -> tuple[int, ...] | None:
        if self.act != "layer_norm" or not self.params.get("affine", True):
            return None
        axes = range(len(target_shape)) if self.axis is None else self.axis
        return tuple(int(target_shape[a]) for a in axes)


@dataclass
class MapRow:
    modemap: ModeMap
    input: str
    output: str

    kind = "modemap"

    def reads(self) -> list[str]:
        return [self.input]

    def writes(self) -> list[str]:
        return [self.output]


@dataclass(frozen=True)
class ComplexitySignature:
    c_op: int
    c_t: int
    c_alpha: int
    c_o: int
    c_a: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.c_op, self.c_t, self.c_alpha, self.c_o, self.c_a)

    def to_json(self) -> dict:
        return {"c_op": self.c_op, "c_t": self.c_t, "c_alpha": self.c_alpha, "c_o": self.c_o, "c_a": self.c_a}


@dataclass
class Tem:
    tensors: list[TensorCol] = field(default_factory=list)
    rows: list = field(default_factory=list)
    notes: str = ""

    def tensor(self, name: str) -> TensorCol:
        for t in self.tensors:
            if t.name == name:
                return t
        raise NetworkError(f"unknown tensor {name!r}")

    def names(self) -> list[str]:
        return [t.name for t in self.tensors]

    def packaging(self) -> set[str]:
        """Columns produced by mode maps; they share their source's elements."""
        return {r.output for r in self.rows if isinstance(r, MapRow)}

    def incidence(self) -> np.ndarray:
        idx = {n: i for i, n in enumerate(self.names())}
        m = np.zeros((len(self.rows), len(self.tensors)), dtype=bool)
        for r, row in enumerate(self.rows):
            for n in row.reads() + row.writes():
                m[r, idx[n]] = True
        return m

    def op_rows(self) -> list[OpRow]:
        return [r for r in self.rows if isinstance(r, OpRow)]

    def bound_tom(self, row: OpRow) -> Tom:
        return row.tom.with_shapes([self.tensor(n).shape for n in row.inputs])

    # JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        rows = []
        for r in self.rows:
            if isinstance(r, OpRow):
                rows.append({"kind": "op", "tom": _tom_json(r.tom), "inputs": list(r.inputs), "output": r.output})
            elif isinstance(r, ActRow):
                d = {"kind": "act", "act": r.act, "target": r.target, "axis": r.axis, "params": dict(r.params)}
                if r.output:
                    d["output"] = r.output
                rows.append(d)
            else:
                rows.append({"kind": "modemap", "map": r.modemap.to_json(), "input": r.input, "output": r.output})
        out = {
            "tensors": [{"name": t.name, "role": t.role, "shape": list(t.shape)} for t in self.tensors],
            "rows": rows,
        }
        if self.notes:
            out["notes"] = self.notes
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Tem":
        try:
            tensors = [TensorCol(t["name"], t["role"], t["shape"]) for t in obj["tensors"]]
            rows = []
            for r in obj["rows"]:
                kind = r["kind"]
                if kind == "op":
                    rows.append(OpRow(Tom.from_json(r["tom"]), list(r["inputs"]), r["output"]))
                elif kind == "act":
                    rows.append(ActRow(r["act"], r["target"], r.get("axis"), dict(r.get("params") or {}), r.get("output")))
                elif kind == "modemap":
                    rows.append(MapRow(ModeMap.from_json(r["map"]), r["input"], r["output"]))
                else:
                    raise NetworkError(f"unknown row kind {kind!r}")
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed architecture JSON: {exc}") from exc
        return cls(tensors, rows, obj.get("notes", ""))


def _tom_json(t: Tom) -> dict:
    d = t.to_json()
    d["shapes"] = []
    return d


# ---------------------------------------------------------------------------
# validation and scheduling

def _schedule(n: Tem) -> tuple[list[int] | None, list[str]]:
    """Topological row order, or None plus messages on failure."""
    errors: list[str] = []
    names = set(n.names())
    producer: dict[str, int] = {}
    for i, row in enumerate(n.rows):
        for name in row.reads() + row.writes():
            if name not in names:
                errors.append(f"row {i}: unknown tensor {name!r}")
        for name in row.writes():
            if name in producer:
                errors.append(f"tensor {name!r} has producers {producer[name]} and {i}")
            producer[name] = i
    if errors:
        return None, errors
    inplace: dict[str, list[int]] = defaultdict(list)
    for i, row in enumerate(n.rows):
        if isinstance(row, ActRow) and not row.output:
            inplace[row.target].append(i)
    deps: dict[int, set[int]] = {i: set() for i in range(len(n.rows))}
    for i, row in enumerate(n.rows):
        if not isinstance(row, ActRow) and set(row.reads()) & set(row.writes()):
            errors.append(f"dependency cycle: row {i} reads its own output")
        for name in row.reads():
            if name in producer and producer[name] != i:
                deps[i].add(producer[name])
            if not (isinstance(row, ActRow) and not row.output):
                deps[i].update(j for j in inplace.get(name, []))
        if isinstance(row, ActRow) and not row.output:
            earlier = [j for j in inplace[row.target] if j < i]
            deps[i].update(earlier)
    if errors:
        return None, errors
    indeg = {i: len(d) for i, d in deps.items()}
    users: dict[int, list[int]] = defaultdict(list)
    for i, d in deps.items():
        for j in d:
            users[j].append(i)
    ready = deque(sorted(i for i, k in indeg.items() if k == 0))
    order = []
    while ready:
        i = ready.popleft()
        order.append(i)
        for u in sorted(users[i]):
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
    if len(order) != len(n.rows):
        stuck = sorted(set(range(len(n.rows))) - set(order))
        return None, [f"dependency cycle through rows {stuck}"]
    return order, []


def validate_tem(n: Tem) -> dict:
    errors: list[str] = []
    seen: set[str] = set()
    for t in n.tensors:
        if t.name in seen:
            errors.append(f"duplicate tensor {t.name!r}")
        seen.add(t.name)
    order, errs = _schedule(n)
    errors += errs
    if order is None:
        return {"ok": False, "errors": errors}
    produced = {w for r in n.rows for w in r.writes()}
    for t in n.tensors:
        if t.role in ("input", "weight") and t.name in produced:
            errors.append(f"{t.role} {t.name!r} must not be produced by a row")
        if t.role in ("intermediate", "output") and t.name not in produced:
            errors.append(f"{t.role} {t.name!r} has no producer")
    for i in order:
        row = n.rows[i]
        try:
            if isinstance(row, OpRow):
                if len(row.inputs) != row.tom.arity:
                    raise ShapeError(f"{len(row.inputs)} operands for arity {row.tom.arity}")
                if len(set(row.inputs)) != len(row.inputs):
                    raise ShapeError("the same tensor appears twice in one operation")
                tom = n.bound_tom(row)
                if tom.output_shape() != n.tensor(row.output).shape:
                    raise ShapeError(f"produces {tom.output_shape()} but {row.output!r} is {n.tensor(row.output).shape}")
            elif isinstance(row, ActRow):
                shape = n.tensor(row.target).shape
                if row.act in AXIS_KINDS and row.axis is not None:
                    if any(a < 0 or a >= len(shape) for a in row.axis):
                        raise ShapeError(f"axis {row.axis} out of range for {shape}")
                if row.output and n.tensor(row.output).shape != shape:
                    raise ShapeError("activation output shape differs from its input")
            else:
                if row.modemap.source_shape != n.tensor(row.input).shape:
                    raise ShapeError(f"mode map expects {row.modemap.source_shape}, input is {n.tensor(row.input).shape}")
                if row.modemap.target_shape != n.tensor(row.output).shape:
                    raise ShapeError(f"mode map yields {row.modemap.target_shape}, output is {n.tensor(row.output).shape}")
        except (ShapeError, ValueError) as exc:
            errors.append(f"row {i}: {exc}")
    return {"ok": not errors, "errors": errors}


# ---------------------------------------------------------------------------
# complexity

def signature(n: Tem, count_activations: bool = False) -> ComplexitySignature:
    ops = n.op_rows()
    acts = [r for r in n.rows if isinstance(r, ActRow)]
    c_op = len(ops) + (len(acts) if count_activations else 0)
    pkg = n.packaging()
    c_t = sum(1 for t in n.tensors if t.name not in pkg)
    arities = [r.tom.arity for r in ops] + ([1] * len(acts) if count_activations else [])
    c_alpha = max(arities, default=0)
    c_o = max((r.tom.cols for r in ops), default=0)
    c_a = max((int(r.tom.incidence.sum(axis=0).max()) for r in ops), default=0)
    return ComplexitySignature(c_op, c_t, c_alpha, c_o, c_a)


def param_count(n: Tem) -> int:
    """Weight tensor sizes plus activation affine parameters."""
    total = sum(int(np.prod(t.shape)) for t in n.tensors if t.role == "weight")
    for r in n.rows:
        if isinstance(r, ActRow):
            s = r.affine_shape(n.tensor(r.target).shape)
            if s is not None:
                total += 2 * int(np.prod(s))
    return total


# ---------------------------------------------------------------------------
# forward evaluation

def weight_fan(n: Tem, name: str) -> int:
    """Product of contracted-mode sizes touching ``name`` in its first use."""
    for row in n.rows:
        if isinstance(row, OpRow) and name in row.inputs:
            r = row.inputs.index(name)
            tom = n.bound_tom(row)
            sizes = tom.column_sizes()
            fan = 1
            for c in tom.row_modes(r):
                if tom.contracted[c]:
                    fan *= sizes[c]
            return fan
    return 1


def init_weights(n: Tem, seed: int) -> dict[str, Mda]:
    rng = np.random.default_rng(seed)
    out = {}
    for t in n.tensors:
        if t.role == "weight":
            bound = 1.0 / np.sqrt(weight_fan(n, t.name))
            out[t.name] = Mda.from_array(rng.uniform(-bound, bound, size=t.shape))
    return out


def _as_mda(x) -> Mda:
    return x if isinstance(x, Mda) else Mda.from_array(x)


def apply_activation(row: ActRow, x: Mda, params: Mapping | None = None) -> Mda:
    params = dict(row.params, **(params or {}))
    v = x.scalars(0.0).astype(np.float64)
    if row.act == "leaky_relu":
        y = leaky_relu(v, params.get("slope", 0.01))
    elif row.act == "relu6":
        y = relu6(v)
    elif row.act == "silu":
        y = silu(v)
    elif row.act == "softplus":
        y = softplus(v)
    elif row.act == "softmax":
        y = softmax(v, row.axis if row.axis is not None else -1)
    else:
        y = layer_norm(v, row.axis, params.get("gamma"), params.get("beta"), params.get("eps", 1e-5))
    return Mda.from_array(y, present=x.present)


def forward(
    n: Tem,
    inputs: Mapping[str, object],
    weights: Mapping[str, object] | None = None,
    seed: int | None = None,
    keep_all: bool = False,
    trace: list | None = None,
    batch: bool = False,
) -> dict[str, Mda]:
    """Evaluate rows in dependency order.

    Missing weights are drawn with :func:`init_weights` when ``seed`` is
    given. Layer-norm affine parameters default to γ=1, β=0 and may be
    supplied as weights named ``"<target>.gamma"`` / ``"<target>.beta"``.
    With ``batch`` every input carries one extra leading mode; samples are
    evaluated independently and stacked, so the batch mode never enters a TOM.
    """
    if batch:
        return _forward_batched(n, inputs, weights, seed, keep_all)
    rep = validate_tem(n)
    if not rep["ok"]:
        raise NetworkError("; ".join(rep["errors"]))
    order, _ = _schedule(n)
    values: dict[str, Mda] = {}
    for t in n.tensors:
        if t.role == "input":
            if t.name not in inputs:
                raise BindingError(f"missing input {t.name!r}")
            values[t.name] = _as_mda(inputs[t.name])
    weights = dict(weights or {})
    drawn = init_weights(n, seed) if seed is not None else {}
    for t in n.tensors:
        if t.role == "weight":
            if t.name in weights:
                values[t.name] = _as_mda(weights[t.name])
            elif t.name in drawn:
                values[t.name] = drawn[t.name]
            else:
                raise BindingError(f"missing weight {t.name!r}")
    for name in list(values):
        if values[name].shape != n.tensor(name).shape:
            raise ShapeError(f"{name!r} bound with shape {values[name].shape}, declared {n.tensor(name).shape}")
    for i in order:
        row = n.rows[i]
        if isinstance(row, OpRow):
            tom = n.bound_tom(row)
            out = evaluate(tom, [values[x] for x in row.inputs], base_ops(tom.base_ops))
            dest = row.output
        elif isinstance(row, ActRow):
            extra = {}
            for key in ("gamma", "beta"):
                w = weights.get(f"{row.target}.{key}")
                if w is not None:
                    extra[key] = _as_mda(w).scalars(0.0)
            out = apply_activation(row, values[row.target], extra)
            dest = row.output or row.target
        else:
            out = row.modemap.apply(values[row.input])
            dest = row.output
        if out.shape != n.tensor(dest).shape:
            raise ShapeError(f"row {i}: produced {out.shape}, {dest!r} declared {n.tensor(dest).shape}")
        values[dest] = out
        if trace is not None:
            trace.append((i, dest, out.shape))
    if keep_all:
        return values
    return {t.name: values[t.name] for t in n.tensors if t.role == "output"}


def _forward_batched(n, inputs, weights, seed, keep_all):
    arrays = {k: _as_mda(v) for k, v in inputs.items()}
    sizes = {m.shape[0] for m in arrays.values() if m.order}
    if len(sizes) != 1:
        raise ShapeError(f"inputs disagree on the batch size: {sorted(sizes)}")
    if seed is not None:
        weights = {**init_weights(n, seed), **dict(weights or {})}
    results = []
    for b in range(sizes.pop()):
        sample = {k: Mda(m.data[b], m.slots[b]) for k, m in arrays.items()}
        results.append(forward(n, sample, weights, None, keep_all))
    out = {}
    for name in results[0]:
        out[name] = Mda(
            np.stack([r[name].data for r in results]),
            np.stack([r[name].slots for r in results]),
        )
    return out
