"""Tensor operations as tensor-operation matrices (TOMs).

A TOM is an α×C_O boolean incidence matrix plus a contraction flag per
column. Row ``r`` is an operand; its modes map, in order, onto the
columns filled in that row. Evaluation builds the hyper-tensor of
operand tuples over the column grid, folds each tuple with the tuple
operation ⋆ and then folds contracted columns with the slice operation ⋄.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .mda import Mda, broadcast, fold_tuples, reduce


class OpsError(ValueError):
    pass


class PreconditionError(OpsError):
    pass


class AlgebraError(OpsError):
    pass


class ArityError(OpsError):
    pass


class CouplingError(OpsError):
    pass


class SetSemanticsError(OpsError):
    pass


# ---------------------------------------------------------------------------
# base operations

@dataclass(frozen=True)
class BaseOps:
    name: str
    star: Callable
    diamond: Callable
    distributive: bool
    associative: bool

    def spot_check(self, trials: int = 100, seed: int = 0, tol: float = 1e-12) -> bool:
        """Numerically test the claimed flags on random scalar triples."""
        rng = np.random.default_rng(seed)
        a, b, c = rng.uniform(-2.0, 2.0, size=(3, trials))
        s, d = self.star, self.diamond
        left = np.abs(s(a, d(b, c)) - d(s(a, b), s(a, c)))
        right = np.abs(s(d(b, c), a) - d(s(b, a), s(c, a)))
        assoc = np.abs(d(d(a, b), c) - d(a, d(b, c)))
        ok_dist = bool((left <= tol).all() and (right <= tol).all())
        ok_assoc = bool((assoc <= tol).all())
        return ok_dist and ok_assoc

    def require_decomposable(self) -> None:
        if not (self.distributive and self.associative):
            raise AlgebraError(f"{self.name}: decomposition needs ⋆ distributive over ⋄ and ⋄ associative")
        if not self.spot_check():
            raise AlgebraError(f"{self.name}: claimed flags fail the numeric spot check")


BASE_OPS: dict[str, BaseOps] = {
    "mul_add": BaseOps("mul_add", np.multiply, np.add, True, True),
    "add_min": BaseOps("add_min", np.add, np.minimum, True, True),
    "add_max": BaseOps("add_max", np.add, np.maximum, True, True),
    "max_add": BaseOps("max_add", np.maximum, np.add, False, True),
    "mul_max": BaseOps("mul_max", np.multiply, np.maximum, False, True),
    # elementwise sums (no contracted columns) use ⋆ = +
    "add_add": BaseOps("add_add", np.add, np.add, False, True),
}


def base_ops(name_or_ops) -> BaseOps:
    if isinstance(name_or_ops, BaseOps):
        return name_or_ops
    try:
        return BASE_OPS[name_or_ops]
    except KeyError:
        raise OpsError(f"unknown base operations {name_or_ops!r}") from None


# ---------------------------------------------------------------------------
# TOM

@dataclass
class Tom:
    incidence: np.ndarray
    contracted: np.ndarray
    shapes: list = field(default_factory=list)
    base_ops: str = "mul_add"

    def __post_init__(self):
        self.incidence = np.atleast_2d(np.asarray(self.incidence, dtype=bool))
        self.contracted = np.asarray(self.contracted, dtype=bool).reshape(-1)
        if self.contracted.size != self.incidence.shape[1]:
            raise OpsError("one contraction flag per column")
        if not self.incidence.any(axis=0).all():
            raise OpsError("every column needs a filled entry")
        if not self.shapes:
            self.shapes = [None] * self.arity
        self.shapes = [None if s is None else tuple(int(x) for x in s) for s in self.shapes]
        if len(self.shapes) != self.arity:
            raise OpsError("one shape per row")
        for r, s in enumerate(self.shapes):
            if s is not None and len(s) != int(self.incidence[r].sum()):
                raise OpsError(f"row {r}: shape {s} does not match {int(self.incidence[r].sum())} filled columns")
        self.column_sizes()

    @property
    def arity(self) -> int:
        return self.incidence.shape[0]

    @property
    def cols(self) -> int:
        return self.incidence.shape[1]

    def row_modes(self, r: int) -> list[int]:
        return [int(c) for c in np.flatnonzero(self.incidence[r])]

    def output_cols(self) -> list[int]:
        return [c for c in range(self.cols) if not self.contracted[c]]

    def contracted_cols(self) -> list[int]:
        return [c for c in range(self.cols) if self.contracted[c]]

    def column_sizes(self) -> list[int | None]:
        sizes: list = [None] * self.cols
        for r, s in enumerate(self.shapes):
            if s is None:
                continue
            for c, d in zip(self.row_modes(r), s):
                if sizes[c] is not None and sizes[c] != d:
                    raise CouplingError(f"column {c}: sizes {sizes[c]} and {d} disagree")
                sizes[c] = d
        return sizes

    def output_shape(self) -> tuple | None:
        sizes = self.column_sizes()
        out = [sizes[c] for c in self.output_cols()]
        return None if any(x is None for x in out) else tuple(out)

    def with_shapes(self, shapes) -> "Tom":
        return Tom(self.incidence.copy(), self.contracted.copy(), list(shapes), self.base_ops)

    # JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "rows": self.arity,
            "cols": self.cols,
            "incidence": self.incidence.astype(int).tolist(),
            "contracted": [bool(x) for x in self.contracted],
            "shapes": [None if s is None else list(s) for s in self.shapes],
            "base_ops": self.base_ops,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Tom":
        try:
            inc = np.asarray(obj["incidence"], dtype=int)
            if inc.ndim != 2 or set(np.unique(inc)) - {0, 1}:
                raise OpsError("incidence must be a 0/1 matrix")
            if "rows" in obj and inc.shape[0] != obj["rows"]:
                raise OpsError("rows disagrees with incidence")
            if "cols" in obj and inc.shape[1] != obj["cols"]:
                raise OpsError("cols disagrees with incidence")
            return cls(inc, obj["contracted"], obj.get("shapes") or [], obj.get("base_ops", "mul_add"))
        except (KeyError, TypeError) as exc:
            raise OpsError(f"malformed TOM JSON: {exc}") from exc

    # einsum-style construction ---------------------------------------
    @classmethod
    def from_einsum(cls, spec: str, sizes: dict | None = None, base_ops: str = "mul_add") -> "Tom":
        """Build from ``"ij,jk->ik"`` notation.

        Columns are ordered so every operand's and the output's mode order
        is preserved; a ValueError is raised when no such order exists.
        """
        lhs, rhs = spec.replace(" ", "").split("->")
        ops_ = lhs.split(",")
        letters = []
        for s in ops_ + [rhs]:
            for ch in s:
                if ch not in letters:
                    letters.append(ch)
        order = _merge_orders([list(s) for s in [rhs] + ops_], letters)
        inc = np.array([[ch in s for ch in order] for s in ops_], dtype=bool)
        contracted = [ch not in rhs for ch in order]
        shapes = [[sizes[ch] for ch in s] for s in ops_] if sizes else []
        return cls(inc, contracted, shapes, base_ops)

    def einsum_spec(self) -> str:
        letters = string.ascii_letters
        if self.cols > len(letters):
            raise OpsError("too many columns for einsum letters")
        ins = ["".join(letters[c] for c in self.row_modes(r)) for r in range(self.arity)]
        out = "".join(letters[c] for c in self.output_cols())
        return ",".join(ins) + "->" + out


def _merge_orders(chains: list[list], letters: list) -> list:
    succ = {x: set() for x in letters}
    indeg = {x: 0 for x in letters}
    for ch in chains:
        for a, b in zip(ch, ch[1:]):
            if b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    out = []
    ready = [x for x in letters if indeg[x] == 0]
    while ready:
        x = min(ready, key=letters.index)
        ready.remove(x)
        out.append(x)
        for y in succ[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                ready.append(y)
    if len(out) != len(letters):
        raise ValueError("operand mode orders admit no common column order; permute an operand first")
    return out


def tom_complexity(t: Tom) -> tuple[int, int, int]:
    return (t.arity, t.cols, int(t.incidence.sum(axis=0).max()))


# ---------------------------------------------------------------------------
# validation, hyper-tensor, evaluation

def validate_tom(t: Tom, operands: Sequence[Mda]) -> dict:
    errors: list[str] = []
    if len(operands) != t.arity:
        return {"ok": False, "errors": [f"expected {t.arity} operands, got {len(operands)}"], "sizes": None}
    sizes: list = [None] * t.cols
    for r, (op, decl) in enumerate(zip(operands, t.shapes)):
        modes = t.row_modes(r)
        if op.order != len(modes):
            errors.append(f"row {r}: operand order {op.order} but {len(modes)} filled columns")
            continue
        if decl is not None and tuple(decl) != op.shape:
            errors.append(f"row {r}: declared shape {tuple(decl)} but operand has {op.shape}")
        if not op.present.any():
            errors.append(f"row {r}: operand has no present entries")
            continue
        for c, length in zip(modes, op.lengths()):
            if sizes[c] is None:
                sizes[c] = length
            elif sizes[c] != length:
                errors.append(f"column {c}: tensor lengths {sizes[c]} and {length} differ (row {r})")
    return {"ok": not errors, "errors": errors, "sizes": None if errors else sizes}


def build_hyper(t: Tom, operands: Sequence[Mda]) -> tuple[Mda, tuple[int, ...]]:
    """Tuple hyper-tensor over the C_O grid; slot ``r`` holds operand ``r``."""
    rep = validate_tom(t, operands)
    if not rep["ok"]:
        raise PreconditionError("; ".join(rep["errors"]))
    grid = tuple(rep["sizes"])
    dtype = np.result_type(*[op.dtype for op in operands])
    data = np.empty(grid + (t.arity,), dtype=dtype)
    slots = np.zeros(grid + (t.arity,), dtype=bool)
    for r, op in enumerate(operands):
        if op.is_hyper():
            raise PreconditionError(f"row {r}: operands must not be hyper")
        b = broadcast(op.trim(), grid, t.row_modes(r))
        data[..., r] = b.data[..., 0]
        slots[..., r] = b.slots[..., 0]
    if dtype == object:
        data[~slots] = None
    else:
        data[~slots] = 0
    return Mda(data, slots), tuple(t.contracted_cols())


def evaluate(t: Tom, operands: Sequence[Mda], ops="mul_add", engine: str = "auto") -> Mda:
    """Fold tuples with ⋆, then contracted columns with ⋄.

    ``engine="auto"`` hands dense float (·,+) work to ``numpy.einsum``;
    ``"general"`` always runs the two-step hyper-tensor procedure.
    """
    ops = base_ops(ops)
    operands = [op if isinstance(op, Mda) else Mda.from_array(op) for op in operands]
    if engine not in ("auto", "general", "einsum"):
        raise OpsError(f"unknown engine {engine!r}")
    fast = (
        ops.name == "mul_add"
        and all(op.is_dense() and not op.is_hyper() and op.dtype.kind == "f" for op in operands)
    )
    if engine == "einsum" or (engine == "auto" and fast):
        rep = validate_tom(t, operands)
        if not rep["ok"]:
            raise PreconditionError("; ".join(rep["errors"]))
        out = _einsum_prereduced(t, [op.data[..., 0] for op in operands])
        return Mda.from_array(np.asarray(out, dtype=np.float64))
    hyper, contracted = build_hyper(t, operands)
    folded = fold_tuples(hyper, ops.star)
    return reduce(folded, contracted, ops.diamond)


def _einsum_prereduced(t: Tom, arrays: list) -> np.ndarray:
    """Sum out contracted columns private to one operand before the joint
    einsum; numpy's path search does not do this on its own."""
    spec_in, spec_out = t.einsum_spec().split("->")
    specs = spec_in.split(",")
    count = {ch: sum(ch in s for s in specs) for ch in set(spec_in.replace(",", ""))}
    reduced, kept = [], []
    for s, a in zip(specs, arrays):
        keep = "".join(ch for ch in s if count[ch] > 1 or ch in spec_out)
        if keep != s:
            a = np.einsum(f"{s}->{keep}", a)
        reduced.append(a)
        kept.append(keep)
    return np.einsum(",".join(kept) + "->" + spec_out, *reduced, optimize=True)


# ---------------------------------------------------------------------------
# arity decomposition and merging

def _sized_shapes(t: Tom, rows_cols: list[list[int]]) -> list:
    sizes = t.column_sizes()
    out = []
    for cols in rows_cols:
        s = [sizes[c] for c in cols]
        out.append(None if any(x is None for x in s) else s)
    return out


def decompose_arity(t: Tom, ops="mul_add", operands: Sequence[Mda] | None = None) -> tuple[Tom, Tom]:
    """Split off the last operand: (op over the first α-1, binary op)."""
    ops = base_ops(ops)
    if t.arity < 3:
        raise ArityError("decomposition needs arity >= 3")
    ops.require_decomposable()
    if operands is not None and not all(op.is_dense() and not op.is_hyper() for op in operands):
        raise PreconditionError("decomposition is only defined for dense operands")
    a = t.arity
    head = t.incidence[: a - 1]
    last = t.incidence[a - 1]
    cols1 = [c for c in range(t.cols) if head[:, c].any()]
    con1 = [bool(t.contracted[c] and not last[c]) for c in cols1]
    s1 = Tom(head[:, cols1], con1, t.shapes[: a - 1], ops.name)
    out1 = [c for c, k in zip(cols1, con1) if not k]
    cols2 = [c for c in range(t.cols) if c in out1 or last[c]]
    inc2 = np.array([[c in out1 for c in cols2], [bool(last[c]) for c in cols2]], dtype=bool)
    beta_shape = _sized_shapes(t, [out1])[0]
    s2 = Tom(inc2, [bool(t.contracted[c]) for c in cols2], [beta_shape, t.shapes[a - 1]], ops.name)
    return s1, s2


def decompose_to_binary(t: Tom, ops="mul_add", operands: Sequence[Mda] | None = None) -> list[Tom]:
    """Chain of binary ops; op k>0 takes the previous result and operand k+1."""
    if t.arity <= 2:
        return [t]
    s1, s2 = decompose_arity(t, ops, operands)
    head = None if operands is None else operands[:-1]
    return decompose_to_binary(s1, ops, head) + [s2]


def evaluate_chain(chain: Sequence[Tom], operands: Sequence[Mda], ops="mul_add", engine: str = "auto") -> Mda:
    first = chain[0]
    out = evaluate(first, operands[: first.arity], ops, engine)
    k = first.arity
    for tom in chain[1:]:
        extra = tom.arity - 1
        out = evaluate(tom, [out] + list(operands[k : k + extra]), ops, engine)
        k += extra
    return out


def merge_ops(t1: Tom, t2: Tom, bind: int, ops="mul_add", names: tuple[Sequence, Sequence] | None = None) -> Tom:
    """Substitute ``t1``'s output for operand ``bind`` of ``t2``.

    The operands of ``t1`` take the place of the bound row, so the
    merged operand list is ``t2[:bind] + t1 + t2[bind+1:]``.
    """
    ops = base_ops(ops)
    ops.require_decomposable()
    if not 0 <= bind < t2.arity:
        raise ArityError(f"bind {bind} out of range for arity {t2.arity}")
    if names is not None:
        n1, n2 = list(names[0]), [n for i, n in enumerate(names[1]) if i != bind]
        clash = set(n1) & set(n2)
        if clash or len(set(n1)) != len(n1) or len(set(n2)) != len(n2):
            raise SetSemanticsError(f"tensor used twice in one operation: {sorted(clash)}")
    out1 = t1.output_cols()
    bound = t2.row_modes(bind)
    if len(out1) != len(bound):
        raise CouplingError(f"t1 yields order {len(out1)} but operand {bind} of t2 has order {len(bound)}")
    s1 = t1.output_shape()
    s2 = t2.shapes[bind]
    if s1 is not None and s2 is not None and tuple(s1) != tuple(s2):
        raise CouplingError(f"t1 output shape {s1} differs from bound operand shape {tuple(s2)}")
    share1 = {c: k for k, c in enumerate(out1)}
    share2 = {c: k for k, c in enumerate(bound)}
    seq: list[tuple] = []
    i = j = 0
    while i < t1.cols or j < t2.cols:
        if i < t1.cols and i not in share1:
            seq.append((i, None))
            i += 1
        elif j < t2.cols and j not in share2:
            seq.append((None, j))
            j += 1
        else:
            if share1[i] != share2[j]:
                raise CouplingError("shared modes appear in different orders")
            seq.append((i, j))
            i += 1
            j += 1
    before = [r for r in range(t2.arity) if r < bind]
    after = [r for r in range(t2.arity) if r > bind]
    rows = []
    for r in before:
        rows.append([j is not None and bool(t2.incidence[r, j]) for _, j in seq])
    for r in range(t1.arity):
        rows.append([i is not None and bool(t1.incidence[r, i]) for i, _ in seq])
    for r in after:
        rows.append([j is not None and bool(t2.incidence[r, j]) for _, j in seq])
    contracted = [bool(t2.contracted[j]) if j is not None else bool(t1.contracted[i]) for i, j in seq]
    shapes = [t2.shapes[r] for r in before] + list(t1.shapes) + [t2.shapes[r] for r in after]
    return Tom(np.array(rows, dtype=bool), contracted, shapes, ops.name)
