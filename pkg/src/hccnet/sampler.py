"""Constrained random generation of architecture blocks.

Sampling happens in two stages. The TEM stage picks the operation count and,
row by row, the operand set: the block input, earlier outputs and fresh
weights. The TOM stage rejection-samples an incidence matrix, contraction
flags and an output shape until all operand sizes agree.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .jsonio import dumps
from .network import AXIS_KINDS, ActRow, OpRow, Tem, TensorCol, param_count, signature
from .ops import Tom

GENERATOR = "numpy-pcg64"
ACTIVATION_POOL = ("leaky_relu", "relu6", "layer_norm", "softmax")


class SamplingError(ValueError):
    pass


class SamplingTimeout(SamplingError):
    pass


@dataclass(frozen=True)
class SampleConstraints:
    c_op: tuple[int, int] = (2, 5)
    c_t: tuple[int, int] = (5, 16)
    c_alpha: tuple[int, int] = (2, 4)
    c_a: tuple[int, int] = (2, 4)
    c_o_max: int = 11
    input_shape: tuple[int, ...] = (64, 16, 16)
    output_shape: tuple[int, ...] | None = None
    max_elements: int = 2**20
    budget: int = 10_000
    max_attempts: int = 2_000

    def __post_init__(self):
        for name in ("c_op", "c_t", "c_alpha", "c_a"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 1:
                raise SamplingError(f"{name} range {lo}..{hi} is empty or non-positive")
        if self.c_alpha[0] < 2:
            raise SamplingError("operations need at least two operands")
        if self.c_o_max < 2:
            raise SamplingError("c_o_max must be at least 2")
        if not self.input_shape or min(self.input_shape) < 1:
            raise SamplingError("input shape must be non-empty and positive")

    def to_json(self) -> dict:
        return {
            "c_op": list(self.c_op),
            "c_t": list(self.c_t),
            "c_alpha": list(self.c_alpha),
            "c_a": list(self.c_a),
            "c_o_max": self.c_o_max,
            "input_shape": list(self.input_shape),
            "output_shape": None if self.output_shape is None else list(self.output_shape),
            "max_elements": self.max_elements,
            "budget": self.budget,
        }


@dataclass(frozen=True)
class SampleSeed:
    seed: int
    generator: str = GENERATOR

    def rng(self) -> np.random.Generator:
        if self.generator != GENERATOR:
            raise SamplingError(f"unsupported generator {self.generator!r}")
        return np.random.default_rng(self.seed & (2**64 - 1))


def _seed(s) -> SampleSeed:
    return s if isinstance(s, SampleSeed) else SampleSeed(int(s))


def _divisors(n: int) -> list[int]:
    return [d for d in range(2, n + 1) if n % d == 0]


@dataclass
class _Shapes:
    divisors: list[int]
    cap: int

    def draw(self, rng: random.Random) -> tuple[int, ...]:
        while True:
            shape = tuple(rng.choices(self.divisors, k=rng.randint(1, 4)))
            if math.prod(shape) <= self.cap:
                return shape


def _draw_tom(rng: random.Random, c: SampleConstraints, fixed: list[tuple], n_weights: int, out_shape: tuple):
    """One TOM draw; ``None`` when the draw is incompatible."""
    lo = max([len(out_shape)] + [len(s) for s in fixed])
    # columns seen only by weights would have no size, so cap the width
    hi = min(c.c_o_max, len(out_shape) + sum(len(s) for s in fixed))
    if lo > hi:
        return None
    cols = rng.randint(lo, hi)
    sizes: list = [None] * cols
    out_cols = sorted(rng.sample(range(cols), len(out_shape)))
    for col, d in zip(out_cols, out_shape):
        sizes[col] = d
    rows = []
    for shp in fixed:
        rc = sorted(rng.sample(range(cols), len(shp)))
        for col, d in zip(rc, shp):
            if sizes[col] is not None and sizes[col] != d:
                return None
            sizes[col] = d
        rows.append(rc)
    for _ in range(n_weights):
        rows.append(sorted(rng.sample(range(cols), rng.randint(1, cols))))
    if any(s is None for s in sizes):
        return None
    inc = np.zeros((len(rows), cols), dtype=bool)
    for r, rc in enumerate(rows):
        inc[r, rc] = True
    if not inc.any(axis=0).all() or inc.sum(axis=0).max() > c.c_a[1]:
        return None
    shapes = [tuple(sizes[col] for col in rc) for rc in rows]
    if any(math.prod(s) > c.max_elements for s in shapes[len(fixed):]):
        return None
    contracted = np.ones(cols, dtype=bool)
    contracted[out_cols] = False
    return Tom(inc, contracted, shapes)


def _sample_row(rng: random.Random, c: SampleConstraints, fixed, n_weights, shapes: _Shapes, out_shape=None):
    target = out_shape
    for draw in range(c.budget):
        if out_shape is None and draw % 100 == 0:
            target = shapes.draw(rng)
        tom = _draw_tom(rng, c, fixed, n_weights, target)
        if tom is not None:
            return tom
    raise SamplingTimeout(f"no compatible TOM within {c.budget} draws")


def _attempt(rng, c: SampleConstraints, shapes: _Shapes) -> Tem | None:
    fast = random.Random(int(rng.integers(2**63)))
    c_op = int(rng.integers(c.c_op[0], c.c_op[1] + 1))
    tem = Tem([TensorCol("X", "input", c.input_shape)], [])
    available = ["X"]
    pending = ["X"]
    n_w = 0
    for r in range(c_op):
        alpha = int(rng.integers(c.c_alpha[0], c.c_alpha[1] + 1))
        required = list(pending)
        if len(required) > alpha:
            return None
        optional = [x for x in available if x not in required]
        room = min(len(optional), alpha - len(required))
        extra = int(rng.integers(0, room + 1))
        picks = list(rng.choice(optional, size=extra, replace=False)) if extra else []
        fixed = required + [str(p) for p in picks]
        order = rng.permutation(alpha)
        names: list = [None] * alpha
        weights = []
        for slot, name in zip(order[: len(fixed)], fixed):
            names[slot] = name
        for slot in order[len(fixed):]:
            n_w += 1
            names[slot] = f"W{n_w}"
            weights.append(slot)
        fixed_slots = [int(s) for s in order[: len(fixed)]]
        last = r == c_op - 1
        try:
            tom = _sample_row(
                fast, c, [tem.tensor(names[s]).shape for s in fixed_slots], len(weights), shapes,
                c.output_shape if last else None,
            )
        except SamplingTimeout:
            if c.output_shape is not None and last:
                raise
            return None
        # _draw_tom lists fixed rows first; permute rows to the operand order
        row_of = fixed_slots + [int(s) for s in weights]
        perm = np.argsort(row_of)
        tom = Tom(tom.incidence[perm], tom.contracted, [tom.shapes[i] for i in perm])
        for slot in weights:
            tem.tensors.append(TensorCol(names[slot], "weight", tom.shapes[slot]))
        out = "Y" if last else f"Z{r + 1}"
        tem.tensors.append(TensorCol(out, "output" if last else "intermediate", tom.output_shape()))
        tem.rows.append(OpRow(Tom(tom.incidence, tom.contracted), names, out))
        pending = [x for x in pending if x not in fixed] + [out]
        available.append(out)
    sig = signature(tem)
    if not (c.c_t[0] <= sig.c_t <= c.c_t[1] and c.c_a[0] <= sig.c_a <= c.c_a[1]):
        return None
    return tem


def sample_architecture(c: SampleConstraints, s) -> Tem:
    """Draw one block whose signature lies inside every range of ``c``."""
    rng = _seed(s).rng()
    P = int(np.prod(c.input_shape))
    divs = _divisors(P)
    if not divs:
        raise SamplingError("input shape has no integer factors above 1")
    shapes = _Shapes(divs, c.max_elements)
    for _ in range(c.max_attempts):
        tem = _attempt(rng, c, shapes)
        if tem is not None:
            return tem
    raise SamplingTimeout(f"no architecture met the constraints in {c.max_attempts} attempts")


def insert_activations(a: Tem, s) -> Tem:
    """Follow each op row with zero (p=.5), one (.25) or two (.25) activations."""
    rng = _seed(s).rng()
    rows = []
    for row in a.rows:
        rows.append(row)
        if not isinstance(row, OpRow):
            continue
        u = rng.random()
        count = 0 if u < 0.5 else (1 if u < 0.75 else 2)
        order = len(a.tensor(row.output).shape)
        for _ in range(count):
            kind = str(rng.choice(ACTIVATION_POOL))
            axis = [int(rng.integers(0, order))] if kind in AXIS_KINDS else None
            rows.append(ActRow(kind, row.output, axis))
    return Tem(list(a.tensors), rows, a.notes)


def sample_record(c: SampleConstraints, seed: int) -> dict:
    tem = insert_activations(sample_architecture(c, seed), seed)
    return {
        "seed": int(seed),
        "generator": GENERATOR,
        "signature": signature(tem).to_json(),
        "param_count": param_count(tem),
        "architecture": tem.to_json(),
    }


def emit_dataset(n: int, c: SampleConstraints, base_seed: int) -> Iterator[dict]:
    """Yield ``n`` records; a timed-out seed yields an error record instead."""
    for i in range(n):
        seed = base_seed + i
        try:
            yield sample_record(c, seed)
        except SamplingTimeout as exc:
            yield {"seed": seed, "generator": GENERATOR, "error": str(exc)}


def write_dataset(n: int, c: SampleConstraints, base_seed: int, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rec in enumerate(emit_dataset(n, c, base_seed)):
        if "error" in rec:
            entries.append({"seed": rec["seed"], "error": rec["error"]})
            continue
        name = f"arch_{i:05d}.json"
        (out / name).write_text(dumps(rec["architecture"]) + "\n")
        entries.append({"file": name, "seed": rec["seed"], "signature": rec["signature"], "param_count": rec["param_count"]})
    manifest = {"generator": GENERATOR, "base_seed": base_seed, "constraints": c.to_json(), "records": entries}
    (out / "manifest.json").write_text(dumps(manifest) + "\n")
    return manifest


def within(sig, c: SampleConstraints) -> bool:
    return (
        c.c_op[0] <= sig.c_op <= c.c_op[1]
        and c.c_t[0] <= sig.c_t <= c.c_t[1]
        and c.c_alpha[0] <= sig.c_alpha <= c.c_alpha[1]
        and c.c_a[0] <= sig.c_a <= c.c_a[1]
        and 2 <= sig.c_o <= c.c_o_max
    )
