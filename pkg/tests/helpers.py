"""Shared generators for the differential tests."""
import numpy as np

from hccnet.mda import Mda
from hccnet.ops import Tom
from hccnet.oracle import OracleTensor, oracle_evaluate


def random_tom(rng, max_arity=4, max_cols=6, max_size=4, min_arity=1):
    while True:
        arity = int(rng.integers(min_arity, max_arity + 1))
        cols = int(rng.integers(1, max_cols + 1))
        inc = rng.random((arity, cols)) < 0.5
        if inc.any(axis=0).all() and inc.any(axis=1).all():
            break
    contracted = rng.random(cols) < 0.5
    sizes = rng.integers(1, max_size + 1, size=cols)
    shapes = [[int(sizes[c]) for c in np.flatnonzero(inc[r])] for r in range(arity)]
    return Tom(inc, contracted, shapes)


def random_operands(rng, tom):
    return [rng.standard_normal(s) for s in tom.shapes]


def oracle_value(tom, arrays, ops=None):
    out = oracle_evaluate(tom.to_json(), [OracleTensor.from_nested(a.tolist()) for a in arrays], ops)
    return np.array(out.nested(), dtype=float)


def engine_value(evaluate, tom, arrays, ops="mul_add", engine="auto"):
    return evaluate(tom, [Mda.from_array(a) for a in arrays], ops, engine).scalars().astype(float)
