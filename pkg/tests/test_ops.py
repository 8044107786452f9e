import numpy as np
import pytest

from helpers import engine_value, oracle_value, random_operands, random_tom
from hccnet.mda import Mda
from hccnet.modemap import unfold
from hccnet.ops import (
    AlgebraError,
    ArityError,
    CouplingError,
    PreconditionError,
    SetSemanticsError,
    Tom,
    build_hyper,
    decompose_arity,
    decompose_to_binary,
    evaluate,
    evaluate_chain,
    merge_ops,
    tom_complexity,
    validate_tom,
)
from hccnet.oracle import OracleTensor, oracle_evaluate

MATMUL = Tom.from_einsum("ij,jk->ik")
CONE = Tom.from_einsum("ipq,ipr,iqr->pqr")
FISH = Tom.from_einsum("ijp,pqr,qrk->ijk")
RED_STAR_OP = Tom.from_einsum("ln,jkno,ikmno,ijlm->in")


def _m(a, present=None):
    return Mda.from_array(np.asarray(a, dtype=float), present)


# -- validation ----------------------------------------------------------------

def test_matmul_shapes_validate():
    assert validate_tom(MATMUL, [_m(np.ones((2, 3))), _m(np.ones((3, 4)))])["ok"]
    rep = validate_tom(MATMUL, [_m(np.ones((2, 3))), _m(np.ones((4, 5)))])
    assert not rep["ok"] and "column 1" in rep["errors"][0]


JAG_A = ([[1, 2], [3, 0]], [[1, 1], [1, 0]])
JAG_B = ([[5, 6], [0, 8]], [[1, 1], [0, 1]])


def test_jagged_matmul_validates():
    assert validate_tom(MATMUL, [_m(*JAG_A), _m(*JAG_B)])["ok"]


def test_jagged_matmul_value():
    out = evaluate(MATMUL, [_m(*JAG_A), _m(*JAG_B)], engine="auto")
    assert out.scalars().tolist() == [[7.0, 22.0], [15.0, 26.0]]
    ref = oracle_evaluate(
        MATMUL.to_json(),
        [OracleTensor.from_nested(JAG_A[0], JAG_A[1]), OracleTensor.from_nested(JAG_B[0], JAG_B[1])],
    )
    assert ref.nested() == [[7.0, 22.0], [15.0, 26.0]]


def test_from_einsum_conflicting_orders():
    with pytest.raises(ValueError):
        Tom.from_einsum("ij,ji->ij")


# -- hyper-tensors -------------------------------------------------------------

def _symbols(prefix, shape):
    arr = np.empty(shape, dtype=object)
    for ix in np.ndindex(shape):
        arr[ix] = prefix + "".join(map(str, ix))
    return Mda.from_array(arr)


def test_matmul_hyper_is_two_regular():
    hyper, contracted = build_hyper(MATMUL, [_symbols("a", (2, 2)), _symbols("b", (2, 2))])
    assert hyper.shape == (2, 2, 2) and hyper.regularity() == 2
    assert contracted == (1,)
    assert hyper.cell((0, 1, 0)) == ("a01", "b10")


def test_unary_hyper_is_input():
    x = _symbols("x", (2, 3))
    hyper, _ = build_hyper(Tom.from_einsum("ij->ij"), [x])
    assert all(hyper.cell(ix) == (x.scalars()[ix],) for ix in np.ndindex(2, 3))


def test_cone_hyper_tuples():
    ops = [_symbols(p, (2, 2, 2)) for p in ("x", "y", "z")]
    hyper, _ = build_hyper(CONE, ops)
    for i, p, q, r in np.ndindex(2, 2, 2, 2):
        assert hyper.cell((i, p, q, r)) == (f"x{i}{p}{q}", f"y{i}{p}{r}", f"z{i}{q}{r}")


# -- evaluation ------------------------------------------------------------------

def test_cone_all_ones():
    out = evaluate(CONE, [_m(np.ones((2, 2, 2)))] * 3, engine="general")
    assert (out.scalars() == 2).all()


def test_matmul_value():
    out = evaluate(MATMUL, [_m([[1, 2], [3, 4]]), _m([[5, 6], [7, 8]])], engine="general")
    assert out.scalars().tolist() == [[19, 22], [43, 50]]


def test_tropical_matmul():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
    want = np.array([[min(a[i, k] + b[k, j] for k in range(4)) for j in range(2)] for i in range(3)])
    assert np.allclose(evaluate(MATMUL, [_m(a), _m(b)], "add_min").scalars(), want, atol=1e-12)


def test_engines_agree():
    rng = np.random.default_rng(2)
    for _ in range(30):
        t = random_tom(rng)
        xs = random_operands(rng, t)
        g = engine_value(evaluate, t, xs, engine="general")
        e = engine_value(evaluate, t, xs, engine="einsum")
        assert np.allclose(g, e, atol=1e-9)


def test_engine_against_oracle_random():
    rng = np.random.default_rng(3)
    for _ in range(40):
        t = random_tom(rng)
        xs = random_operands(rng, t)
        assert np.abs(engine_value(evaluate, t, xs) - oracle_value(t, xs)).max() <= 1e-9


def test_named_operations_against_direct_loops():
    rng = np.random.default_rng(4)
    n = 3
    x1, x2, x3 = (rng.standard_normal((n, n, n)) for _ in range(3))
    cone = np.zeros((n, n, n))
    fish = np.zeros((n, n, n))
    for p, q, r, i in np.ndindex(n, n, n, n):
        cone[p, q, r] += x1[i, p, q] * x2[i, p, r] * x3[i, q, r]
    for i, j, k, p, q, r in np.ndindex(*(n,) * 6):
        fish[i, j, k] += x1[i, j, p] * x2[p, q, r] * x3[q, r, k]
    for t, want in ((CONE, cone), (FISH, fish)):
        for engine in ("general", "einsum"):
            assert np.abs(engine_value(evaluate, t, [x1, x2, x3], engine=engine) - want).max() <= 1e-9


def test_conv_via_unfold():
    rng = np.random.default_rng(5)
    c, h, w, o, ph = 2, 4, 4, 3, 2
    img, ker = rng.standard_normal((c, h, w)), rng.standard_normal((o, c, ph, ph))
    patches = unfold((c, h, w), (ph, ph), (1, 1)).apply(_m(img))
    out = evaluate(Tom.from_einsum("chwpq,ocpq->ohw"), [patches, _m(ker)]).scalars()
    want = np.zeros((o, h - ph + 1, w - ph + 1))
    for oo, y, x in np.ndindex(want.shape):
        want[oo, y, x] = sum(
            img[cc, y + p, x + q] * ker[oo, cc, p, q] for cc in range(c) for p in range(ph) for q in range(ph)
        )
    assert np.abs(out - want).max() <= 1e-9


def test_precondition_failure():
    with pytest.raises(PreconditionError):
        evaluate(MATMUL, [_m(np.ones((2, 3))), _m(np.ones((2, 3)))], engine="general")


# -- decomposition and merging ------------------------------------------------

def test_complexities():
    assert tom_complexity(CONE) == (3, 4, 3)
    assert tom_complexity(MATMUL) == (2, 3, 2)
    assert tom_complexity(RED_STAR_OP) == (4, 7, 3)


def test_fish_splits_into_two_matmul_like_ops():
    s1, s2 = decompose_arity(FISH)
    assert s1.einsum_spec().count(",") == 1 and s2.arity == 2
    assert tom_complexity(s1) == (2, 5, 2)


def test_cone_chain_matches():
    rng = np.random.default_rng(6)
    xs = [rng.standard_normal((2, 2, 2)) for _ in range(3)]
    chain = decompose_to_binary(CONE)
    assert len(chain) == 2
    got = evaluate_chain(chain, [_m(x) for x in xs]).scalars()
    assert np.abs(got - engine_value(evaluate, CONE, xs)).max() <= 1e-9


def test_red_star_op_three_step_chain():
    rng = np.random.default_rng(7)
    sizes = dict(i=2, j=3, k=2, l=3, m=2, n=2, o=3)
    t = Tom.from_einsum("ln,jkno,ikmno,ijlm->in", sizes)
    xs = [rng.standard_normal(s) for s in t.shapes]
    chain = decompose_to_binary(t)
    assert len(chain) == 3
    got = evaluate_chain(chain, [_m(x) for x in xs]).scalars()
    assert np.abs(got - oracle_value(t, xs)).max() <= 1e-9


def test_binary_and_ternary_split_counts():
    assert decompose_to_binary(MATMUL) == [MATMUL]
    with pytest.raises(ArityError):
        decompose_arity(MATMUL)
    assert len(decompose_to_binary(CONE)) == 2


def test_non_distributive_refused():
    with pytest.raises(AlgebraError):
        decompose_arity(CONE, "max_add")


def test_attention_merge():
    q = Tom.from_einsum("ij,jk->ik")
    s = Tom.from_einsum("ik,lk->il")
    merged = merge_ops(q, s, 0)
    assert merged.arity == 3 and tom_complexity(merged) == (3, 4, 2)
    rng = np.random.default_rng(8)
    x, wq, k = rng.standard_normal((3, 4)), rng.standard_normal((4, 2)), rng.standard_normal((5, 2))
    got = engine_value(evaluate, merged, [x, wq, k], engine="general")
    assert np.abs(got - (x @ wq) @ k.T).max() <= 1e-9
    chain = decompose_to_binary(merged)
    assert len(chain) == 2
    back = evaluate_chain(chain, [_m(x), _m(wq), _m(k)]).scalars()
    assert np.abs(back - got).max() <= 1e-9


def test_merge_with_identity():
    merged = merge_ops(MATMUL, Tom.from_einsum("ij->ij"), 0)
    assert np.array_equal(merged.incidence, MATMUL.incidence)
    assert np.array_equal(merged.contracted, MATMUL.contracted)


def test_merge_errors():
    with pytest.raises(CouplingError):
        merge_ops(Tom.from_einsum("ij,j->i"), MATMUL, 0)
    with pytest.raises(SetSemanticsError):
        merge_ops(MATMUL, MATMUL, 0, names=(["X", "W"], ["Z", "X"]))


def test_merge_then_decompose_random():
    rng = np.random.default_rng(9)
    pairs = [("ij,jk->ik", "ik,kl->il", 0), ("ij,jk->ik", "ab,ik->ab", 1), ("ijk,k->ij", "ij,jl->il", 0)]
    for spec1, spec2, bind in pairs:
        t1, t2 = Tom.from_einsum(spec1), Tom.from_einsum(spec2)
        merged = merge_ops(t1, t2, bind)
        dims = 3
        sized = merged.with_shapes([[dims] * int(r.sum()) for r in merged.incidence])
        xs = [rng.standard_normal(s) for s in sized.shapes]
        direct = engine_value(evaluate, sized, xs, engine="general")
        chain = decompose_to_binary(sized)
        assert np.abs(evaluate_chain(chain, [_m(x) for x in xs]).scalars() - direct).max() <= 1e-9


def test_json_round_trip():
    t = Tom.from_einsum("ipq,ipr,iqr->pqr", dict(i=2, p=2, q=3, r=2))
    assert Tom.from_json(t.to_json()).to_json() == t.to_json()
