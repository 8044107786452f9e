import numpy as np
import pytest

from hccnet.mda import Mda
from hccnet.modemap import (
    ModeMap,
    ModeMapError,
    Mmc,
    compose,
    crop,
    flatten,
    noninjective_as_modemap,
    permute,
    reshape,
    shift,
    unfold,
    unfold_axis,
    verify_mode_map,
)


def _arr(shape):
    return Mda.from_array(np.arange(np.prod(shape), dtype=float).reshape(shape))


def test_unfold_small_bijective():
    m = unfold((1, 4, 4), (2, 2), (2, 2))
    assert m.target_shape == (1, 2, 2, 2, 2)
    assert len(m.target_index) == 16 and m.is_injective() and m.is_function()
    out = m.apply(_arr((1, 4, 4))).scalars()
    img = np.arange(16.0).reshape(1, 4, 4)
    for c, h, w, p, q in np.ndindex(out.shape):
        assert out[c, h, w, p, q] == img[c, 2 * h + p, 2 * w + q]
    assert verify_mode_map(m)["ok"]


def test_unfold_full_patch():
    m = unfold((3, 4, 5), (4, 5), (1, 1))
    assert m.target_shape == (3, 1, 1, 4, 5)


def test_unfold_overlapping_patches():
    m = unfold((3, 32, 32), (3, 3), (1, 1))
    assert m.target_shape[1:3] == (30, 30)
    assert not m.is_injective()


def test_identity_components_pass():
    n = 2
    idx = [list(ix) for ix in np.ndindex(n, n)]
    m = ModeMap((n, n), (n, n), idx, idx, [Mmc((0,), (0,)), Mmc((1,), (1,))])
    assert verify_mode_map(m)["ok"]


def test_transpose_with_wrong_pairing_fails():
    p = permute((2, 2), (1, 0))
    bad = ModeMap((2, 2), (2, 2), p.target_index, p.source_index, [Mmc((0,), (0,))])
    rep = verify_mode_map(bad)
    assert not rep["ok"] and rep["violations"][0]["source_slices"]


def test_flatten_row_major():
    out = flatten((2, 3)).apply(_arr((2, 3))).scalars()
    assert out.tolist() == [0, 1, 2, 3, 4, 5]


def test_permute_pointwise():
    x = _arr((2, 3, 4))
    out = permute((2, 3, 4), (2, 0, 1)).apply(x).scalars()
    assert out.shape == (4, 2, 3)
    assert np.array_equal(out, np.transpose(x.scalars(), (2, 0, 1)))


def test_reshape_keeps_flat_positions():
    out = reshape((4, 4), (2, 8)).apply(_arr((4, 4))).scalars()
    assert np.array_equal(out.ravel(), np.arange(16.0))


def test_crop_and_shift():
    x = _arr((4, 4))
    assert np.array_equal(crop((4, 4), (1, 1), (2, 2)).apply(x).scalars(), x.scalars()[1:3, 1:3])
    s = shift((3,), 0).apply(_arr((3,)))
    assert s.present.tolist() == [False, True, True]
    assert s.scalars(0.0).tolist() == [0.0, 0.0, 1.0]


def test_unfold_axis_windows():
    out = unfold_axis((2, 5), 1, 3).apply(_arr((2, 5))).scalars()
    assert out.shape == (2, 3, 3)
    assert out[1, 2].tolist() == [7.0, 8.0, 9.0]


def test_compose_matches_sequential():
    a, b = permute((2, 3), (1, 0)), flatten((3, 2))
    x = _arr((2, 3))
    assert compose(a, b).apply(x).allclose(b.apply(a.apply(x)))


def test_json_round_trip_all_kinds():
    maps = [unfold((1, 4, 4), (2, 2), (2, 2)), permute((2, 3), (1, 0)), flatten((2, 3)), reshape((4,), (2, 2)),
            crop((4,), (1,), (2,)), shift((3, 2), 1), unfold_axis((5,), 0, 2)]
    for m in maps:
        again = ModeMap.from_json(m.to_json())
        assert np.array_equal(again.target_index, m.target_index)
    custom = ModeMap((2,), (2,), [[1], [0]], [[0], [1]], [Mmc((0,), (0,))])
    assert ModeMap.from_json(custom.to_json()).to_json() == custom.to_json()
    with pytest.raises(ModeMapError):
        ModeMap.from_json({"kind": "warp"})


def test_collapsing_duplicates():
    m = Mda.from_array(np.array([["x", "x"], ["y", "x"]], dtype=object))
    _, vec, mm = noninjective_as_modemap(m)
    assert vec.scalars().tolist() == ["x", "y"]
    assert int((mm.source_index[:, 0] == 0).sum()) == 3
    assert mm.apply(vec).scalars().tolist() == m.scalars().tolist()


def test_injective_input_gives_bijection():
    _, vec, mm = noninjective_as_modemap(_arr((2, 3)))
    assert vec.shape == (6,) and mm.is_injective() and mm.is_function()


def test_forced_duplicates_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        vals = rng.integers(0, 4, size=(3, 4)).astype(float)
        m = Mda.from_array(vals)
        _, vec, mm = noninjective_as_modemap(m)
        assert mm.apply(vec).allclose(m)
