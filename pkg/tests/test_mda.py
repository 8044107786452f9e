import numpy as np
import pytest

from hccnet.mda import Mda, ModeError, ShapeError, broadcast, reduce, slice_space


def test_pixel_slices():
    img = Mda.from_array(np.arange(4 * 5 * 3).reshape(4, 5, 3))
    ss = slice_space(img, [2])
    assert len(ss) == 20
    assert ss[(1, 2)].shape == (3,)
    assert ss[(1, 2)].scalars().tolist() == img.scalars()[1, 2].tolist()


def test_inner_all_modes_is_whole():
    t = Mda.from_array(np.arange(6).reshape(2, 3))
    ss = slice_space(t, [0, 1])
    assert len(ss) == 1 and ss[()].allclose(t)


def test_row_slices_reassemble():
    t = Mda.from_array(np.arange(6.0).reshape(2, 3))
    ss = slice_space(t, [1])
    assert len(ss) == 2
    assert ss.reassemble().allclose(t)


def test_bad_modes():
    with pytest.raises(ModeError):
        slice_space(Mda.from_array(np.zeros((2, 2))), [2])


def test_broadcast_identity():
    t = Mda.from_array(np.arange(4.0).reshape(2, 2))
    assert broadcast(t, (2, 2), [0, 1]).allclose(t)


def test_broadcast_vector_to_columns():
    v = Mda.from_array(np.array([1.0, 2.0, 3.0]))
    b = broadcast(v, (3, 4), [0]).scalars()
    assert b.shape == (3, 4)
    assert all((b[:, k] == [1, 2, 3]).all() for k in range(4))


def test_matmul_operands_broadcast_into_cube():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    # grid (i, j, k); A on (i, j), B on (j, k)
    ba = broadcast(Mda.from_array(a), (2, 2, 2), [0, 1]).scalars()
    bb = broadcast(Mda.from_array(b), (2, 2, 2), [1, 2]).scalars()
    for i, j, k in np.ndindex(2, 2, 2):
        assert ba[i, j, k] == a[i, j] and bb[i, j, k] == b[j, k]
    prod = Mda.from_array(ba * bb)
    assert reduce(prod, [1], np.add).scalars().tolist() == (a @ b).tolist()


def test_broadcast_size_mismatch():
    with pytest.raises(ShapeError):
        broadcast(Mda.from_array(np.zeros(3)), (4, 2), [0])


def test_reduce_empty_modes():
    t = Mda.from_array(np.arange(4.0).reshape(2, 2))
    assert reduce(t, [], np.add) is t


def test_reduce_skips_absent():
    t = Mda.from_array(np.array([[1.0, 2.0], [3.0, 0.0]]), present=[[1, 1], [1, 0]])
    assert reduce(t, [1], np.add).scalars().tolist() == [3.0, 3.0]
    empty = Mda.from_array(np.zeros((2, 2)), present=[[1, 1], [0, 0]])
    assert reduce(empty, [1], np.add).present.tolist() == [True, False]


def test_lengths_and_trim():
    t = Mda.from_array(np.zeros((4, 4)), present=[[0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0]])
    assert t.lengths() == (2, 2)
    assert t.trim().shape == (2, 2)


def test_hyper_cells():
    t = Mda.from_cells((2,), {(0,): [1.0, 2.0], (1,): [3.0]})
    assert t.is_hyper() and t.regularity() is None
    assert t.cell((0,)) == (1.0, 2.0)


def test_json_round_trip_with_mask():
    t = Mda.from_array(np.array([[1.5, 2.0], [0.1, 0.0]]), present=[[1, 1], [1, 0]])
    again = Mda.from_json(t.to_json())
    assert again.allclose(t)
    assert again.dumps() == t.dumps()
    assert '"mask":"1110"' in t.dumps()


def test_float_rendering_is_round_trip_exact():
    x = 0.1 + 0.2
    t = Mda.from_array(np.array([x, 1e-300, 3.0]))
    assert Mda.from_json(__import__("json").loads(t.dumps())).scalars().tolist() == [x, 1e-300, 3.0]
