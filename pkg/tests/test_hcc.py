import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hccnet.fixtures import cube_gt
from hccnet.hcc import Hcc, RankError, is_partition, restrict, transversals
from hccnet.pwohg import encode_rank3


def test_restrict_cube_to_elements():
    h, top = encode_rank3(cube_gt())
    cells = restrict(h, h.cell(top), 0)
    assert sorted(h.label_of(c) for c in cells) == list("ABCDEFGH")


def test_restrict_single_one_cell():
    h = Hcc("AB")
    one = h.add_set("AB")
    assert {h.label_of(c) for c in restrict(h, one, 0)} == {"A", "B"}


def test_restrict_two_by_two_level_one():
    # rows [A,B],[C,D]; columns [A,C],[B,D]; suffix encoding adds {B},{D},{C},{D}
    from hccnet.pwohg import gt_from_mda
    import numpy as np

    g = gt_from_mda(np.array([[1, 2], [3, 4]]))
    ones = restrict(g.hcc, g.hcc.cell(g.top), 1)
    sets = {frozenset(g.hcc.elements_of(c)) for c in ones}
    assert {frozenset({1, 2}), frozenset({3, 4}), frozenset({1, 3}), frozenset({2, 4})} <= sets
    assert {frozenset({2}), frozenset({4}), frozenset({3})} <= sets


def test_mixed_rank_children_rejected():
    h = Hcc("ABC")
    one = h.add_set("AB")
    with pytest.raises(RankError):
        h.add_cell([one, h.element("C")])


def test_hash_consing_gives_one_handle():
    h = Hcc("AB")
    assert h.add_set("AB").handle == h.add_set("BA").handle


def test_is_partition_cases():
    assert is_partition([{"A", "B"}, {"C", "D"}], {"A", "B", "C", "D"})
    assert not is_partition([{"A", "B"}, {"B", "C"}], {"A", "B", "C"})
    assert is_partition([], set())


def test_transversals_examples():
    ts = set(transversals([{"A", "B"}, {"C", "D"}]))
    assert len(ts) == 4
    assert frozenset({"A", "D"}) in ts and frozenset({"B", "C"}) in ts
    assert list(transversals([{"A"}])) == [frozenset({"A"})]
    assert len(list(transversals([{1, 2}, {3, 4, 5}]))) == 6


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=4))
def test_transversal_count_is_product(sizes):
    parts, n = [], 0
    for s in sizes:
        parts.append(set(range(n, n + s)))
        n += s
    got = set(transversals(parts))
    assert got == {frozenset(t) for t in itertools.product(*parts)}


def test_restrict_is_union_over_children():
    h, top = encode_rank3(cube_gt())
    top_cell = h.cell(top)
    via_children = set()
    for c in h.children(top_cell):
        via_children |= {x.handle for x in restrict(h, c, 0)}
    assert {x.handle for x in restrict(h, top_cell, 0)} == via_children


def test_json_round_trip():
    h, top = encode_rank3(cube_gt())
    h2 = Hcc.from_json(h.to_json())
    assert h2.to_json() == h.to_json()
