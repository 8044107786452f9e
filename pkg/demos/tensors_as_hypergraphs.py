"""From arrays to hypergraphs and back.

A 2x2x2 array of symbols becomes a partitioned, weakly ordered hypergraph:
one hyperedge per 1-slice, grouped by mode. The consistency check assigns
multi-indices from any origin; a complex whose cycles disagree gets a
witness instead.
"""
import numpy as np

from hccnet import fixtures
from hccnet.mda import Mda
from hccnet.pwohg import assign_multi_indices, canonical_representative, check_socc, gt_from_mda, mda_from_gt

arr = np.array([[["A", "E"], ["C", "G"]], [["B", "F"], ["D", "H"]]], dtype=object)
g = gt_from_mda(Mda.from_array(arr)).pwohg
for mode in g.modes:
    print(mode.name, [[sorted(c)[0] for c in e.classes] for e in mode.edges])

print("consistent:", check_socc(g)["consistent"])
coords = assign_multi_indices(g, "A").normalized()
print("H sits at", coords[frozenset("H")])

bad = fixtures.load("degenerate")
rep = check_socc(bad)
print("degenerate complex consistent:", rep["consistent"], "witness:", rep["witness"])

split = fixtures.load("split_edge")
merged = canonical_representative(split)
print("split edges merged:", [[sorted(c)[0] for c in e.classes] for e in merged.modes[0].edges])

print("back to an array:\n", mda_from_gt(g).scalars())
