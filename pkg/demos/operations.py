"""Tensor operations as incidence matrices.

A TOM lists which modes each operand touches and which are summed. The
same matrix evaluates under any pair of base operations, splits into a
chain of binary operations when the pair is distributive, and merges with
its neighbours into higher-arity operations.
"""
import numpy as np

from hccnet.mda import Mda
from hccnet.ops import Tom, decompose_to_binary, evaluate, evaluate_chain, merge_ops, tom_complexity

matmul = Tom.from_einsum("ij,jk->ik")
a = Mda.from_array(np.array([[1.0, 2.0], [3.0, 4.0]]))
b = Mda.from_array(np.array([[5.0, 6.0], [7.0, 8.0]]))
print("matmul:\n", evaluate(matmul, [a, b]).scalars())
print("min-plus:\n", evaluate(matmul, [a, b], "add_min").scalars())

# absent entries are skipped, so jagged operands are fine
ja = Mda.from_array([[1, 2], [3, 0]], present=[[1, 1], [1, 0]])
jb = Mda.from_array([[5, 6], [0, 8]], present=[[1, 1], [0, 1]])
print("jagged matmul:\n", evaluate(matmul, [ja, jb]).scalars())

cone = Tom.from_einsum("ipq,ipr,iqr->pqr")
print("cone product (arity, order, coupling):", tom_complexity(cone))
rng = np.random.default_rng(0)
xs = [Mda.from_array(rng.standard_normal((2, 2, 2))) for _ in range(3)]
chain = decompose_to_binary(cone)
print("binary chain:", [t.einsum_spec() for t in chain])
diff = np.abs(evaluate_chain(chain, xs).scalars() - evaluate(cone, xs).scalars()).max()
print("chain vs direct:", diff)

attention = merge_ops(Tom.from_einsum("ij,jk->ik"), Tom.from_einsum("ik,lk->il"), 0)
print("(X W_Q) K^T as one op:", attention.einsum_spec(), tom_complexity(attention))
