"""Whole blocks: signatures of known architectures and sampled new ones."""
import numpy as np

from hccnet import fixtures
from hccnet.network import forward, param_count, signature
from hccnet.sampler import SampleConstraints, insert_activations, sample_architecture

print(f"{'block':<12} signature          reference")
for name, want in fixtures.REFERENCE_SIGNATURES.items():
    got = signature(fixtures.load(name)).as_tuple()
    print(f"{name:<12} {str(got):<18} {want}{'' if got == tuple(want) else '  <- differs'}")

star = fixtures.load("red_star")
trace = []
forward(star, {"X": np.zeros(star.tensor("X").shape)}, seed=0, trace=trace)
print("\nred-star block:", param_count(star), "parameters")
for _, name, shape in trace:
    print(" ", name, shape)

c = SampleConstraints()
for seed in range(3):
    tem = insert_activations(sample_architecture(c, seed), seed)
    print(f"\nsample {seed}: signature {signature(tem).as_tuple()}, {param_count(tem)} parameters")
    for row in tem.op_rows():
        print("  ", row.output, "=", tem.bound_tom(row).einsum_spec(), row.inputs)
