"""
Compiling a small circuit
=========================

Parse a circuit, derive a vtree from a tree decomposition of its graph,
compile it both ways and count models exactly.
"""

from fractions import Fraction

from twsdd.analysis import model_count, verify, weighted_count
from twsdd.circuit import parse_circuit
from twsdd.compile import compile_dsnnf, compile_sdd, factor_width, fiw, sdw
from twsdd.vtree import derive_vtree, prune_to

# a majority of three written with shared and gates
circuit = parse_circuit("""
v 3
g0 input a
g1 input b
g2 input c
g3 and g0 g1
g4 and g0 g2
g5 and g1 g2
g6 or g3 g4 g5
out g6
""")
f = circuit.to_function()
print("models of the circuit:", f.model_count())

# the derived vtree carries dummy leaves for the decomposition's leaves;
# pruning keeps only the input variables
full, nice = derive_vtree(circuit)
tree = prune_to(full, f.vars)
print("decomposition width:", nice.width)
print("vtree:", tree.shape())

dsnnf = compile_dsnnf(f, tree, circuit.names)
sdd = compile_sdd(f, tree, circuit.names)
print(f"dsNNF size {dsnnf.size}, fiw {fiw(f, tree, dsnnf).value}")
print(f"SDD size {sdd.size}, sdw {sdw(f, tree, sdd).value}")
print("factor width:", factor_width(f, tree).value)

# both forms are deterministic and structured; the SDD also satisfies
# the three sentential decision conditions
print(verify(sdd, f).summary())

# exact counting straight off the compiled form
print("model count from the SDD:", model_count(sdd))
p = {v: Fraction(1, 3) for v in f.vars}
print("probability with each input true w.p. 1/3:", weighted_count(dsnnf, p))

print()
print(sdd.to_text())
