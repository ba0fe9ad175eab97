"""
Rank floors for disjointness and the H family
=============================================

The rank of a communication matrix lower-bounds the number of rectangles in
any disjoint cover, and a compiled form yields such a cover at every vtree
node.  Disjointness shows the rank is full; the first H function shows the
floor forcing exponential size under a separating vtree.
"""

from twsdd.analysis import comm_rank, disjointness
from twsdd.querylab import experiment_csv, hardness_experiment

for n in range(1, 9):
    f, X, Y = disjointness(n)
    print(f"disjointness n={n}: rank {comm_rank(f, X, Y)} of {2 ** n}")

# every H^i compiled under the shared vtree, checked at the cut between
# its two variable blocks
rows = hardness_experiment(1, [2, 3, 4])
print()
print(experiment_csv(rows), end="")

# the balance argument picks its own cut and works on any vtree
rows = hardness_experiment(1, [3, 4], auto_select=True)
print()
for r in rows:
    print(f"n={r['n']} H^{r['i']}: node {r['node']}, cover {r['cover']} >= floor {r['floor']}")
