"""Somos-4 as a cluster algebra: one mutation, a relabelling, integer iterates."""

from __future__ import annotations

from clusterham.cluster import Seed, iterate_model, laurent_phenomenon_check, seed_mutate
from clusterham.exact import label
from clusterham.models import builtin_model, somos4_matrix
from clusterham.quiver import dump_quiver, matrix_mutate

B = somos4_matrix()
print(dump_quiver(B))

# mutate at x[1], then rename x[2..4, 1] -> x[1..4]: the quiver comes back
x = [label(i) for i in range(1, 5)]
shift = {x[0]: x[3], x[1]: x[0], x[2]: x[1], x[3]: x[2]}
print("closes up:", matrix_mutate(B, x[0]).relabel(shift).entries() == B.entries())

# the new cluster variable is the recurrence
seed = seed_mutate(Seed.initial(B), x[0])
print("x[5] =", seed.vars[x[0]].render())

# from four ones the sequence stays integral
tr = iterate_model(builtin_model("somos4"), {lab: 1 for lab in x}, 10)
print([str(v) for _, v in tr.produced])

# and symbolically every value is a Laurent polynomial
sym = iterate_model(builtin_model("somos4"), {lab: "sym" for lab in x}, 6)
print("laurent:", laurent_phenomenon_check(sym))
print("x[10] has", len(sym.produced[-1][1]), "terms")
