"""Hamiltonian structures of discrete KdV, checked and then rediscovered."""

from __future__ import annotations

from fractions import Fraction

from clusterham.exact import label
from clusterham.models import builtin_model, model_periodicity
from clusterham.poisson import compatibility_check, ideal_stability_check, kdv_bracket, pencil_check
from clusterham.quiver import materialize_window
from clusterham.solver import classify_hamiltonian_rank, coordinates_text, family_coordinates, stabilize_across_windows

m = builtin_model("kdv-a")
print(m.equation_text())

# the window quiver is periodic: one composite step is a relabelling
for line in model_periodicity(m, (-12, 12)).lines():
    print(line)

# a member of the two-parameter family: a0 times the linear part plus q1
P = kdv_bracket(a0=Fraction(1, 2), q={1: 3})
W = materialize_window(m.stencil, -15, 15)
lo, hi = m.stencil.interior(-15, 15)
res = compatibility_check(P, W, [label(i) for i in range(lo, hi + 1)], lambda lab: m.var_map(lab.coords[0]))
print("PB vanishes on the interior:", res.zero)
print(ideal_stability_check(P, m, [(-12, 12), (-12, 12)]).lines()[0])

# a pencil of two of them
rep = pencil_check(kdv_bracket(a0=1), kdv_bracket(q={1: 1}), m, [0, 1, -2, 7], [(-12, 12), (-12, 12)])
print(rep.certificate)

# now forget the closed form and solve for every compatible invariant bracket
fam = stabilize_across_windows(m, [(-10, 10), (-14, 14)], 3)
for line in fam.lines()[:3]:
    print(line)
for c in family_coordinates(fam, m):
    print(" ", coordinates_text(m, c))
print(classify_hamiltonian_rank(fam, m).lines()[0])
