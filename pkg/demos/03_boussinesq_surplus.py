"""Boussinesq: the solver finds more Hamiltonian directions than expected.

The a0 family is there, but so are b0 (a period-4 bend in f) and a
direction linear in q.  Each one passes the ideal test on its own.
"""

from __future__ import annotations

from clusterham.models import builtin_model
from clusterham.poisson import ideal_stability_check
from clusterham.solver import (
    classify_hamiltonian_rank,
    coordinates_text,
    family_coordinates,
    stabilize_across_windows,
)

m = builtin_model("boussinesq")
for note in m.notes:
    print("note:", note)

for relations in ("derived", "printed"):
    fam = stabilize_across_windows(m, [(-12, 12), (-16, 16)], 2, relations)
    print(f"{relations}: dimension {fam.dimension}")
    for P, c in zip(fam.basis, family_coordinates(fam, m)):
        ok = ideal_stability_check(P, m, [(-12, 12), (-12, 12)]).holds
        print("  ", coordinates_text(m, c), "hamiltonian" if ok else "not hamiltonian")
    print("  ", classify_hamiltonian_rank(fam, m).lines()[0])
