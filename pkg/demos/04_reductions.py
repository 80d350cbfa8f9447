"""Two-dimensional models as reductions of the Hirota-Miwa quivers."""

from __future__ import annotations

from clusterham.errors import ReductionMismatch
from clusterham.models import REDUCTIONS, builtin_model, reduce_model, reduction_spec

for source, direction in sorted(REDUCTIONS):
    spec = reduction_spec(source, direction)
    try:
        red = reduce_model(source, direction)
    except ReductionMismatch as err:
        print(source, direction, "mismatch", err.diff[:3])
        continue
    print(f"{source} along {direction} ({spec.identification}) -> {spec.target}")
    print("   ", red.lattice.rules == builtin_model(spec.target).lattice.rules)
