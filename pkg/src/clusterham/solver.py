"""Exact linear solving for translation-invariant log-canonical brackets.

Unknowns are the coefficients ``p(x_r, x_{pm+r'})`` of a bracket invariant
under the index shift ``i -> i + p``; they are keyed ``(r, r', m)`` with the
skew partner ``(r', r, -m)`` folded onto one representative.

Rows come from three sources, all harvested only where every index involved
lies inside the window:

``PB``
    entries of ``P B = O``;
``R1`` / ``R2``
    invariance of the bracket under one step of the map: after the composite
    mutation the mutated coefficients must equal the relabelled ones (``R1``
    for the forward step, ``R2`` for its inverse);
``R3``
    the same invariance between two non-orbit vertices, ``p_ij = p_{i-1,j-1}``.

The solution space of the window system is projected onto the core unknowns
``|m| <= M`` so that far-away unknowns, which the window barely constrains,
do not masquerade as extra directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import WindowTooSmall
from .exact import VertexLabel, label
from .poisson import (
    Combination,
    OffsetTable,
    PoissonCoeffs,
    ideal_stability_check,
    pencil_check,
)

ZERO = Fraction(0)


@dataclass(frozen=True, order=True)
class CoefficientUnknown:
    """``p(x_r, x_{p*offset + r'})``; the pair ``(r', r, -offset)`` is its negative."""

    residue_i: int
    residue_j: int
    offset: int

    @property
    def skew_partner(self) -> "CoefficientUnknown":
        return CoefficientUnknown(self.residue_j, self.residue_i, -self.offset)

    def sort_key(self):
        return (abs(self.offset), self.offset, self.residue_i, self.residue_j)

    def render(self) -> str:
        return f"p({self.residue_i},{self.residue_j};{self.offset})"


def fold(p: int, i: int, j: int):
    """Map the index pair ``(i, j)`` to ``(unknown, sign)``; ``(None, 0)`` on the diagonal."""
    ki, r = divmod(i, p)
    kj, rr = divmod(j, p)
    m = kj - ki
    if m == 0 and r == rr:
        return None, 0
    if m > 0 or (m == 0 and r < rr):
        return CoefficientUnknown(r, rr, m), 1
    return CoefficientUnknown(rr, r, -m), -1


@dataclass
class ConstraintSystem:
    model_id: str
    window: tuple
    offsets: int
    relations: str
    unknowns: list
    rows: list  # list of {CoefficientUnknown: Fraction}
    provenance: list  # one string per row
    duplicates: int = 0

    def explain(self) -> list:
        out = [f"system {self.model_id} window={self.window[0]}:{self.window[1]} M={self.offsets} "
               f"relations={self.relations} rows={len(self.rows)} unknowns={len(self.unknowns)} "
               f"merged-duplicates={self.duplicates}"]
        for row, src in zip(self.rows, self.provenance):
            terms = " ".join(f"{'+' if v > 0 else '-'}{abs(v) if abs(v) != 1 else ''}{u.render()}"
                             for u, v in sorted(row.items(), key=lambda kv: kv[0].sort_key()))
            out.append(f"{src}: {terms} = 0")
        return out


def _window(window) -> tuple:
    if isinstance(window, int):
        return (-window, window)
    lo, hi = window
    return (int(lo), int(hi))


def _printed_rows(m):
    """Relation rows as displayed for the Boussinesq quiver (kept for comparison)."""
    if m.id != "boussinesq":
        raise ValueError("literal relation rows are only tabulated for the boussinesq model")

    def first(i, k):
        if i % 4 in (1, 2, 3):
            return [(1, (i, 4 * k - 3)), (1, (i, 4 * k - 1)), (-1, (i, 4 * k)), (-1, (i - 1, 4 * k - 1))]
        return None

    def second(i, k):
        if i % 4 in (0, 1, 2):
            return [(1, (i, 4 * k)), (1, (i, 4 * k + 2)), (-1, (i, 4 * k - 1)), (-1, (i + 1, 4 * k))]
        return None

    return [("L1", first), ("L2", second)]


def build_constraint_system(m, window, offsets: int, relations: str = "derived") -> ConstraintSystem:
    """Generate the constraint rows for ``m`` on the index window.

    ``relations`` is ``"derived"`` (rows obtained from the mutation rule),
    ``"printed"`` (the printed Boussinesq relation rows, in place of ``R1``/``R2``)
    or ``"none"`` (``PB = O`` alone).
    """
    if offsets < 1:
        raise ValueError("offset radius must be at least 1")
    s = m.stencil
    if s is None:
        raise ValueError(f"{m.id} has no index stencil")
    lo, hi = _window(window)
    p, w = s.period, s.band
    if hi - lo < 2 * w + 2 * p:
        raise WindowTooSmall(f"window {lo}:{hi} has an empty interior for band {w}, period {p}")
    sc = m.staircase
    inside = lambda *ix: all(lo <= i <= hi for i in ix)

    rows: list = []
    prov: list = []
    seen: dict = {}
    dup = 0

    def add(terms, src):
        nonlocal dup
        if not inside(*(k for _, pair in terms for k in pair)):
            return
        row: dict = {}
        for c, (i, j) in terms:
            u, sg = fold(p, i, j)
            if u is None:
                continue
            row[u] = row.get(u, ZERO) + c * sg
        row = {u: Fraction(v) for u, v in row.items() if v}
        if not row:
            return
        key = tuple(sorted(row.items()))
        neg = tuple(sorted((u, -v) for u, v in row.items()))
        if key in seen or neg in seen:
            dup += 1
            return
        seen[key] = len(rows)
        rows.append(row)
        prov.append(src)

    # (a) P B = O
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            terms = [(s.b(l, j), (i, l)) for l in range(j - w, j + w + 1) if s.b(l, j)]
            if terms:
                add(terms, f"PB row={i} col={j}")

    # (b) mutation relations
    orbit_row = s.row(s.orbit_residue)
    if relations == "derived" and orbit_row:
        step = m.step
        shift = m.lattice.shift
        last = p - 1
        for c in range(lo, hi + 1):
            if c % p == s.orbit_residue:
                outs = [c + d for d, v in orbit_row.items() if v > 0]
                t = m.index_shift(c)
                for i in range(lo, hi + 1):
                    if i % p != s.orbit_residue:
                        add([(1, (i, o)) for o in outs] + [(-1, (i, c)), (-1, (m.index_shift(i), t))],
                            f"R1 i={i} c={c}")
            if c % p == last:
                outs = [c + d for d, v in s.row(last).items() if v > 0]
                l, n = sc.site(c)
                t = sc.index((l - step[0] + shift[0], n - step[1] + shift[1]))
                if t is None:
                    continue
                for i in range(lo, hi + 1):
                    if i % p != last:
                        add([(1, (i, o)) for o in outs] + [(-1, (i, c)), (-1, (i + 1, t))],
                            f"R2 i={i} c={c}")
    elif relations == "printed":
        for tag, fn in _printed_rows(m):
            for i in range(lo, hi + 1):
                for k in range(lo // p - 2, hi // p + 3):
                    t = fn(i, k)
                    if t:
                        add(t, f"{tag} i={i} k={k}")
    elif relations not in ("derived", "none"):
        raise ValueError(f"unknown relation set {relations!r}")

    # (b') invariance between non-orbit vertices
    if relations != "none" and orbit_row:
        for i in range(lo, hi + 1):
            for j in range(lo, hi + 1):
                if i % p != s.orbit_residue and j % p != s.orbit_residue:
                    add([(1, (i, j)), (-1, (m.index_shift(i), m.index_shift(j)))], f"R3 i={i} j={j}")

    core = core_unknowns(p, offsets)
    unknowns = sorted(set(core) | {u for r in rows for u in r}, key=CoefficientUnknown.sort_key)
    return ConstraintSystem(m.id, (lo, hi), offsets, relations, unknowns, rows, prov, dup)


def core_unknowns(p: int, M: int) -> list:
    out = []
    for mm in range(0, M + 1):
        for r in range(p):
            for rr in range(p):
                if mm == 0 and r >= rr:
                    continue
                out.append(CoefficientUnknown(r, rr, mm))
    return sorted(out, key=CoefficientUnknown.sort_key)


# ---------------------------------------------------------------------------
# exact elimination


def rref(rows: Sequence[dict], columns: Sequence) -> tuple:
    """Reduced row echelon form of sparse rows over ``Fraction``.

    Columns are processed left to right; the pivot in each column is the
    remaining row with the smallest absolute entry (earliest row on ties).
    Returns ``(reduced_rows, pivot_columns)``.
    """
    work = [dict(r) for r in rows if r]
    pivots = []
    done = []
    for col in columns:
        cands = [(abs(r[col]), idx) for idx, r in enumerate(work) if r.get(col)]
        if not cands:
            continue
        _, idx = min(cands)
        prow = work.pop(idx)
        inv = 1 / prow[col]
        prow = {c: v * inv for c, v in prow.items()}
        for r in work + done:
            f = r.get(col)
            if f:
                for c, v in prow.items():
                    nv = r.get(c, ZERO) - f * v
                    if nv:
                        r[c] = nv
                    else:
                        r.pop(c, None)
        done.append(prow)
        pivots.append(col)
    return done, pivots


def nullspace(rows: Sequence[dict], columns: Sequence) -> list:
    """Basis of ``{v : row . v = 0}`` as dicts over ``columns``."""
    red, piv = rref(rows, columns)
    pivset = set(piv)
    basis = []
    for free in columns:
        if free in pivset:
            continue
        v = {free: Fraction(1)}
        for r, pc in zip(red, piv):
            x = r.get(free)
            if x:
                v[pc] = -x
        basis.append(v)
    return basis


RHS = "rhs"


def solve_affine(rows: Sequence[dict], columns: Sequence) -> list | None:
    """Solutions of ``row . v = row[RHS]`` as ``[particular, *homogeneous]``.

    Returns ``None`` when the system is inconsistent.
    """
    red, piv = rref(rows, list(columns) + [RHS])
    if RHS in piv:
        return None
    part = {pc: r[RHS] for r, pc in zip(red, piv) if r.get(RHS)}
    hom = nullspace([{c: v for c, v in r.items() if c != RHS} for r in rows], columns)
    return [part] + hom


def primitive(vec: dict, columns: Sequence) -> dict:
    """Scale to coprime integers with a positive leading entry."""
    vals = [vec[c] for c in columns if vec.get(c)]
    if not vals:
        return {}
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in vals]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    sign = 1 if ints[0] > 0 else -1
    return {c: Fraction(int(vec[c] * den) // g * sign) for c in columns if vec.get(c)}


def span_basis(vectors: Sequence[dict], columns: Sequence) -> list:
    """Canonical primitive basis of the span (rows of the RREF, rescaled)."""
    red, _ = rref(vectors, columns)
    return [primitive(r, columns) for r in red]


# ---------------------------------------------------------------------------
# solution families


class IndexBlockTable(PoissonCoeffs):
    """Coefficients keyed by unknowns, evaluated on index labels ``x[i]``."""

    kind = "IndexBlockTable"

    def __init__(self, period: int, values: dict):
        self.period = period
        self.values = values

    def p(self, a, b):
        u, sg = fold(self.period, a.coords[0], b.coords[0])
        if u is None:
            return ZERO
        if u not in self.values:
            from .errors import UncoveredVariable
            raise UncoveredVariable(b)
        return sg * self.values[u]

    def to_text(self) -> str:
        return "\n".join(["bracket blocks"] + [f"u {u.residue_i} {u.residue_j} {u.offset} {v}"
                                               for u, v in sorted(self.values.items(), key=lambda kv: kv[0].sort_key())])


def vector_to_coeffs(m, vec: dict, core: Sequence) -> PoissonCoeffs:
    """Lattice offset table when the vector is a function of the lattice
    offset, otherwise a block table on index labels."""
    sc = m.staircase
    p = m.stencil.period
    values = {u: vec.get(u, ZERO) for u in core}
    table: dict = {}
    for u, v in values.items():
        a = sc.site(u.residue_i)
        b = sc.site(p * u.offset + u.residue_j)
        d = (b[0] - a[0], b[1] - a[1])
        if table.get(d, v) != v:
            return IndexBlockTable(p, values)
        table[d] = v
    return OffsetTable(table)


def coeffs_to_vector(m, P: PoissonCoeffs, core: Sequence) -> dict:
    """Evaluate a lattice bracket on the core unknowns."""
    sc = m.staircase
    p = m.stencil.period
    out = {}
    for u in core:
        v = P.p(sc.label(u.residue_i), sc.label(p * u.offset + u.residue_j))
        if v:
            out[u] = v
    return out


@dataclass
class SolutionFamily:
    model_id: str
    core: list
    vectors: list
    basis: list
    windows: list = field(default_factory=list)
    dimensions: list = field(default_factory=list)
    stable: bool = False

    @property
    def dimension(self) -> int:
        return len(self.vectors)

    def lines(self) -> list:
        out = [f"family {self.model_id} dimension={self.dimension} stable={'yes' if self.stable else 'no'}"]
        for w, d in zip(self.windows, self.dimensions):
            out.append(f"window {w[0]}:{w[1]} dimension={d}")
        for k, P in enumerate(self.basis):
            out.append(f"# basis {k + 1}")
            out.append(P.to_text())
        return out


def _project(cs: ConstraintSystem, core: list) -> list:
    ns = nullspace(cs.rows, cs.unknowns)
    proj = [{u: v[u] for u in core if v.get(u)} for v in ns]
    return span_basis([v for v in proj if v], core)


def solve_exact(cs: ConstraintSystem, m=None) -> SolutionFamily:
    """Nullspace of the window system projected to the core unknowns."""
    core = core_unknowns(_period(cs, m), cs.offsets)
    vecs = _project(cs, core)
    basis = [vector_to_coeffs(m, v, core) for v in vecs] if m is not None else []
    return SolutionFamily(cs.model_id, core, vecs, basis, [cs.window], [len(vecs)], False)


def _period(cs, m):
    if m is not None:
        return m.stencil.period
    return 1 + max(max(u.residue_i, u.residue_j) for u in cs.unknowns)


def intersect(a: Sequence[dict], b: Sequence[dict], core: Sequence) -> list:
    """Basis of ``span(a) & span(b)``."""
    if not a or not b:
        return []
    ann = nullspace(b, core)
    if not ann:
        return span_basis(a, core)
    rows = []
    for y in ann:
        rows.append({k: sum((vec.get(c, ZERO) * y.get(c, ZERO) for c in core), ZERO) for k, vec in enumerate(a)})
    coeffs = nullspace([{k: v for k, v in r.items() if v} for r in rows], list(range(len(a))))
    out = []
    for c in coeffs:
        v = {}
        for k, x in c.items():
            for col, val in a[k].items():
                v[col] = v.get(col, ZERO) + x * val
        out.append({k: x for k, x in v.items() if x})
    return span_basis(out, core)


def stabilize_across_windows(m, windows: Sequence, offsets: int, relations: str = "derived") -> SolutionFamily:
    """Solve on each window and intersect; stable when the two largest
    windows give the same dimension."""
    wins = [_window(w) for w in windows]
    if len(wins) < 2:
        raise ValueError("stabilization needs at least two windows")
    wins.sort(key=lambda w: w[1] - w[0])
    for a, b in zip(wins, wins[1:]):
        if not (b[0] < a[0] and a[1] < b[1]):
            raise ValueError("windows must be strictly nested")
    fams = [solve_exact(build_constraint_system(m, w, offsets, relations), m) for w in wins]
    core = fams[0].core
    vecs = fams[0].vectors
    for f in fams[1:]:
        vecs = intersect(vecs, f.vectors, core)
    dims = [f.dimension for f in fams]
    basis = [vector_to_coeffs(m, v, core) for v in vecs]
    return SolutionFamily(m.id, core, vecs, basis, wins, dims, dims[-1] == dims[-2])


def same_span(fam: SolutionFamily, m, directions: Sequence[PoissonCoeffs]) -> bool:
    """Whether the family equals the span of closed-form ``directions`` on the core."""
    other = span_basis([coeffs_to_vector(m, P, fam.core) for P in directions], fam.core)
    return span_basis(fam.vectors, fam.core) == other


# ---------------------------------------------------------------------------
# classification


RANK_LABELS = {0: "none", 1: "mono", 2: "bi", 3: "tri"}


@dataclass
class RankReport:
    label: str
    count: int
    hamiltonian: list  # certified basis (PoissonCoeffs) of the Hamiltonian subspace
    verdicts: list
    pencils: list
    certificate: str

    def lines(self) -> list:
        out = [f"rank {self.label} count={self.count}"]
        for k, v in enumerate(self.verdicts):
            out.append(f"hamiltonian basis {k + 1}: " + v.lines()[0])
        for (i, j), rep in self.pencils:
            out.append(f"pencil {i + 1},{j + 1}: {rep.certificate}")
        out.append(self.certificate)
        return out


def classify_hamiltonian_rank(fam: SolutionFamily, m, window=(-12, 12),
                              lambdas=(0, 1, -2, 7)) -> RankReport:
    """Dimension of the Hamiltonian part of a stable family.

    The Hamiltonian test is linear in the coefficients, so the structures of
    the family passing it form a subspace; its basis is computed exactly from
    the defect vectors of the family basis, then re-verified one by one with
    the full test, and consecutive pairs with the pencil test.
    """
    from .poisson import ideal_defects
    if not fam.stable:
        raise ValueError("classification needs a stable family")
    if not all(P.translation_invariant for P in fam.basis):
        raise ValueError("classification needs basis elements that depend on lattice offsets only")
    defects = [ideal_defects(P, m, window) for P in fam.basis]
    keys = sorted(set().union(*defects)) if defects else []
    rows = [{k: d[key] for k, d in enumerate(defects) if d.get(key)} for key in keys]
    rows = [r for r in rows if r]
    combos = nullspace(rows, list(range(len(fam.basis))))
    ham_vecs = []
    for c in combos:
        v = {}
        for k, x in c.items():
            for col, val in fam.vectors[k].items():
                v[col] = v.get(col, ZERO) + x * val
        ham_vecs.append({k: x for k, x in v.items() if x})
    ham_vecs = span_basis(ham_vecs, fam.core)
    ham = [vector_to_coeffs(m, v, fam.core) for v in ham_vecs]
    verdicts = [ideal_stability_check(P, m, window) for P in ham]
    pencils = [((a, a + 1), pencil_check(ham[a], ham[a + 1], m, lambdas, window))
               for a in range(len(ham) - 1)]
    ok = all(v.holds for v in verdicts) and all(rep.holds for _, rep in pencils)
    count = len(ham) if ok else 0
    label_ = RANK_LABELS.get(count, "higher")
    if ok:
        cert = (f"CERTIFIED {label_}: {count} independent Hamiltonian directions; "
                f"the conditions are linear, so every combination is Hamiltonian")
    else:
        cert = "NOT CERTIFIED: a computed Hamiltonian direction failed re-verification"
    return RankReport(label_, count, ham, verdicts, pencils, cert)


# ---------------------------------------------------------------------------
# closed-form identification


def closed_form_directions(m, M: int) -> list:
    """``[(name, coeffs), ...]`` spanning the closed-form family of ``m``.

    KdV quivers use ``a0`` and ``q_1..q_M``; the period-4 and period-5
    stencils use the ``(q_{n-n'} + f(n'+l'-n-l))`` family with ``a0``,
    ``b0`` and ``q_1..q_M``.
    """
    from .poisson import b210_bracket, kdv_bracket
    if m.id in ("kdv-a", "kdv-b"):
        out = [("a0", kdv_bracket(a0=1))]
        out += [(f"q{j}", kdv_bracket(q={j: 1})) for j in range(1, M + 1)]
        return out
    if m.id in ("b210", "boussinesq"):
        out = [("a0", b210_bracket(a0=1)), ("b0", b210_bracket(b0=1))]
        out += [(f"q{j}", b210_bracket(q={j: 1})) for j in range(1, M + 1)]
        return out
    raise ValueError(f"no closed-form family tabulated for {m.id}")


def family_coordinates(fam: SolutionFamily, m) -> list:
    """Express each basis vector in closed-form coordinates.

    Returns one ``{name: value}`` dict per basis vector, or ``None`` where the
    vector lies outside the closed-form span.
    """
    M = max(u.offset for u in fam.core)
    dirs = closed_form_directions(m, M)
    dvecs = [coeffs_to_vector(m, P, fam.core) for _, P in dirs]
    out = []
    for vec in fam.vectors:
        # solve sum c_k dvec_k = vec
        rows = []
        for u in fam.core:
            row = {k: d[u] for k, d in enumerate(dvecs) if d.get(u)}
            if vec.get(u):
                row["rhs"] = vec[u]
            if row:
                rows.append(row)
        cols = list(range(len(dvecs))) + ["rhs"]
        red, piv = rref(rows, cols)
        if "rhs" in piv:
            out.append(None)
            continue
        sol = {dirs[pc][0]: r.get("rhs", ZERO) for r, pc in zip(red, piv)}
        out.append({name: sol.get(name, ZERO) for name, _ in dirs})
    return out


def coordinates_text(m, coords: dict) -> str:
    fam = "kdv" if m.id in ("kdv-a", "kdv-b") else "b210"
    return "bracket " + fam + " " + " ".join(f"{k}={v}" for k, v in coords.items())
