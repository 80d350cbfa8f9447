"""Exchange matrices, quivers, stencils and mutation.

Convention: ``b[i][j] > 0`` means ``b[i][j]`` arrows ``i -> j``.  With this
orientation the exchange relation of the cluster module reproduces the
Somos-4 update ``x1' = (x2 x4 + x3^2) / x1``.

Infinite, translation-invariant quivers come in two flavours:

* :class:`QuiverStencil` -- a one-dimensional index lattice with period ``p``
  and band ``w``; row ``i`` depends only on ``i mod p``.
* :class:`LatticeQuiver` -- vertices are points of Z^d whose grading
  ``<g, v>`` lies in a window of ``p`` consecutive levels; the arrows leaving a
  vertex depend only on its level.

Both materialize finite :class:`ExchangeMatrix` windows, and all claims about
the infinite quiver are checked on a window interior.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    MalformedQuiver,
    OrderDependent,
    ParseError,
    SkewViolation,
    UnknownLabel,
    WindowTooSmall,
)
from .exact import VertexLabel, label


# ---------------------------------------------------------------------------
# exchange matrices


class ExchangeMatrix:
    """Finite skew-symmetric integer matrix over an ordered list of labels.

    Stored sparsely: ``_adj[u][v] = b_uv`` for nonzero entries only.
    """

    __slots__ = ("labels", "_index", "_adj")

    def __init__(self, labels: Sequence[VertexLabel], entries: Mapping | None = None):
        labels = tuple(labels)
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("labels must be distinct")
        adj: dict = {lab: {} for lab in labels}
        for (u, v), val in (entries or {}).items():
            if u not in index:
                raise UnknownLabel(u)
            if v not in index:
                raise UnknownLabel(v)
            val = int(val)
            if u == v:
                if val:
                    raise SkewViolation(f"nonzero diagonal entry at {u.render()}")
                continue
            if not val:
                continue
            prev = adj[v].get(u)
            if prev is not None and prev != -val:
                raise SkewViolation(f"b[{u.render()},{v.render()}]={val} but b[{v.render()},{u.render()}]={prev}")
            adj[u][v] = val
            adj[v][u] = -val
        self.labels = labels
        self._index = index
        self._adj = adj

    @classmethod
    def _raw(cls, labels, index, adj) -> "ExchangeMatrix":
        obj = cls.__new__(cls)
        obj.labels = labels
        obj._index = index
        obj._adj = adj
        return obj

    @classmethod
    def from_dense(cls, labels: Sequence[VertexLabel], rows: Sequence[Sequence[int]]) -> "ExchangeMatrix":
        labels = tuple(labels)
        n = len(labels)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("dense matrix shape does not match labels")
        for i in range(n):
            if rows[i][i]:
                raise SkewViolation(f"nonzero diagonal entry at {labels[i].render()}")
            for j in range(i + 1, n):
                if rows[i][j] != -rows[j][i]:
                    raise SkewViolation(f"entries ({i},{j}) and ({j},{i}) are not opposite")
        ent = {(labels[i], labels[j]): rows[i][j] for i in range(n) for j in range(n) if rows[i][j]}
        return cls(labels, ent)

    def __contains__(self, lab) -> bool:
        return lab in self._index

    def __len__(self):
        return len(self.labels)

    def b(self, u: VertexLabel, v: VertexLabel) -> int:
        if u not in self._index:
            raise UnknownLabel(u)
        if v not in self._index:
            raise UnknownLabel(v)
        return self._adj[u].get(v, 0)

    def row(self, u: VertexLabel) -> dict:
        """Nonzero entries ``{v: b_uv}`` of row ``u``."""
        if u not in self._index:
            raise UnknownLabel(u)
        return dict(self._adj[u])

    def entries(self) -> dict:
        return {(u, v): x for u in self.labels for v, x in self._adj[u].items()}

    def to_dense(self) -> list:
        return [[self._adj[u].get(v, 0) for v in self.labels] for u in self.labels]

    def is_skew(self) -> bool:
        return all(self._adj[v].get(u) == -x for u in self.labels for v, x in self._adj[u].items())

    def relabel(self, mapping: Callable | Mapping) -> "ExchangeMatrix":
        f = mapping if callable(mapping) else mapping.__getitem__
        labels = tuple(f(lab) for lab in self.labels)
        ent = {(f(u), f(v)): x for (u, v), x in self.entries().items()}
        return ExchangeMatrix(labels, ent)

    def restrict(self, labels: Iterable[VertexLabel]) -> "ExchangeMatrix":
        keep = [lab for lab in labels]
        ks = set(keep)
        ent = {(u, v): x for (u, v), x in self.entries().items() if u in ks and v in ks}
        return ExchangeMatrix(keep, ent)

    def __eq__(self, other):
        if not isinstance(other, ExchangeMatrix):
            return NotImplemented
        return self.labels == other.labels and self._adj == other._adj

    def __hash__(self):
        return hash((self.labels, frozenset(self.entries().items())))

    def __repr__(self):
        return f"ExchangeMatrix({len(self.labels)} labels, {sum(len(r) for r in self._adj.values()) // 2} arrows)"


def matrix_mutate(B: ExchangeMatrix, k: VertexLabel) -> ExchangeMatrix:
    """Matrix mutation at ``k``.

    ``b'_ij = -b_ij`` if ``k`` is ``i`` or ``j``, otherwise
    ``b'_ij = b_ij + b_ik [b_kj]_+ + [-b_ik]_+ b_kj``.
    """
    if k not in B._index:
        raise UnknownLabel(k)
    adj = dict(B._adj)
    nk = B._adj[k]
    touched = {k, *nk}
    for u in touched:
        adj[u] = dict(B._adj[u])
    for u, bku in nk.items():
        adj[u][k] = bku
    adj[k] = {u: -x for u, x in nk.items()}
    nbrs = list(nk.items())
    for i, bki in nbrs:
        bik = -bki
        for j, bkj in nbrs:
            if i == j:
                continue
            delta = bik * max(bkj, 0) + max(-bik, 0) * bkj
            if delta:
                val = adj[i].get(j, 0) + delta
                if val:
                    adj[i][j] = val
                else:
                    adj[i].pop(j, None)
    return ExchangeMatrix._raw(B.labels, B._index, adj)


def composite_mutate(
    B: ExchangeMatrix,
    orbit: Sequence[VertexLabel],
    check_order: bool = True,
    seed: int = 0,
) -> ExchangeMatrix:
    """Mutate sequentially along ``orbit`` and assert order independence.

    One random permutation of the orbit (deterministic ``seed``) is replayed
    and must give the same matrix, otherwise :class:`OrderDependent` is raised.
    """
    orbit = list(orbit)
    if len(set(orbit)) != len(orbit):
        raise ValueError("orbit labels must be distinct")
    for k in orbit:
        if k not in B:
            raise UnknownLabel(k)
    out = B
    for k in orbit:
        out = matrix_mutate(out, k)
    if check_order and len(orbit) > 1:
        perm = orbit[:]
        random.Random(seed).shuffle(perm)
        if perm == orbit:
            perm = perm[::-1]
        alt = B
        for k in perm:
            alt = matrix_mutate(alt, k)
        if alt != out:
            raise OrderDependent("composite mutation depends on the order of the orbit")
    return out


# ---------------------------------------------------------------------------
# quivers


@dataclass(frozen=True)
class Quiver:
    """Labels plus a multiset of arrows ``(src, dst, multiplicity)``."""

    labels: tuple
    arrows: tuple

    @staticmethod
    def make(labels: Iterable[VertexLabel], arrows: Iterable[tuple]) -> "Quiver":
        labels = tuple(labels)
        known = set(labels)
        acc: dict = {}
        for src, dst, mult in arrows:
            if src not in known:
                raise MalformedQuiver(f"unknown vertex {src.render()}")
            if dst not in known:
                raise MalformedQuiver(f"unknown vertex {dst.render()}")
            if src == dst:
                raise MalformedQuiver(f"loop at {src.render()}")
            if mult < 1:
                raise MalformedQuiver("arrow multiplicity must be positive")
            acc[(src, dst)] = acc.get((src, dst), 0) + int(mult)
        for (src, dst) in acc:
            if (dst, src) in acc:
                raise MalformedQuiver(f"2-cycle between {src.render()} and {dst.render()}")
        return Quiver(labels, tuple(sorted((s, d, m) for (s, d), m in acc.items())))


def quiver_to_matrix(q: Quiver) -> ExchangeMatrix:
    q = Quiver.make(q.labels, q.arrows)
    return ExchangeMatrix(q.labels, {(s, d): m for s, d, m in q.arrows})


def matrix_to_quiver(B: ExchangeMatrix) -> Quiver:
    arrows = [(u, v, x) for (u, v), x in B.entries().items() if x > 0]
    return Quiver(B.labels, tuple(sorted(arrows)))


# ---------------------------------------------------------------------------
# stencils


@dataclass(frozen=True)
class QuiverStencil:
    """Translation-invariant infinite quiver on the integers.

    ``coeff[(r, d)]`` is ``b_{i,i+d}`` for ``i = r (mod p)``.  After a
    composite mutation at residue ``orbit_residue`` the quiver reappears with
    every index moved by ``relabel_shift``.
    """

    period: int
    band: int
    coeff: Mapping
    dim: int = 2
    orbit_residue: int = 0
    relabel_shift: int = -1

    def __post_init__(self):
        clean = {}
        for (r, d), v in self.coeff.items():
            if not 0 <= r < self.period:
                raise SkewViolation(f"residue {r} out of range")
            if d == 0 and v:
                raise SkewViolation("loop in stencil")
            if abs(d) > self.band and v:
                raise SkewViolation(f"offset {d} exceeds band {self.band}")
            if v:
                clean[(r, d)] = int(v)
        for (r, d), v in clean.items():
            partner = clean.get(((r + d) % self.period, -d), 0)
            if partner != -v:
                raise SkewViolation(f"coeff({r},{d})={v} but coeff({(r + d) % self.period},{-d})={partner}")
        object.__setattr__(self, "coeff", dict(sorted(clean.items())))

    def b(self, i: int, j: int) -> int:
        return self.coeff.get((i % self.period, j - i), 0)

    def row(self, r: int) -> dict:
        return {d: v for (rr, d), v in self.coeff.items() if rr == r}

    def orbit(self, i: int) -> bool:
        return i % self.period == self.orbit_residue

    def interior(self, lo: int, hi: int) -> tuple:
        return (lo + 2 * self.band, hi - 2 * self.band)


def index_label(i: int) -> VertexLabel:
    return label(i)


def materialize_window(s: QuiverStencil, lo: int, hi: int) -> ExchangeMatrix:
    """Window ``[lo, hi]`` of a stencil, labelled by 1-coordinate labels."""
    if hi - lo < 2 * s.band:
        raise WindowTooSmall(f"window [{lo},{hi}] narrower than twice the band {s.band}")
    labels = [index_label(i) for i in range(lo, hi + 1)]
    ent = {}
    for i in range(lo, hi + 1):
        for d, v in s.row(i % s.period).items():
            j = i + d
            if lo <= j <= hi:
                ent[(labels[i - lo], labels[j - lo])] = v
    return ExchangeMatrix(labels, ent)


@dataclass
class WindowReport:
    window: tuple
    matched_interior: tuple | None
    mismatches: list = field(default_factory=list)
    interior: tuple | None = None
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches and self.matched_interior is not None

    def lines(self) -> list:
        out = []
        lo, hi = self.interior if self.interior else self.window
        if self.ok:
            out.append(f"interior [{_fmt(lo)},{_fmt(hi)}] matched ({self.checked} entries)")
        else:
            out.append(f"interior [{_fmt(lo)},{_fmt(hi)}] mismatched ({len(self.mismatches)} entries)")
            for (u, v), exp, got in self.mismatches:
                out.append(f"MISMATCH {u.render()} {v.render()} expected={exp} got={got}")
        return out


def _fmt(x):
    if isinstance(x, VertexLabel):
        return x.render()
    if isinstance(x, tuple):
        return "(" + ",".join(str(c) for c in x) + ")"
    return str(x)


def _compare(mutated: ExchangeMatrix, relabel: Callable, expected: Callable, keep: Sequence) -> tuple:
    mismatches = []
    checked = 0
    for a, b in itertools.combinations(keep, 2):
        exp = expected(relabel(a), relabel(b))
        got = mutated.b(a, b)
        checked += 1
        if exp != got:
            mismatches.append(((a, b), exp, got))
    return mismatches, checked


def check_periodicity(
    s: QuiverStencil,
    window: tuple,
    orbit_rule: Callable[[int], bool] | None = None,
    shift: Callable[[int], int] | None = None,
) -> WindowReport:
    """Composite-mutate a stencil window and compare with a fresh one.

    Every orbit vertex of ``[lo, hi]`` is mutated, indices are relabelled by
    ``shift`` (default ``i -> i + relabel_shift``) and the result is compared
    entry by entry with the stencil on the interior ``[lo + 2w, hi - 2w]``.
    """
    lo, hi = window
    orbit_rule = orbit_rule or s.orbit
    shift = shift or (lambda i: i + s.relabel_shift)
    ilo, ihi = s.interior(lo, hi)
    if ilo > ihi:
        raise WindowTooSmall(f"window [{lo},{hi}] has an empty interior")
    B = materialize_window(s, lo, hi)
    orbit = [index_label(i) for i in range(lo, hi + 1) if orbit_rule(i)]
    M = composite_mutate(B, orbit)
    keep = [index_label(i) for i in range(ilo, ihi + 1)]
    image = [shift(i) for i in range(ilo, ihi + 1)]
    fresh = materialize_window(s, min(image) - s.band, max(image) + s.band)
    mism, checked = _compare(M, lambda lab: index_label(shift(lab.coords[0])), fresh.b, keep)
    matched = (ilo, ihi) if not mism else _largest_clean(range(ilo, ihi + 1), mism)
    return WindowReport((lo, hi), matched, mism, (ilo, ihi), checked)


def _largest_clean(indices, mismatches):
    bad = {a.coords[0] for (a, b), _, _ in mismatches} | {b.coords[0] for (a, b), _, _ in mismatches}
    best, cur = None, []
    for i in indices:
        if i in bad:
            cur = []
            continue
        cur.append(i)
        if best is None or len(cur) > best[1] - best[0] + 1:
            best = (cur[0], cur[-1])
    return best


def check_periodicity_finite(B: ExchangeMatrix, orbit: Sequence[VertexLabel], relabel: Mapping) -> WindowReport:
    """Finite version: mutate, relabel, and demand exact equality."""
    M = composite_mutate(B, orbit)
    R = M.relabel(relabel)
    mism = []
    for a, b in itertools.combinations(B.labels, 2):
        exp = B.b(a, b)
        got = R.b(a, b) if a in R and b in R else None
        if exp != got:
            mism.append(((a, b), exp, got))
    ends = (B.labels[0], B.labels[-1])
    n = len(B.labels)
    return WindowReport(ends, ends if not mism else None, mism, ends, n * (n - 1) // 2)


# ---------------------------------------------------------------------------
# lattice quivers


@dataclass(frozen=True)
class LatticeQuiver:
    """Graded translation-invariant quiver on Z^d.

    Vertices are the points ``v`` with ``base <= <grading, v> < base + period``.
    ``rules[t]`` maps an offset ``d`` to ``b_{v, v+d}`` for every vertex of
    level ``base + t``.  Mutating the bottom level sends ``v`` to ``v + step``;
    translating by ``-shift`` then returns the original vertex set.
    """

    dim: int
    grading: tuple
    base: int
    period: int
    rules: Mapping
    step: tuple
    shift: tuple

    def __post_init__(self):
        rules = {t: {tuple(d): int(x) for d, x in self.rules.get(t, {}).items() if x} for t in range(self.period)}
        for t, row in rules.items():
            for d, x in row.items():
                t2 = t + self.level_of(d)
                if not 0 <= t2 < self.period:
                    raise SkewViolation(f"rule at level {t} points outside the level band")
                back = rules[t2].get(tuple(-c for c in d), 0)
                if back != -x:
                    raise SkewViolation(f"rule ({t},{d})={x} but reverse rule is {back}")
        object.__setattr__(self, "rules", rules)

    def level_of(self, v) -> int:
        return sum(g * c for g, c in zip(self.grading, v))

    def level(self, lab: VertexLabel) -> int:
        return self.level_of(lab.coords) - self.base

    def contains(self, v) -> bool:
        return 0 <= self.level_of(v) - self.base < self.period

    def radius(self) -> int:
        return max((max(abs(c) for c in d) for row in self.rules.values() for d in row), default=0)

    def b(self, u: VertexLabel, v: VertexLabel) -> int:
        d = tuple(a - c for a, c in zip(v.coords, u.coords))
        return self.rules[self.level(u)].get(d, 0)

    def vertices(self, box: Sequence[tuple]) -> list:
        ranges = [range(lo, hi + 1) for lo, hi in box]
        return [label(*v) for v in itertools.product(*ranges) if self.contains(v)]

    def materialize(self, box: Sequence[tuple]) -> ExchangeMatrix:
        labels = self.vertices(box)
        known = set(labels)
        ent = {}
        for u in labels:
            for d, x in self.rules[self.level(u)].items():
                v = u.shifted(d)
                if v in known:
                    ent[(u, v)] = x
        return ExchangeMatrix(labels, ent)

    def orbit(self, labels: Iterable[VertexLabel]) -> list:
        return sorted(lab for lab in labels if self.level(lab) == 0)


def lattice_from_window(
    B: ExchangeMatrix, grading: tuple, base: int, period: int, step: tuple, shift: tuple
) -> tuple:
    """Read per-level rules off a finite window of a graded lattice quiver.

    Returns ``(LatticeQuiver, conflicts)`` where ``conflicts`` lists
    ``(vertex, offset, found, majority)`` for entries disagreeing with the
    majority value at their level (typically boundary effects or transcription
    errors).  Absent arrows count as value 0 only when both endpoints lie in
    the window.
    """
    labels = list(B.labels)
    known = set(labels)
    lv = lambda v: sum(g * c for g, c in zip(grading, v.coords)) - base
    offsets: dict = {}
    for u in labels:
        for v, x in B.row(u).items():
            d = tuple(a - c for a, c in zip(v.coords, u.coords))
            offsets.setdefault(lv(u), set()).add(d)
    votes: dict = {}
    for u in labels:
        for d in offsets.get(lv(u), ()):
            v = u.shifted(d)
            if v in known:
                votes.setdefault((lv(u), d), {}).setdefault(B.b(u, v), []).append(u)
    rules: dict = {t: {} for t in range(period)}
    conflicts = []
    for (t, d), tally in sorted(votes.items()):
        best = max(sorted(tally), key=lambda x: (len(tally[x]), x != 0))
        if best:
            rules[t][d] = best
        for x, us in sorted(tally.items()):
            if x != best:
                conflicts.extend((u, d, x, best) for u in us)
    lq = LatticeQuiver(len(grading), tuple(grading), base, period, rules, tuple(step), tuple(shift))
    return lq, conflicts


def check_periodicity_lattice(lq: LatticeQuiver, box: Sequence[tuple]) -> WindowReport:
    """Composite mutation of the bottom level of a box window, then compare.

    The mutated vertex ``v`` is renamed ``v + step``, every label is then
    translated by ``-shift`` and entries between interior vertices (at
    sup-distance at least ``2 * radius + |step|`` from the box boundary) are
    compared with the rules.
    """
    B = lq.materialize(box)
    orbit = lq.orbit(B.labels)
    M = composite_mutate(B, orbit)
    orbit_set = set(orbit)
    margin = 2 * lq.radius() + max(abs(c) for c in lq.step)
    inner = [(lo + margin, hi - margin) for lo, hi in box]
    if any(lo > hi for lo, hi in inner):
        raise WindowTooSmall("box has an empty interior")

    def rename(lab):
        v = lab.shifted(lq.step) if lab in orbit_set else lab
        return v.shifted(tuple(-c for c in lq.shift))

    keep = [lab for lab in B.labels if all(lo <= c <= hi for c, (lo, hi) in zip(rename(lab).coords, inner))]
    mism, checked = _compare(M, rename, lq.b, keep)
    lo = tuple(a for a, _ in inner)
    hi = tuple(b for _, b in inner)
    return WindowReport(tuple(box), (lo, hi) if not mism else None, mism, (lo, hi), checked)


# ---------------------------------------------------------------------------
# text formats


def dump_quiver(q: Quiver | ExchangeMatrix, notes: Sequence[str] = ()) -> str:
    if isinstance(q, ExchangeMatrix):
        q = matrix_to_quiver(q)
    dim = q.labels[0].dim if q.labels else 1
    ids = {lab: i for i, lab in enumerate(q.labels)}
    out = ["hamq 1", f"dim {dim}"]
    out += [f"# {n}" for n in notes]
    for lab in q.labels:
        out.append(f"vertex v{ids[lab]} " + " ".join(str(c) for c in lab.coords))
    for s, d, m in q.arrows:
        out.append(f"arrow v{ids[s]} v{ids[d]} {m}")
    return "\n".join(out) + "\n"


def parse_quiver(text: str) -> Quiver:
    """Parse the ``hamq 1`` quiver format, rejecting loops and 2-cycles."""
    ids: dict = {}
    labels = []
    arrows: dict = {}
    dim = None
    header = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if not header:
            if tok != ["hamq", "1"]:
                raise ParseError("expected header 'hamq 1'", no)
            header = True
            continue
        kw = tok[0]
        try:
            if kw == "dim":
                dim = int(tok[1])
                if dim not in (1, 2, 3):
                    raise ParseError("dim must be 1, 2 or 3", no)
            elif kw == "vertex":
                if dim is None:
                    raise ParseError("'dim' must precede vertices", no)
                vid = tok[1]
                coords = tuple(int(c) for c in tok[2:])
                if len(coords) != dim:
                    raise ParseError(f"vertex {vid} needs {dim} coordinates", no)
                if vid in ids:
                    raise ParseError(f"duplicate vertex id {vid}", no)
                lab = VertexLabel(coords)
                if lab in labels:
                    raise ParseError(f"duplicate vertex coordinates {lab.render()}", no)
                ids[vid] = lab
                labels.append(lab)
            elif kw == "arrow":
                if len(tok) != 4:
                    raise ParseError("arrow needs src, dst and multiplicity", no)
                src, dst, mult = tok[1], tok[2], int(tok[3])
                for v in (src, dst):
                    if v not in ids:
                        raise ParseError(f"unknown vertex id {v}", no)
                if src == dst:
                    raise ParseError(f"loop at {src}", no)
                if mult < 1:
                    raise ParseError("multiplicity must be positive", no)
                a, b = ids[src], ids[dst]
                if (b, a) in arrows:
                    raise ParseError(f"2-cycle between {src} and {dst}", no)
                arrows[(a, b)] = arrows.get((a, b), 0) + mult
            else:
                raise ParseError(f"unknown statement {kw!r}", no)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed statement: {raw.strip()}", no) from exc
    if not header:
        raise ParseError("empty quiver file")
    return Quiver.make(labels, [(a, b, m) for (a, b), m in arrows.items()])


def dump_stencil(s: QuiverStencil) -> str:
    out = ["stencil 1", f"period {s.period}", f"band {s.band}"]
    for (r, d), v in sorted(s.coeff.items()):
        out.append(f"coeff {r} {d} {v}")
    return "\n".join(out) + "\n"


def parse_stencil(text: str, **kwargs) -> QuiverStencil:
    period = band = None
    coeff: dict = {}
    where: dict = {}
    header = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if not header:
            if tok != ["stencil", "1"]:
                raise ParseError("expected header 'stencil 1'", no)
            header = True
            continue
        try:
            if tok[0] == "period":
                period = int(tok[1])
            elif tok[0] == "band":
                band = int(tok[1])
            elif tok[0] == "coeff":
                if period is None or band is None:
                    raise ParseError("period and band must precede coefficients", no)
                r, d, v = int(tok[1]), int(tok[2]), int(tok[3])
                if not 0 <= r < period:
                    raise ParseError(f"residue {r} out of range", no)
                if d == 0:
                    raise ParseError("loop offset 0", no)
                if abs(d) > band:
                    raise ParseError(f"offset {d} exceeds band {band}", no)
                if (r, d) in coeff:
                    raise ParseError(f"duplicate coefficient ({r},{d})", no)
                coeff[(r, d)] = v
                where[(r, d)] = no
            else:
                raise ParseError(f"unknown statement {tok[0]!r}", no)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed statement: {raw.strip()}", no) from exc
    if period is None or band is None:
        raise ParseError("missing period or band")
    for (r, d), v in coeff.items():
        partner = coeff.get(((r + d) % period, -d), 0)
        if partner != -v:
            raise ParseError(
                f"skew-symmetry violated: coeff({r},{d})={v} but coeff({(r + d) % period},{-d})={partner}",
                where[(r, d)],
            )
    return QuiverStencil(period, band, coeff, **kwargs)
