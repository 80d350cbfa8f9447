"""Log-canonical Poisson brackets ``{x_i, x_j} = p_ij x_i x_j``.

Bracket coefficients come either as explicit finite tables or as closed-form
translation-invariant families on lattice sites.  For a translation-invariant
family ``p(a, b) = g(b - a)`` and the evaluators below exploit that.

The Hamiltonian test for a binomial-type generator ``Z = m1 - m2 - m3`` uses
the factorization criterion: ``{x, Z}`` is a multiple of ``x Z`` exactly when
the three monomials receive the same bracket coefficient against ``x``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .cluster import Seed, exchange_value, seed_mutate
from .errors import (
    DimensionMismatch,
    NotCompatible,
    OddnessViolation,
    ParseError,
    SkewnessViolation,
    UncoveredVariable,
    WindowTooSmall,
)
from .exact import LaurentPoly, VertexLabel, as_rational, parse_label
from .quiver import ExchangeMatrix, matrix_mutate

ZERO = Fraction(0)


def _delta(a: VertexLabel, b: VertexLabel) -> tuple:
    return tuple(y - x for x, y in zip(a.coords, b.coords))


# ---------------------------------------------------------------------------
# coefficient rules


class PoissonCoeffs:
    """Base class: ``p(a, b)`` for labels, skew by construction."""

    kind = "abstract"
    translation_invariant = False

    def p(self, a: VertexLabel, b: VertexLabel) -> Fraction:
        raise NotImplementedError

    def g(self, delta: tuple) -> Fraction:
        """Offset function of a translation-invariant rule."""
        raise TypeError(f"{self.kind} is not translation invariant")

    def covers(self, a: VertexLabel) -> bool:
        return True

    def __sub__(self, other: "PoissonCoeffs") -> "PoissonCoeffs":
        return Combination([(Fraction(1), self), (Fraction(-1), other)])

    def __add__(self, other: "PoissonCoeffs") -> "PoissonCoeffs":
        return Combination([(Fraction(1), self), (Fraction(1), other)])

    def scaled(self, c) -> "PoissonCoeffs":
        return Combination([(as_rational(c), self)])

    def to_text(self) -> str:
        raise NotImplementedError


class TranslationInvariant(PoissonCoeffs):
    translation_invariant = True

    def p(self, a, b):
        if a == b:
            return ZERO
        return self.g(_delta(a, b))


class ExplicitWindow(PoissonCoeffs):
    """Finite table of coefficients, optionally overriding a base rule.

    Without a base, ``p`` is defined on the listed labels (unlisted pairs
    among them are 0) and raises :class:`UncoveredVariable` elsewhere.
    """

    kind = "ExplicitWindow"

    def __init__(self, table: Mapping, labels: Iterable[VertexLabel] | None = None,
                 base: PoissonCoeffs | None = None):
        clean: dict = {}
        for (a, b), v in table.items():
            v = as_rational(v)
            if a == b:
                if v:
                    raise SkewnessViolation(f"nonzero diagonal entry at {a.render()}")
                continue
            prev = clean.get((b, a))
            if prev is not None and prev != -v:
                raise SkewnessViolation(f"p[{a.render()},{b.render()}] and p[{b.render()},{a.render()}] are not opposite")
            clean[(a, b)] = v
            clean[(b, a)] = -v
        self.table = clean
        labs = set(labels or ())
        for a, b in clean:
            labs.add(a)
            labs.add(b)
        self.labels = sorted(labs)
        self._labelset = labs
        self.base = base

    @classmethod
    def from_matrix(cls, labels: Sequence[VertexLabel], rows) -> "ExplicitWindow":
        labels = list(labels)
        n = len(labels)
        for i in range(n):
            for j in range(n):
                if as_rational(rows[i][j]) != -as_rational(rows[j][i]):
                    raise SkewnessViolation(f"entries ({i},{j}) and ({j},{i}) are not opposite")
        return cls({(labels[i], labels[j]): rows[i][j] for i in range(n) for j in range(n) if rows[i][j]}, labels)

    def covers(self, a):
        return self.base is not None or a in self._labelset

    def p(self, a, b):
        v = self.table.get((a, b))
        if v is not None:
            return v
        if a == b:
            return ZERO
        if self.base is not None:
            return self.base.p(a, b)
        if a not in self._labelset:
            raise UncoveredVariable(a)
        if b not in self._labelset:
            raise UncoveredVariable(b)
        return ZERO

    def matrix(self, labels: Sequence[VertexLabel]) -> list:
        return [[self.p(a, b) for b in labels] for a in labels]

    def to_text(self) -> str:
        out = []
        if self.base is not None:
            out.append(self.base.to_text())
        else:
            out.append("bracket explicit")
        seen = set()
        for (a, b), v in sorted(self.table.items()):
            if (b, a) in seen or a > b:
                continue
            seen.add((a, b))
            out.append(f"p {a.render()} {b.render()} {v}")
        return "\n".join(out)


class OffsetTable(TranslationInvariant):
    """Translation-invariant rule known on a finite set of offsets."""

    kind = "OffsetTable"

    def __init__(self, table: Mapping):
        clean = {}
        for d, v in table.items():
            d = tuple(d)
            v = as_rational(v)
            if not any(d):
                if v:
                    raise SkewnessViolation("nonzero self-bracket")
                continue
            neg = tuple(-c for c in d)
            if neg in clean and clean[neg] != -v:
                raise SkewnessViolation(f"g{d} and g{neg} are not opposite")
            clean[d] = v
            clean[neg] = -v
        self.table = clean

    def g(self, delta):
        delta = tuple(delta)
        if not any(delta):
            return ZERO
        try:
            return self.table[delta]
        except KeyError:
            raise UncoveredVariable(delta) from None

    def to_text(self) -> str:
        out = ["bracket offsets"]
        for d, v in sorted(self.table.items()):
            if d > tuple(-c for c in d):
                out.append(f"g {','.join(map(str, d))} {v}")
        return "\n".join(out)


class Combination(PoissonCoeffs):
    """Rational linear combination of coefficient rules."""

    kind = "Combination"

    def __init__(self, parts: Sequence):
        flat = []
        for c, P in parts:
            c = as_rational(c)
            if isinstance(P, Combination):
                flat.extend((c * c2, P2) for c2, P2 in P.parts)
            else:
                flat.append((c, P))
        self.parts = [(c, P) for c, P in flat if c]
        self.translation_invariant = all(P.translation_invariant for _, P in self.parts)

    def p(self, a, b):
        return sum((c * P.p(a, b) for c, P in self.parts), ZERO)

    def g(self, delta):
        return sum((c * P.g(delta) for c, P in self.parts), ZERO)

    def covers(self, a):
        return all(P.covers(a) for _, P in self.parts)

    def to_text(self) -> str:
        return "\n".join(f"# {c} * [{P.to_text()}]" for c, P in self.parts)


def _odd_map(q, name="q") -> dict:
    """Validate an odd map ``m -> q_m`` and store it on all its support."""
    out: dict = {}
    for m, v in dict(q or {}).items():
        m = int(m)
        v = as_rational(v)
        if m == 0:
            if v:
                raise OddnessViolation(f"{name}_0 must vanish")
            continue
        if -m in out and out[-m] != -v:
            raise OddnessViolation(f"{name}_{-m} != -{name}_{m}")
        out[m] = v
        out[-m] = -v
    return {m: v for m, v in out.items() if v}


def f_map(n: int, a0: Fraction, b0: Fraction) -> Fraction:
    """``f(n) = (n - 2k) a0 + k b0`` with ``n - 3k`` in ``{-1, 0, 1}``."""
    k = (n + 1) // 3
    return (n - 2 * k) * a0 + k * b0


@dataclass(frozen=True)
class KdVFamilyParams:
    a0: Fraction = ZERO
    q: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "a0", as_rational(self.a0))
        object.__setattr__(self, "q", _odd_map(self.q))

    def qm(self, m: int) -> Fraction:
        return self.q.get(m, ZERO)


class KdVFamily(TranslationInvariant):
    """``{s[l,n], s[l',n']} = (q_{n-n'} + a0 (n'+l'-n-l)) s s'``.

    The simplified form uses ``a0 (l' - l)`` instead; the two forms are related
    by ``q'_m = q_m - a0 m``.
    """

    kind = "KdVFamily"

    def __init__(self, params: KdVFamilyParams, simplified: bool = False):
        self.params = params
        self.simplified = simplified

    def g(self, delta):
        dl, dn = delta
        lin = dl if self.simplified else dl + dn
        return self.params.qm(-dn) + self.params.a0 * lin

    def to_text(self) -> str:
        return _family_text("kdv", {"a0": self.params.a0}, self.params.q, self.simplified)


class BoussinesqFamily(TranslationInvariant):
    """``{s[l,n], s[l',n']} = f(n'+l'-n-l) s s'`` with ``f`` the period-3 map.

    With the default ``b0 = 2 a0`` this is ``a0 (n'+l'-n-l)``.
    """

    kind = "BoussinesqFamily"

    def __init__(self, a0, b0=None):
        self.a0 = as_rational(a0)
        self.b0 = 2 * self.a0 if b0 is None else as_rational(b0)

    def g(self, delta):
        dl, dn = delta
        return f_map(dl + dn, self.a0, self.b0)

    def to_text(self) -> str:
        vals = {"a0": self.a0}
        if self.b0 != 2 * self.a0:
            vals["b0"] = self.b0
        return _family_text("boussinesq", vals, {})


@dataclass(frozen=True)
class Reduction210FamilyParams:
    a0: Fraction = ZERO
    b0: Fraction = ZERO
    q: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "a0", as_rational(self.a0))
        object.__setattr__(self, "b0", as_rational(self.b0))
        object.__setattr__(self, "q", _odd_map(self.q))


class Reduction210Family(TranslationInvariant):
    """``{s[l,n], s[l',n']} = (q_{n-n'} + f(n'+l'-n-l)) s s'``."""

    kind = "Reduction210Family"

    def __init__(self, params: Reduction210FamilyParams):
        self.params = params

    def g(self, delta):
        dl, dn = delta
        return self.params.q.get(-dn, ZERO) + f_map(dl + dn, self.params.a0, self.params.b0)

    def to_text(self) -> str:
        return _family_text("b210", {"a0": self.params.a0, "b0": self.params.b0}, self.params.q)


def _family_text(name, scalars, q, simplified=False) -> str:
    parts = [f"bracket {name}"] + [f"{k}={v}" for k, v in scalars.items()]
    parts += [f"q{m}={v}" for m, v in sorted(q.items()) if m > 0]
    if simplified:
        parts.append("simplified=1")
    return " ".join(parts)


@dataclass(frozen=True)
class InoueFamilyParams:
    """Parameters of the general block solution for the period-3 stencil.

    ``a_map`` and ``b_map`` are integer-indexed maps (missing keys are 0);
    ``q`` is a skew map ``(i, j) -> q_ij`` or a callable.
    """

    a0: Fraction = ZERO
    b0: Fraction = ZERO
    c0: Fraction = ZERO
    a_map: Mapping | Callable = field(default_factory=dict)
    b_map: Mapping | Callable = field(default_factory=dict)
    q: Mapping | Callable = field(default_factory=dict)

    def __post_init__(self):
        for name in ("a0", "b0", "c0"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        if not callable(self.q):
            q = {}
            for (i, j), v in dict(self.q).items():
                v = as_rational(v)
                if i == j and v:
                    raise SkewnessViolation("q_ii must vanish")
                if (j, i) in q and q[(j, i)] != -v:
                    raise SkewnessViolation(f"q_{j},{i} != -q_{i},{j}")
                q[(i, j)] = v
                q[(j, i)] = -v
            object.__setattr__(self, "q", q)

    def qij(self, i, j) -> Fraction:
        if i == j:
            return ZERO
        if callable(self.q):
            return as_rational(self.q(i, j))
        return self.q.get((i, j), ZERO)

    def am(self, i) -> Fraction:
        return as_rational(self.a_map(i)) if callable(self.a_map) else as_rational(self.a_map.get(i, 0))

    def bm(self, i) -> Fraction:
        return as_rational(self.b_map(i)) if callable(self.b_map) else as_rational(self.b_map.get(i, 0))


class InoueFamily(PoissonCoeffs):
    """Block solution of ``PB = O`` on index labels ``x[i]`` (period 3).

    ``P(0,0)`` is the 3x3 skew matrix of ``a0, b0, c0``;
    ``P(i,i) = P(0,0) + Q_{0,i} S - S Q_{0,i}`` and
    ``P(i,j) = P(i,i) + Q_{i,j} S`` for ``i < j``, where ``S`` is the all-ones
    matrix and ``Q_{i,j} = diag(q_ij, q_ij + a(i) - a(j), q_ij + b(i) - b(j))``.
    """

    kind = "InoueFamily"

    def __init__(self, params: InoueFamilyParams):
        self.params = params

    def _qdiag(self, i, j):
        P = self.params
        q = P.qij(i, j)
        return (q, q + P.am(i) - P.am(j), q + P.bm(i) - P.bm(j))

    def _pii(self, i, r, s):
        P = self.params
        base = ((ZERO, P.a0, P.b0), (-P.a0, ZERO, P.c0), (-P.b0, -P.c0, ZERO))[r][s]
        if i == 0:
            return base
        Q = self._qdiag(0, i)
        return base + Q[r] - Q[s]

    def block(self, i, j, r, s) -> Fraction:
        if i == j:
            return self._pii(i, r, s)
        if i < j:
            return self._pii(i, r, s) + self._qdiag(i, j)[r]
        return -self.block(j, i, s, r)

    def p(self, a, b):
        if len(a.coords) != 1 or len(b.coords) != 1:
            raise UncoveredVariable(a if len(a.coords) != 1 else b)
        i, r = divmod(a.coords[0], 3)
        j, s = divmod(b.coords[0], 3)
        return self.block(i, j, r, s)

    def to_text(self) -> str:
        P = self.params
        return f"bracket inoue a0={P.a0} b0={P.b0} c0={P.c0}"


def kdv_bracket(params: KdVFamilyParams | None = None, simplified: bool = False, **kw) -> KdVFamily:
    """KdV family from params or keywords ``a0=..., q={m: q_m}``."""
    if params is None:
        params = KdVFamilyParams(kw.get("a0", 0), kw.get("q", {}))
    return KdVFamily(params, simplified)


def inoue_solution(params: InoueFamilyParams) -> InoueFamily:
    return InoueFamily(params)


def b210_bracket(a0=0, b0=0, q=None) -> Reduction210Family:
    return Reduction210Family(Reduction210FamilyParams(a0, b0, q or {}))


def boussinesq_bracket(a0=1, b0=None) -> BoussinesqFamily:
    return BoussinesqFamily(a0, b0)


# ---------------------------------------------------------------------------
# evaluation


def bracket_eval(P: PoissonCoeffs, f, g) -> LaurentPoly:
    """Leibniz extension: ``{x^a, x^b} = (a^T P b) x^(a+b)``, bilinear in f, g."""
    f = LaurentPoly.coerce(f)
    g = LaurentPoly.coerce(g)
    out: dict = {}
    cache: dict = {}
    for m1, c1 in f.terms.items():
        for m2, c2 in g.terms.items():
            coef = ZERO
            for a, e1 in m1:
                for b, e2 in m2:
                    if a == b:
                        continue
                    key = (a, b)
                    v = cache.get(key)
                    if v is None:
                        if not P.covers(a):
                            raise UncoveredVariable(a)
                        if not P.covers(b):
                            raise UncoveredVariable(b)
                        v = cache[key] = P.p(a, b)
                    coef += e1 * e2 * v
            if coef:
                m = m1 * m2
                out[m] = out.get(m, ZERO) + c1 * c2 * coef
    return LaurentPoly(out)


def jacobi_residual(P: PoissonCoeffs, i: VertexLabel, j: VertexLabel, k: VertexLabel) -> LaurentPoly:
    xi, xj, xk = (LaurentPoly.var(v) for v in (i, j, k))
    return (bracket_eval(P, xi, bracket_eval(P, xj, xk))
            + bracket_eval(P, xj, bracket_eval(P, xk, xi))
            + bracket_eval(P, xk, bracket_eval(P, xi, xj)))


# ---------------------------------------------------------------------------
# compatibility with an exchange matrix


@dataclass
class CompatibilityResult:
    kind: str  # "Diagonal" or "NotDiagonal"
    diag: dict = field(default_factory=dict)
    witness: tuple | None = None
    boundary: list = field(default_factory=list)
    checked: int = 0

    @property
    def diagonal(self) -> bool:
        return self.kind == "Diagonal"

    @property
    def zero(self) -> bool:
        return self.diagonal and not any(self.diag.values())

    def lines(self) -> list:
        if self.diagonal:
            vals = sorted(set(self.diag.values()))
            return [f"Diagonal entries={len(self.diag)} values={','.join(str(v) for v in vals)}"
                    f" boundary={len(self.boundary)}"]
        (i, j), v = self.witness
        return [f"NotDiagonal witness={i.render()},{j.render()} value={v}"]


def pb_entry(P: PoissonCoeffs, B: ExchangeMatrix, i: VertexLabel, j: VertexLabel, var_map=None) -> Fraction:
    f = var_map or (lambda lab: lab)
    col = B.row(j)  # b_jl = -b_lj
    return sum((P.p(f(i), f(l)) * -x for l, x in col.items()), ZERO)


def compatibility_check(P: PoissonCoeffs, B: ExchangeMatrix, interior: Sequence[VertexLabel] | None = None,
                        var_map: Callable | None = None) -> CompatibilityResult:
    """Compute ``PB`` over the window and classify it.

    Only rows and columns in ``interior`` (default: all labels) are classified;
    the other labels are reported as boundary.  ``var_map`` translates matrix
    labels to the labels understood by ``P``.
    """
    f = var_map or (lambda lab: lab)
    for lab in B.labels:
        if not P.covers(f(lab)):
            raise DimensionMismatch(f"{lab.render()} is not covered by the bracket")
    inner = list(B.labels) if interior is None else list(interior)
    inner_set = set(inner)
    boundary = [lab for lab in B.labels if lab not in inner_set]
    diag = {}
    checked = 0
    for i in inner:
        for j in inner:
            v = pb_entry(P, B, i, j, f)
            checked += 1
            if i == j:
                diag[i] = v
            elif v:
                return CompatibilityResult("NotDiagonal", {}, ((i, j), v), boundary, checked)
    return CompatibilityResult("Diagonal", diag, None, boundary, checked)


def _column_ok(P, B, k, f=None):
    for i in B.labels:
        if i != k and pb_entry(P, B, i, k, f):
            return False, i
    return True, None


def poisson_mutate(P: PoissonCoeffs, B: ExchangeMatrix, k: VertexLabel, scope: str = "full") -> ExplicitWindow:
    """Coefficients of the bracket in the mutated cluster.

    ``p'_ik = -p_ik + sum_{l: b_lk > 0} b_lk p_il`` (and skew), other entries
    unchanged.  ``scope="full"`` demands ``PB`` diagonal on the whole window;
    ``scope="column"`` only demands column ``k`` of ``PB`` to vanish off the
    diagonal, which is what a single mutation needs (useful on windows cut out
    of an infinite quiver, whose boundary rows are never diagonal).
    """
    if scope == "full":
        res = compatibility_check(P, B)
        if not res.diagonal:
            raise NotCompatible(f"PB is not diagonal: {res.lines()[0]}")
    else:
        ok, wit = _column_ok(P, B, k)
        if not ok:
            raise NotCompatible(f"(PB)[{wit.render()},{k.render()}] is nonzero")
    labels = list(B.labels)
    table = {}
    col = {l: -x for l, x in B.row(k).items()}  # b_lk
    for i in labels:
        for j in labels:
            if i >= j:
                continue
            if i == k:
                v = -P.p(k, j) + sum((x * P.p(l, j) for l, x in col.items() if x > 0), ZERO)
            elif j == k:
                v = -P.p(i, k) + sum((x * P.p(i, l) for l, x in col.items() if x > 0), ZERO)
            else:
                v = P.p(i, j)
            if v:
                table[(i, j)] = v
    return ExplicitWindow(table, labels)


def _is_multiple(h: LaurentPoly, t: LaurentPoly):
    """``(True, c)`` if ``h == c * t`` for a rational ``c``."""
    if h.is_zero():
        return True, ZERO
    ht, tt = h.terms, t.terms
    if set(ht) != set(tt):
        return False, None
    ratios = {ht[m] / tt[m] for m in tt}
    if len(ratios) != 1:
        return False, None
    return True, ratios.pop()


def induced_bracket_check(P: PoissonCoeffs, B: ExchangeMatrix, k: VertexLabel, pairs=None):
    """Symbolically test log-canonical form after mutating at ``k``.

    Returns ``(ok, witness, coefficients)``: ``coefficients[(i, j)]`` is the
    scalar ``c`` with ``{x_i', x_j'} = c x_i' x_j'`` for each pair involving
    ``k`` (pairs not involving ``k`` are unchanged).
    """
    seed = seed_mutate(Seed.initial(B), k)
    xk = seed.vars[k]
    coeffs = {}
    for i in B.labels if pairs is None else pairs:
        if i == k:
            continue
        xi = seed.vars[i]
        h = bracket_eval(P, xi, xk)
        ok, c = _is_multiple(h, xi * xk)
        if not ok:
            return False, (i, k), coeffs
        coeffs[(i, k)] = c
    return True, None, coeffs


def verify_induced_bracket(P: PoissonCoeffs, B: ExchangeMatrix, k: VertexLabel, scope: str = "full") -> bool:
    """Cross-check the coefficient mutation rule by symbolic expansion."""
    Pm = poisson_mutate(P, B, k, scope)
    ok, _, coeffs = induced_bracket_check(P, B, k)
    if not ok:
        return False
    return all(Pm.p(i, kk) == c for (i, kk), c in coeffs.items())


# ---------------------------------------------------------------------------
# Hamiltonian test


@dataclass
class HamiltonianVerdict:
    holds: bool
    witnesses: list = field(default_factory=list)
    window: tuple = ()
    checked: int = 0
    skipped: int = 0
    generators: int = 0
    variables: int = 0

    def lines(self, limit: int = 5) -> list:
        box = " ".join(f"{lo}:{hi}" for lo, hi in self.window)
        if self.holds:
            return [f"OK window={box} generators={self.generators} variables={self.variables} "
                    f"checked={self.checked} skipped={self.skipped}"]
        out = []
        for site, var, exp, got in self.witnesses[:limit]:
            out.append(f"FAIL site={site.render()} var={var.render()} expected={exp} got={got}")
        out.append(f"FAIL-SUMMARY failures={len(self.witnesses)} checked={self.checked} skipped={self.skipped}")
        return out


def _box(window, dim) -> tuple:
    if isinstance(window[0], int):
        return tuple((window[0], window[1]) for _ in range(dim))
    return tuple(tuple(w) for w in window)


def _generator_shape(model):
    return [(sgn, (a, b)) for sgn, (a, b) in model.equation]


def ideal_stability_check(P: PoissonCoeffs, model, window, fast: bool = True, max_witnesses: int = 50) -> HamiltonianVerdict:
    """For every generator inside the box and every box variable ``x``, test
    that the generator monomials share one bracket coefficient against ``x``.

    Pairs needing coefficients the rule does not cover are skipped and
    counted; at least one pair must be checkable.
    """
    dim = model.dim
    box = _box(window, dim)
    shape = _generator_shape(model)
    offs = [o for _, pair in shape for o in pair]
    lo_off = [min(o[i] for o in offs) for i in range(dim)]
    hi_off = [max(o[i] for o in offs) for i in range(dim)]
    anchors_rng = [range(lo - a, hi - b + 1) for (lo, hi), a, b in zip(box, lo_off, hi_off)]
    if any(len(r) == 0 for r in anchors_rng):
        raise WindowTooSmall("window holds no complete generator")
    if any(hi - lo < (b - a) + 2 for (lo, hi), a, b in zip(box, lo_off, hi_off)):
        raise WindowTooSmall("window needs one variable beyond each side of a generator")
    var_rng = [range(lo, hi + 1) for lo, hi in box]
    n_anchor = 1
    n_var = 1
    for r in anchors_rng:
        n_anchor *= len(r)
    for r in var_rng:
        n_var *= len(r)

    def coeffs_for(x: VertexLabel, v: VertexLabel):
        out = []
        for _, (a, b) in shape:
            out.append(P.p(x, v.shifted(a)) + P.p(x, v.shifted(b)))
        return out

    witnesses = []
    checked = skipped = 0
    if fast and P.translation_invariant:
        # the test depends on x - v only
        drng = [range(vl.start - ar[-1], vl[-1] - ar.start + 1) for vl, ar in zip(var_rng, anchors_rng)]
        origin = VertexLabel(tuple([0] * dim))
        for d in itertools.product(*drng):
            count = 1
            for di, vl, ar in zip(d, var_rng, anchors_rng):
                # anchors v in ar with v + di in vl
                lo = max(ar.start, vl.start - di)
                hi = min(ar[-1], vl[-1] - di)
                count *= max(0, hi - lo + 1)
            if not count:
                continue
            x = VertexLabel(tuple(d))
            try:
                cs = coeffs_for(x, origin)
            except UncoveredVariable:
                skipped += count
                continue
            checked += count
            if len(set(cs)) > 1:
                v = VertexLabel(tuple(max(ar.start, vl.start - di) for di, vl, ar in zip(d, var_rng, anchors_rng)))
                xx = v.shifted(d)
                bad = next(c for c in cs if c != cs[0])
                witnesses.append((v, xx, cs[0], bad))
    else:
        for vc in itertools.product(*anchors_rng):
            v = VertexLabel(vc)
            for xc in itertools.product(*var_rng):
                x = VertexLabel(xc)
                try:
                    cs = coeffs_for(x, v)
                except UncoveredVariable:
                    skipped += 1
                    continue
                checked += 1
                if len(set(cs)) > 1:
                    bad = next(c for c in cs if c != cs[0])
                    witnesses.append((v, x, cs[0], bad))
    if checked == 0:
        raise WindowTooSmall("no generator/variable pair is covered by the bracket")
    witnesses.sort(key=lambda w: (w[0], w[1]))
    return HamiltonianVerdict(not witnesses, witnesses[:max_witnesses] if max_witnesses else witnesses,
                              box, checked, skipped, n_anchor, n_var)


def ideal_defects(P: PoissonCoeffs, model, window) -> dict:
    """Linear defects of the Hamiltonian test for a translation-invariant rule.

    Returns ``{(offset, t): c_t - c_0}`` over the covered offsets ``x - v``
    occurring in the box; the test passes exactly when all values vanish.
    The map ``P -> defects`` is linear, which is what makes families and
    pencils certifiable from a basis.
    """
    if not P.translation_invariant:
        raise TypeError("defect vectors need a translation-invariant rule")
    dim = model.dim
    box = _box(window, dim)
    shape = _generator_shape(model)
    offs = [o for _, pair in shape for o in pair]
    lo_off = [min(o[i] for o in offs) for i in range(dim)]
    hi_off = [max(o[i] for o in offs) for i in range(dim)]
    anchors_rng = [range(lo - a, hi - b + 1) for (lo, hi), a, b in zip(box, lo_off, hi_off)]
    if any(len(r) == 0 for r in anchors_rng):
        raise WindowTooSmall("window holds no complete generator")
    var_rng = [range(lo, hi + 1) for lo, hi in box]
    drng = [range(vl.start - ar[-1], vl[-1] - ar.start + 1) for vl, ar in zip(var_rng, anchors_rng)]
    out = {}
    for d in itertools.product(*drng):
        cs = []
        try:
            for _, (a, b) in shape:
                da = tuple(x - y for x, y in zip(a, d))
                db = tuple(x - y for x, y in zip(b, d))
                cs.append(P.g(da) + P.g(db))
        except UncoveredVariable:
            continue
        for t in range(1, len(cs)):
            out[(d, t)] = cs[t] - cs[0]
    return out


@dataclass
class PencilReport:
    holds: bool
    verdicts: dict = field(default_factory=dict)
    certificate: str = ""

    def lines(self) -> list:
        out = []
        for lam, v in self.verdicts.items():
            out.append(f"lambda={lam} {'OK' if v.holds else 'FAIL'} checked={v.checked}")
        out.append(self.certificate)
        return out


def pencil_check(P1: PoissonCoeffs, P2: PoissonCoeffs, model, lambdas: Sequence, window) -> PencilReport:
    """Test ``P2 - lambda P1`` for each sample ``lambda`` and both endpoints.

    The Hamiltonian conditions are linear in the coefficients, so when the
    endpoints ``P1`` and ``P2`` both pass, every member of the pencil passes;
    the sampled values are checked in addition and reported.
    """
    lambdas = [as_rational(l) for l in lambdas]
    verdicts = {}
    e1 = ideal_stability_check(P1, model, window)
    e2 = ideal_stability_check(P2, model, window)
    verdicts["P1"] = e1
    verdicts["P2"] = e2
    for lam in lambdas:
        verdicts[str(lam)] = ideal_stability_check(Combination([(1, P2), (-lam, P1)]), model, window)
    holds = all(v.holds for v in verdicts.values())
    distinct = len(set(lambdas))
    if holds and distinct >= 2:
        cert = (f"CERTIFIED pencil P2 - lambda*P1 for all rational lambda: the conditions are linear in P, "
                f"both endpoints pass, and {distinct} sampled values agree")
    elif holds:
        cert = "PASS on samples; fewer than two distinct lambda values, no pencil certificate"
    else:
        cert = "FAILED pencil"
    return PencilReport(holds and distinct >= 2, verdicts, cert)


# ---------------------------------------------------------------------------
# text format


_FAMILIES = ("kdv", "b210", "boussinesq", "inoue", "explicit", "offsets")


def parse_bracket(text: str) -> PoissonCoeffs:
    """Parse a bracket description.

    First line (the word ``bracket`` is optional)::

        bracket kdv a0=<r> q1=<r> ... [simplified=1]
        bracket b210 a0=<r> b0=<r> q1=<r> ...
        bracket boussinesq a0=<r> [b0=<r>]
        bracket inoue a0=<r> b0=<r> c0=<r>
        bracket explicit
        bracket offsets

    followed by ``p <label> <label> <value>`` override lines (for any family)
    or ``g <d1,d2,...> <value>`` lines (for ``offsets``).
    """
    lines = [(no, raw.split("#", 1)[0].strip()) for no, raw in enumerate(text.splitlines(), 1)]
    lines = [(no, l) for no, l in lines if l]
    if not lines:
        raise ParseError("empty bracket description")
    no, head = lines[0]
    tok = head.split()
    if tok[0] == "bracket":
        tok = tok[1:]
    if not tok or tok[0] not in _FAMILIES:
        raise ParseError(f"unknown bracket family in {head!r}", no)
    fam = tok[0]
    kv = {}
    for t in tok[1:]:
        if "=" not in t:
            raise ParseError(f"expected key=value, got {t!r}", no)
        k, v = t.split("=", 1)
        try:
            kv[k] = as_rational(v)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational {v!r}", no) from exc
    q = {int(k[1:]): v for k, v in kv.items() if k.startswith("q") and k[1:].lstrip("-").isdigit()}
    try:
        if fam == "kdv":
            base = KdVFamily(KdVFamilyParams(kv.get("a0", 0), q), bool(kv.get("simplified", 0)))
        elif fam == "b210":
            base = b210_bracket(kv.get("a0", 0), kv.get("b0", 0), q)
        elif fam == "boussinesq":
            base = BoussinesqFamily(kv.get("a0", 0), kv.get("b0"))
        elif fam == "inoue":
            base = InoueFamily(InoueFamilyParams(kv.get("a0", 0), kv.get("b0", 0), kv.get("c0", 0)))
        else:
            base = None
    except (OddnessViolation, SkewnessViolation) as exc:
        raise ParseError(str(exc), no) from exc
    table = {}
    gtable = {}
    for no, line in lines[1:]:
        t = line.split()
        try:
            if t[0] == "p" and len(t) == 4:
                table[(parse_label(t[1]), parse_label(t[2]))] = as_rational(t[3])
            elif t[0] == "g" and len(t) == 3 and fam == "offsets":
                gtable[tuple(int(c) for c in t[1].split(","))] = as_rational(t[2])
            else:
                raise ParseError(f"unexpected line {line!r}", no)
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed line {line!r}", no) from exc
    try:
        if fam == "offsets":
            if table:
                return ExplicitWindow(table, base=OffsetTable(gtable))
            return OffsetTable(gtable)
        if table or fam == "explicit":
            return ExplicitWindow(table, base=base)
    except SkewnessViolation as exc:
        raise ParseError(str(exc)) from exc
    return base
