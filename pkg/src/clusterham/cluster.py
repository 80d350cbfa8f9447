"""Seeds, seed mutation and iteration of lattice difference equations.

A composite step mutates every vertex on the lowest level of the current
band of a :class:`~clusterham.quiver.LatticeQuiver`.  The mutated value at
``c`` is recorded at the lattice site ``c + step``.  Only orbit vertices whose
whole exchange neighbourhood is known are mutated, so the computable region
shrinks with each step rather than silently using truncated quivers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from sympy.polys.domains import QQ
from sympy.polys.orderings import lex
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import ring

from .errors import BudgetExceeded, DivisionByZero, MissingInitialData, ParseError, UnknownLabel
from .exact import LaurentPoly, Monomial, VertexLabel, as_rational, parse_label, render_value
from .quiver import ExchangeMatrix, matrix_mutate

DEFAULT_BUDGET = 200_000


def term_budget() -> int:
    """Term-count cap for symbolic values, from ``CLUSTERHAM_BUDGET``."""
    raw = os.environ.get("CLUSTERHAM_BUDGET")
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    return int(raw)


@dataclass(frozen=True)
class NonLaurent:
    """A quotient that is not a Laurent polynomial: ``num / den``."""

    num: LaurentPoly
    den: LaurentPoly

    def render(self) -> str:
        return f"({self.num.render()}) / ({self.den.render()})"

    def __str__(self):
        return self.render()


# ---------------------------------------------------------------------------
# exact division in the Laurent ring


def _shift_to_polynomial(polys):
    """Common monomial ``m`` with every ``p * m`` a polynomial."""
    low: dict = {}
    for p in polys:
        for mono in p.terms:
            for lab, e in mono:
                if e < low.get(lab, 0):
                    low[lab] = e
    return Monomial((lab, -e) for lab, e in low.items())


def laurent_divide(num: LaurentPoly, den: LaurentPoly):
    """Exact quotient ``num / den`` in the Laurent ring, or :class:`NonLaurent`."""
    if den.is_zero():
        raise DivisionByZero("division by the zero polynomial")
    if den.is_monomial():
        (mono, c), = den.terms.items()
        return num.div_by_monomial(mono).scale(1 / c)
    shift_n = _shift_to_polynomial([num])
    shift_d = _shift_to_polynomial([den])
    pn = num * shift_n
    pd = den * shift_d
    labels = sorted(set(pn.variables()) | set(pd.variables()))
    if not labels:
        return num.scale(1 / den.constant_value())
    pos = {lab: i for i, lab in enumerate(labels)}
    R, *_ = ring([f"g{i}" for i in range(len(labels))], QQ, lex)

    def to_ring(p):
        out = {}
        for mono, c in p.terms.items():
            exps = [0] * len(labels)
            for lab, e in mono:
                exps[pos[lab]] = e
            out[tuple(exps)] = QQ(c.numerator, c.denominator)
        return R(out)

    try:
        q = to_ring(pn).exquo(to_ring(pd))
    except ExactQuotientFailed:
        return NonLaurent(num, den)
    terms = {}
    for exps, c in q.terms():
        mono = Monomial((labels[i], e) for i, e in enumerate(exps) if e)
        terms[mono] = Fraction(int(c.numerator), int(c.denominator))
    # num/den = (pn/shift_n) / (pd/shift_d) = q * shift_d / shift_n
    return LaurentPoly(terms) * (shift_d * shift_n.inverse())


# ---------------------------------------------------------------------------
# seeds


@dataclass(frozen=True)
class Seed:
    """Exchange matrix plus one cluster variable per vertex."""

    matrix: ExchangeMatrix
    vars: Mapping

    @staticmethod
    def initial(matrix: ExchangeMatrix) -> "Seed":
        return Seed(matrix, {lab: LaurentPoly.var(lab) for lab in matrix.labels})

    def __post_init__(self):
        if set(self.vars) != set(self.matrix.labels):
            raise ValueError("seed variables must match the matrix labels")


def _power_product(values: list):
    out = None
    for val, e in values:
        term = val ** e
        out = term if out is None else out * term
    return Fraction(1) if out is None else out


def exchange_value(B: ExchangeMatrix, values: Mapping, k: VertexLabel):
    """``(prod_{b_kj>0} x_j^{b_kj} + prod_{b_kj<0} x_j^{-b_kj}) / x_k``."""
    row = B.row(k)
    out_p = _power_product([(values[j], x) for j, x in sorted(row.items()) if x > 0])
    in_p = _power_product([(values[j], -x) for j, x in sorted(row.items()) if x < 0])
    num = out_p + in_p
    den = values[k]
    if isinstance(num, LaurentPoly) or isinstance(den, LaurentPoly):
        num = LaurentPoly.coerce(num)
        if isinstance(den, NonLaurent):
            raise ValueError(f"cannot divide by the non-Laurent value at {k.render()}")
        den = LaurentPoly.coerce(den)
        if den.is_zero():
            raise DivisionByZero(f"zero denominator at {k.render()}", k)
        return laurent_divide(num, den)
    if den == 0:
        raise DivisionByZero(f"zero denominator at {k.render()}", k)
    return Fraction(num) / den


def seed_mutate(s: Seed, k: VertexLabel) -> Seed:
    """Seed mutation: exchange relation at ``k`` plus matrix mutation."""
    if k not in s.matrix:
        raise UnknownLabel(k)
    new = exchange_value(s.matrix, s.vars, k)
    vars_ = dict(s.vars)
    vars_[k] = new
    return Seed(matrix_mutate(s.matrix, k), vars_)


# ---------------------------------------------------------------------------
# iteration


@dataclass
class IterationTrace:
    model_id: str
    steps: int
    produced: list = field(default_factory=list)
    initial: dict = field(default_factory=dict)
    symbolic: bool = False

    def values(self) -> dict:
        out = dict(self.initial)
        out.update(self.produced)
        return out

    def lines(self) -> list:
        return [f"{lab.render()} = {render_value(v) if not isinstance(v, NonLaurent) else v.render()}"
                for lab, v in self.produced]


def _num_terms(value) -> int:
    if isinstance(value, LaurentPoly):
        return len(value)
    if isinstance(value, NonLaurent):
        return len(value.num) + len(value.den)
    return 1


def iterate_model(model, initial: Mapping, steps: int, budget: int | None = None) -> IterationTrace:
    """Run ``steps`` composite mutations of ``model`` from ``initial`` data.

    ``initial`` maps lattice labels to rationals, or to the string ``"sym"``
    for a symbolic variable.  Every label must lie in the initial band of
    levels of the model's lattice quiver.
    """
    lq = model.lattice
    budget = term_budget() if budget is None else budget
    state: dict = {}
    symbolic = False
    for lab, val in initial.items():
        if not isinstance(lab, VertexLabel):
            lab = VertexLabel(tuple(lab))
        if lab.dim != lq.dim or not lq.contains(lab.coords):
            raise MissingInitialData(f"{lab.render()} is outside the initial band of {model.id}")
        if isinstance(val, str) and val == "sym":
            state[lab] = LaurentPoly.var(lab)
            symbolic = True
        elif isinstance(val, LaurentPoly):
            state[lab] = val
            symbolic = True
        else:
            state[lab] = as_rational(val)
    trace = IterationTrace(model.id, steps, [], dict(state), symbolic)
    base_rules = lq.rules
    for t in range(steps):
        bottom = lq.base + t
        orbit = sorted(lab for lab in state if lq.level_of(lab.coords) == bottom)
        ready = [c for c in orbit if all(c.shifted(d) in state for d in base_rules[0])]
        if not ready:
            raise MissingInitialData(f"{model.id}: step {t + 1} has no orbit vertex with a complete neighbourhood")
        labels = sorted(state)
        ent = {}
        for u in labels:
            rel = lq.level_of(u.coords) - bottom
            for d, x in base_rules[rel].items():
                v = u.shifted(d)
                if v in state:
                    ent[(u, v)] = x
        seed = Seed(ExchangeMatrix(labels, ent), dict(state))
        new_state = {lab: v for lab, v in state.items() if lq.level_of(lab.coords) != bottom}
        for c in ready:
            seed = seed_mutate(seed, c)
            val = seed.vars[c]
            if _num_terms(val) > budget:
                raise BudgetExceeded(f"{model.id}: value at step {t + 1} exceeds {budget} terms")
            site = c.shifted(lq.step)
            trace.produced.append((site, val))
            new_state[site] = val
        state = new_state
    return trace


def trace_residuals(trace: IterationTrace, model) -> list:
    """Sites whose defining relation does not vanish after back-substitution."""
    values = trace.values()
    step = model.lattice.step
    bad = []
    for site, _ in trace.produced:
        anchor = site.shifted(tuple(-c for c in step))
        z = model.generator_value(anchor, values)
        if z != 0:
            bad.append(site)
    return bad


def laurent_phenomenon_check(trace: IterationTrace) -> tuple:
    """``(True, None)`` if all produced values are integer Laurent polynomials.

    Otherwise ``(False, label)`` for the first offending site.
    """
    for lab, val in trace.produced:
        if isinstance(val, NonLaurent):
            return False, lab
        if isinstance(val, LaurentPoly):
            if not val.is_laurent_integer():
                return False, lab
        elif Fraction(val).denominator != 1:
            return False, lab
    return True, None


def parse_init(text: str) -> dict:
    """Parse ``init <coords...> <num>/<den>`` and ``init <coords...> sym`` lines."""
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] != "init" or len(tok) < 3:
            raise ParseError("expected 'init <coords...> <value>'", no)
        try:
            if len(tok) == 3 and "[" in tok[1]:
                lab = parse_label(tok[1])
            else:
                lab = VertexLabel(tuple(int(c) for c in tok[1:-1]))
            val = tok[-1]
            val = "sym" if val == "sym" else as_rational(val)
        except (ValueError, TypeError) as exc:
            raise ParseError(f"bad initial datum: {raw.strip()}", no) from exc
        if lab in out:
            raise ParseError(f"duplicate initial datum {lab.render()}", no)
        out[lab] = val
    return out


def dump_init(initial: Mapping) -> str:
    lines = []
    for lab in sorted(initial):
        val = initial[lab]
        shown = "sym" if val == "sym" else str(as_rational(val))
        lines.append("init " + " ".join(str(c) for c in lab.coords) + f" {shown}")
    return "\n".join(lines) + "\n"
