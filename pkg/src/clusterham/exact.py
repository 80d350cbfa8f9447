"""Exact rationals, lattice labels and Laurent polynomials.

Coefficients are :class:`fractions.Fraction` values, which already keep
numerator and denominator reduced with a positive denominator.  Variables
are :class:`VertexLabel` values, and a Laurent polynomial is a canonical
map from :class:`Monomial` to nonzero coefficient.

Examples
--------
>>> x1, x2, x3, x4 = (LaurentPoly.var(VertexLabel((i,))) for i in range(1, 5))
>>> x5 = (x2 * x4 + x3 * x3).div_by_monomial(Monomial.of(VertexLabel((1,))))
>>> print(x5)
1 * x[1]^-1 * x[2]^1 * x[4]^1 + 1 * x[1]^-1 * x[3]^2
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import DivisionByZero, ParseError

Rational = Fraction

_PREFIX = {1: "x", 2: "s", 3: "t"}


def as_rational(value) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction (never a float)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, _RationalABC):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


class VertexLabel(NamedTuple):
    """A lattice site, ``coords`` in Z^d, with an optional integer tag.

    Labels are ordered by ``(coords, tag)`` with an absent tag sorting first.
    """

    coords: tuple
    tag: int | None = None

    def _key(self):
        return (self.coords, self.tag is not None, 0 if self.tag is None else self.tag)

    def __lt__(self, other):
        return self._key() < other._key()

    def __le__(self, other):
        return self._key() <= other._key()

    def __gt__(self, other):
        return self._key() > other._key()

    def __ge__(self, other):
        return self._key() >= other._key()

    @property
    def dim(self) -> int:
        return len(self.coords)

    def shifted(self, delta) -> "VertexLabel":
        return VertexLabel(tuple(a + b for a, b in zip(self.coords, delta)), self.tag)

    def render(self) -> str:
        inner = ",".join(str(c) for c in self.coords)
        if self.tag is not None:
            inner += f";{self.tag}"
        return f"{_PREFIX.get(len(self.coords), 'v')}[{inner}]"

    def __str__(self):
        return self.render()


def label(*coords: int, tag: int | None = None) -> VertexLabel:
    """Shorthand constructor: ``label(0, 1)`` is the site s[0,1]."""
    return VertexLabel(tuple(int(c) for c in coords), tag)


def parse_label(text: str) -> VertexLabel:
    """Parse ``s[0,1]``, ``x[3]``, ``t[1,0,-2;4]`` or a bare ``0,1``."""
    text = text.strip()
    body = text
    if "[" in text:
        if not text.endswith("]"):
            raise ParseError(f"bad label {text!r}")
        body = text[text.index("[") + 1 : -1]
    tag = None
    if ";" in body:
        body, t = body.split(";", 1)
        tag = int(t)
    try:
        coords = tuple(int(c) for c in body.split(",") if c.strip() != "")
    except ValueError as exc:
        raise ParseError(f"bad label {text!r}") from exc
    if not coords:
        raise ParseError(f"empty label {text!r}")
    return VertexLabel(coords, tag)


class Monomial(tuple):
    """Sorted tuple of ``(VertexLabel, exponent)`` pairs with nonzero exponents."""

    __slots__ = ()

    def __new__(cls, pairs: Iterable = ()):
        acc: dict = {}
        for lab, e in pairs:
            if e:
                acc[lab] = acc.get(lab, 0) + e
        return tuple.__new__(cls, sorted((k, v) for k, v in acc.items() if v))

    @classmethod
    def _raw(cls, sorted_pairs) -> "Monomial":
        return tuple.__new__(cls, sorted_pairs)

    @classmethod
    def of(cls, *labels: VertexLabel, exponent: int = 1) -> "Monomial":
        return cls((lab, exponent) for lab in labels)

    @classmethod
    def from_map(cls, exps: Mapping) -> "Monomial":
        return cls(exps.items())

    def exponents(self) -> dict:
        return dict(self)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not other:
            return self
        if not self:
            return other
        acc = dict(self)
        for lab, e in other:
            v = acc.get(lab, 0) + e
            if v:
                acc[lab] = v
            else:
                del acc[lab]
        return Monomial._raw(sorted(acc.items()))

    def inverse(self) -> "Monomial":
        return Monomial._raw(tuple((lab, -e) for lab, e in self))

    def exponent(self, lab: VertexLabel) -> int:
        for k, e in self:
            if k == lab:
                return e
        return 0

    def variables(self):
        return [lab for lab, _ in self]

    def render(self) -> str:
        return " * ".join(f"{lab.render()}^{e}" for lab, e in self)


ONE_MONOMIAL = Monomial()


class LaurentPoly:
    """Immutable Laurent polynomial with exact rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = as_rational(c)
                if c:
                    if not isinstance(mono, Monomial):
                        mono = Monomial(mono)
                    clean[mono] = clean.get(mono, 0) + c
            clean = {m: c for m, c in clean.items() if c}
        self._terms = clean
        self._hash = None

    @classmethod
    def _from_clean(cls, terms: dict) -> "LaurentPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # constructors ---------------------------------------------------
    @classmethod
    def const(cls, c) -> "LaurentPoly":
        c = as_rational(c)
        return cls._from_clean({ONE_MONOMIAL: c} if c else {})

    @classmethod
    def var(cls, lab: VertexLabel) -> "LaurentPoly":
        return cls._from_clean({Monomial._raw(((lab, 1),)): Fraction(1)})

    @classmethod
    def mono(cls, mono: Monomial, coeff=1) -> "LaurentPoly":
        coeff = as_rational(coeff)
        return cls._from_clean({mono: coeff} if coeff else {})

    @classmethod
    def coerce(cls, value) -> "LaurentPoly":
        if isinstance(value, LaurentPoly):
            return value
        if isinstance(value, Monomial):
            return cls.mono(value)
        if isinstance(value, VertexLabel):
            return cls.var(value)
        return cls.const(value)

    # inspection -----------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        """Terms in canonical monomial order."""
        return sorted(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE_MONOMIAL in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._terms.get(ONE_MONOMIAL, Fraction(0))

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def variables(self) -> list:
        seen = set()
        for mono in self._terms:
            seen.update(lab for lab, _ in mono)
        return sorted(seen)

    # arithmetic -----------------------------------------------------
    def __add__(self, other):
        other = LaurentPoly.coerce(other)
        if len(other._terms) > len(self._terms):
            small, big = self._terms, other._terms
        else:
            small, big = other._terms, self._terms
        out = dict(big)
        for m, c in small.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v += c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return LaurentPoly._from_clean(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._from_clean({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-LaurentPoly.coerce(other))

    def __rsub__(self, other):
        return LaurentPoly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Monomial):
            return LaurentPoly._from_clean({m * other: c for m, c in self._terms.items()})
        other = LaurentPoly.coerce(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = m1 * m2
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return LaurentPoly._from_clean(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if not self.is_monomial():
                raise ValueError("only monomials can be raised to negative powers")
            (m, c), = self._terms.items()
            inv = LaurentPoly._from_clean({m.inverse(): 1 / c})
            return inv ** (-n)
        out = LaurentPoly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def scale(self, c) -> "LaurentPoly":
        c = as_rational(c)
        if not c:
            return LaurentPoly()
        return LaurentPoly._from_clean({m: v * c for m, v in self._terms.items()})

    def div_by_monomial(self, mono: Monomial) -> "LaurentPoly":
        """Multiply by the inverse of ``mono``."""
        return self * mono.inverse()

    # comparison -----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self._terms == other._terms
        try:
            return self._terms == LaurentPoly.const(as_rational(other))._terms
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # evaluation -----------------------------------------------------
    def substitute(self, assignment: Mapping):
        """Substitute values (rationals or Laurent polynomials) for variables.

        Unassigned variables are left as symbols.  Returns a Fraction when the
        result is constant and a LaurentPoly otherwise.
        """
        cache: dict = {}

        def power(lab, e):
            key = (lab, e)
            if key in cache:
                return cache[key]
            val = assignment[lab]
            if isinstance(val, LaurentPoly):
                if e < 0 and not val.is_monomial():
                    if val.is_zero():
                        raise DivisionByZero(f"{lab.render()} evaluates to 0", lab)
                    raise ValueError(f"{lab.render()} is not invertible in the Laurent ring")
                res = val ** e
            else:
                val = as_rational(val)
                if e < 0 and val == 0:
                    raise DivisionByZero(f"{lab.render()} evaluates to 0", lab)
                res = val ** e
            cache[key] = res
            return res

        total = LaurentPoly()
        numeric = Fraction(0)
        for mono, c in self._terms.items():
            factor = c
            rest = []
            poly_factor = None
            for lab, e in mono:
                if lab in assignment:
                    v = power(lab, e)
                    if isinstance(v, LaurentPoly):
                        poly_factor = v if poly_factor is None else poly_factor * v
                    else:
                        factor = factor * v
                else:
                    rest.append((lab, e))
            if not factor:
                continue
            if poly_factor is None and not rest:
                numeric += factor
                continue
            term = LaurentPoly._from_clean({Monomial._raw(tuple(rest)): factor})
            if poly_factor is not None:
                term = term * poly_factor
            total = total + term
        if numeric:
            total = total + numeric
        if total.is_constant():
            return total.constant_value()
        return total

    def is_laurent_integer(self) -> bool:
        return all(c.denominator == 1 for c in self._terms.values())

    # rendering ------------------------------------------------------
    def render(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.items():
            if mono:
                parts.append(f"{c} * {mono.render()}")
            else:
                parts.append(f"{c}")
        return " + ".join(parts)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"LaurentPoly({self.render()!r})"


PolyLike = Union[LaurentPoly, Fraction, int]


def lp_arith(op: str, a: LaurentPoly, b) -> LaurentPoly:
    """Dispatch one of ``add``, ``mul``, ``negate``, ``div_by_monomial``."""
    a = LaurentPoly.coerce(a)
    if op == "add":
        return a + LaurentPoly.coerce(b)
    if op == "mul":
        return a * b if isinstance(b, Monomial) else a * LaurentPoly.coerce(b)
    if op == "negate":
        return -a
    if op == "div_by_monomial":
        if isinstance(b, LaurentPoly):
            if not b.is_monomial() or list(b.terms.values())[0] != 1:
                raise ValueError("div_by_monomial needs a single monic monomial")
            b = next(iter(b.terms))
        if not isinstance(b, Monomial):
            raise TypeError("div_by_monomial needs a Monomial")
        return a.div_by_monomial(b)
    raise ValueError(f"unknown operation {op!r}")


def lp_substitute(p: LaurentPoly, assignment: Mapping):
    return LaurentPoly.coerce(p).substitute(assignment)


def lp_is_laurent_integer(p: LaurentPoly) -> bool:
    return LaurentPoly.coerce(p).is_laurent_integer()


def render_value(value) -> str:
    """Render a Fraction or LaurentPoly in the canonical text form."""
    if isinstance(value, LaurentPoly):
        return value.render()
    return str(as_rational(value))
