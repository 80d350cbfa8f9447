from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterham.cluster import (
    NonLaurent,
    Seed,
    dump_init,
    exchange_value,
    iterate_model,
    laurent_divide,
    laurent_phenomenon_check,
    parse_init,
    seed_mutate,
    trace_residuals,
)
from clusterham.errors import BudgetExceeded, DivisionByZero, MissingInitialData, ParseError
from clusterham.exact import LaurentPoly, label
from clusterham.models import builtin_model, somos4_matrix

from strategies import skew_matrices

SOMOS_ORACLE = [2, 3, 7, 23, 59, 314, 1529]


def _somos_direct(n):
    x = [1, 1, 1, 1]
    while len(x) < n + 4:
        x.append(Fraction(x[-3] * x[-1] + x[-2] ** 2, x[-4]))
    return x[4:]


def test_first_somos_exchange():
    seed = Seed.initial(somos4_matrix())
    x = {i: LaurentPoly.var(label(i)) for i in range(1, 5)}
    assert exchange_value(seed.matrix, seed.vars, label(1)) == (x[2] * x[4] + x[3] * x[3]).div_by_monomial(
        next(iter(x[1].terms)))


def test_somos_numeric_matches_recurrence():
    m = builtin_model("somos4")
    tr = iterate_model(m, {label(i): 1 for i in range(1, 5)}, 7)
    assert [v for _, v in tr.produced] == SOMOS_ORACLE == _somos_direct(7)
    assert [lab for lab, _ in tr.produced] == [label(i) for i in range(5, 12)]
    assert trace_residuals(tr, m) == []


def test_somos_symbolic_values_are_laurent():
    m = builtin_model("somos4")
    tr = iterate_model(m, {label(i): "sym" for i in range(1, 5)}, 6)
    assert laurent_phenomenon_check(tr) == (True, None)
    assert trace_residuals(tr, m) == []
    ones = {label(i): 1 for i in range(1, 5)}
    assert [v.substitute(ones) for _, v in tr.produced] == SOMOS_ORACLE[:6]


def test_kdv_two_symbolic_steps():
    m = builtin_model("kdv-a")
    init = {lab: "sym" for lab in m.lattice.vertices([(-3, 3), (-3, 3)])}
    tr = iterate_model(m, init, 2)
    assert tr.produced
    assert laurent_phenomenon_check(tr) == (True, None)
    assert trace_residuals(tr, m) == []


def test_kdv_numeric_constant_solution():
    m = builtin_model("kdv-a")
    init = {lab: 1 for lab in m.lattice.vertices([(-4, 4), (-4, 4)])}
    tr = iterate_model(m, init, 3)
    assert trace_residuals(tr, m) == []
    # x_v x_{v+step} = 2 for unit neighbours, so the first layer is all 2
    first = [v for lab, v in tr.produced if m.lattice.level_of(lab.coords) == m.lattice.base + m.lattice.period]
    assert first and set(first) == {2}


def test_non_laurent_quotient_is_reported():
    x1, x2 = LaurentPoly.var(label(1)), LaurentPoly.var(label(2))
    assert isinstance(laurent_divide(x1 + 1, x1 + x2), NonLaurent)
    assert laurent_divide(x1 * x1 - x2 * x2, x1 + x2) == x1 - x2


def test_zero_initial_value_raises_with_site():
    m = builtin_model("somos4")
    init = {label(i): 1 for i in range(1, 5)}
    init[label(1)] = 0
    with pytest.raises(DivisionByZero) as err:
        iterate_model(m, init, 1)
    assert err.value.site == label(1)


def test_budget():
    m = builtin_model("somos4")
    with pytest.raises(BudgetExceeded):
        iterate_model(m, {label(i): "sym" for i in range(1, 5)}, 6, budget=3)


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("CLUSTERHAM_BUDGET", "2")
    m = builtin_model("somos4")
    with pytest.raises(BudgetExceeded):
        iterate_model(m, {label(i): "sym" for i in range(1, 5)}, 2)


def test_missing_initial_data():
    m = builtin_model("kdv-a")
    with pytest.raises(MissingInitialData):
        iterate_model(m, {label(50, 50): 1}, 1)
    with pytest.raises(MissingInitialData):
        iterate_model(m, {label(0, 0): 1}, 1)


def test_init_file_roundtrip_and_errors():
    init = {label(1): Fraction(1, 2), label(2): "sym"}
    assert parse_init(dump_init(init)) == init
    with pytest.raises(ParseError) as err:
        parse_init("init 1 1\ninit 1 2\n")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_init("init 1 0.5\n")


@given(skew_matrices(max_size=4, bound=2), st.data())
@settings(max_examples=40, deadline=None)
def test_seed_mutation_is_an_involution(B, data):
    k = data.draw(st.sampled_from(B.labels))
    s0 = Seed.initial(B)
    s2 = seed_mutate(seed_mutate(s0, k), k)
    assert s2.matrix == B
    assert s2.vars == s0.vars
