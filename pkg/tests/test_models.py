from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clusterham.errors import ReductionMismatch, UnknownModel, UnsupportedReduction
from clusterham.exact import label
from clusterham.models import (
    MODEL_IDS,
    REDUCTIONS,
    Staircase,
    builtin_model,
    load_window,
    model_periodicity,
    reduce_model,
    reduction_spec,
    validate_principles,
)
from clusterham.quiver import ExchangeMatrix, LatticeQuiver, lattice_from_window


@pytest.mark.parametrize("mid", MODEL_IDS)
def test_builtin_models_are_periodic(mid):
    m = builtin_model(mid)
    rep = model_periodicity(m)
    assert rep.ok, rep.lines()


@pytest.mark.parametrize("mid", MODEL_IDS)
def test_principles_hold(mid):
    rep = validate_principles(mid)
    assert rep.ok, rep.lines()


def test_deleted_arrow_breaks_the_principles():
    m = builtin_model("kdv-a")
    W = m.lattice.materialize(m.default_box)
    ent = dict(W.entries())
    c = label(0, 0)
    victim = next(v for v in sorted(W.row(c)))
    ent.pop((c, victim), None)
    ent.pop((victim, c), None)
    rep = validate_principles(m, ExchangeMatrix(W.labels, ent))
    assert not rep.ok
    assert any(c.render() in v for v in rep.violations)


def test_unknown_model():
    with pytest.raises(UnknownModel):
        builtin_model("kdv-z")


def test_kdv_equation_text():
    assert builtin_model("kdv-a").equation_text() == (
        "s[2,1] = (1 * s[0,0]^-1 * s[0,1]^1 * s[2,0]^1 + 1 * s[0,0]^-1 * s[1,0]^1 * s[1,1]^1)")


@given(st.sampled_from([(3, 1), (4, 2), (4, 1), (5, 2)]), st.integers(-200, 200))
def test_staircase_roundtrip(pa, i):
    sc = Staircase(*pa)
    assert sc.index(sc.site(i)) == i
    assert 0 <= sc.level(sc.site(i)) < sc.period or sc.level(sc.site(i)) == i % sc.period


def test_boussinesq_relabelling():
    m = builtin_model("boussinesq")
    for k in range(-3, 4):
        assert m.index_shift(4 * k) == 4 * k - 5
        for r in (1, 2, 3):
            assert m.index_shift(4 * k + r) == 4 * k + r - 1


@pytest.mark.parametrize("mid", ["kdv-a", "kdv-b", "b210"])
def test_plain_relabelling(mid):
    m = builtin_model(mid)
    assert [m.index_shift(i) for i in range(-6, 7)] == list(range(-7, 6))


@pytest.mark.parametrize("source, direction", sorted(REDUCTIONS))
def test_reductions_match_targets(source, direction):
    red = reduce_model(source, direction)
    tgt = builtin_model(reduction_spec(source, direction).target)
    assert red.lattice.rules == tgt.lattice.rules
    assert red.lattice.step == tgt.lattice.step


def test_tampered_reduction_reports_diff():
    src = builtin_model("hirota-miwa-a")
    rules = {t: dict(r) for t, r in src.lattice.rules.items()}
    d, x = next(iter(sorted(rules[0].items())))
    t2 = src.lattice.level_of(d)
    rules[0][d] = 2 * x
    rules[t2][tuple(-c for c in d)] = -2 * x
    lq = dataclasses.replace(src.lattice, rules=rules)
    with pytest.raises(ReductionMismatch) as err:
        reduce_model(dataclasses.replace(src, lattice=lq), (1, 1, 0))
    assert err.value.diff


def test_unsupported_reduction():
    with pytest.raises(UnsupportedReduction):
        reduce_model("hirota-miwa-a", (1, 0, 0))


def test_raw_transcription_is_not_translation_invariant():
    """Undoing the recorded arrow reversal makes the window inconsistent."""
    window, notes = load_window("hirota-miwa-b.hamq")
    assert any("reversed" in n for n in notes)
    a, b = label(3, 0, -1), label(2, 1, -1)
    ent = dict(window.entries())
    x = ent[(a, b)]
    ent[(a, b)], ent[(b, a)] = -x, x
    raw = ExchangeMatrix(window.labels, ent)
    _, conflicts = lattice_from_window(raw, (1, -1, 2), -1, 4, (1, -1, 1), (1, 0, 0))
    assert conflicts
    _, clean = lattice_from_window(window, (1, -1, 2), -1, 4, (1, -1, 1), (1, 0, 0))
    assert clean == []


def test_export_roundtrips_through_formats():
    from clusterham.quiver import parse_quiver, parse_stencil, quiver_to_matrix
    assert parse_stencil(builtin_model("b210").export()) == builtin_model("b210").stencil
    assert quiver_to_matrix(parse_quiver(builtin_model("somos4").export())) == builtin_model("somos4").finite
