from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterham.errors import (
    DimensionMismatch,
    NotCompatible,
    OddnessViolation,
    ParseError,
    SkewnessViolation,
    WindowTooSmall,
)
from clusterham.exact import LaurentPoly, label
from clusterham.models import builtin_model, somos4_matrix
from clusterham.poisson import (
    BoussinesqFamily,
    ExplicitWindow,
    InoueFamilyParams,
    KdVFamily,
    KdVFamilyParams,
    OffsetTable,
    b210_bracket,
    bracket_eval,
    compatibility_check,
    f_map,
    ideal_stability_check,
    induced_bracket_check,
    inoue_solution,
    jacobi_residual,
    kdv_bracket,
    parse_bracket,
    pencil_check,
    poisson_mutate,
    verify_induced_bracket,
)
from clusterham.quiver import ExchangeMatrix, materialize_window
from clusterham.solver import nullspace

from strategies import laurent_polys, random_compatible_pair, rationals, skew_matrices


def _interior(m, lo, hi):
    a, b = m.stencil.interior(lo, hi)
    return [label(i) for i in range(a, b + 1)]


def _var_map(m):
    return lambda lab: m.var_map(lab.coords[0])




# ---------------------------------------------------------------------------
# closed-form families


@pytest.mark.parametrize("params", [dict(a0=1), dict(q={1: 3}), dict(a0=Fraction(2, 3), q={1: -1, 2: 5, 3: Fraction(1, 2)})])
@pytest.mark.parametrize("mid", ["kdv-a", "kdv-b"])
def test_kdv_family_kills_the_exchange_matrix(mid, params):
    m = builtin_model(mid)
    W = materialize_window(m.stencil, -15, 15)
    res = compatibility_check(kdv_bracket(**params), W, _interior(m, -15, 15), _var_map(m))
    assert res.zero, res.lines()
    assert res.boundary


def test_inoue_solution_kills_the_exchange_matrix():
    P = inoue_solution(InoueFamilyParams(
        Fraction(1, 2), 3, -2, {i: i * i for i in range(-9, 9)}, {i: 7 - i for i in range(-9, 9)},
        lambda i, j: Fraction(j - i, 3) + (j - i) ** 3))
    W = materialize_window(builtin_model("kdv-a").stencil, -15, 15)
    assert compatibility_check(P, W, _interior(builtin_model("kdv-a"), -15, 15)).zero


def test_inoue_with_constant_maps_is_the_kdv_family():
    """b0 = 2 a0, c0 = a0, constant maps and q_ij = q_{j-i} give the lattice family."""
    P = inoue_solution(InoueFamilyParams(1, 2, 1, {}, {}, lambda i, j: {1: 5, -1: -5}.get(j - i, 0)))
    m = builtin_model("kdv-a")
    K = kdv_bracket(a0=1, q={1: 5})
    for i in range(-9, 9):
        for j in range(-9, 9):
            assert P.p(label(i), label(j)) == K.p(m.var_map(i), m.var_map(j))


def test_simplified_form_is_a_reparametrization():
    full = KdVFamily(KdVFamilyParams(3, {1: 1, 2: 4}))
    simp = KdVFamily(KdVFamilyParams(3, {1: 1 - 3, 2: 4 - 6}), simplified=True)
    for l in range(-3, 4):
        for n in range(-2, 3):  # q' is only specified up to |m| = 2
            assert full.g((l, n)) == simp.g((l, n))


def test_parameter_validation():
    with pytest.raises(OddnessViolation):
        KdVFamilyParams(1, {1: 2, -1: 2})
    with pytest.raises(OddnessViolation):
        KdVFamilyParams(1, {0: 1})
    with pytest.raises(SkewnessViolation):
        InoueFamilyParams(1, 1, 1, q={(0, 1): 1, (1, 0): 1})
    with pytest.raises(SkewnessViolation):
        ExplicitWindow({(label(1), label(2)): 1, (label(2), label(1)): 1})


def test_f_map_period_three():
    a0, b0 = Fraction(2), Fraction(7)
    assert [f_map(n, a0, b0) for n in range(-3, 4)] == [-a0 - b0, -b0, -a0, 0, a0, b0, a0 + b0]
    assert all(f_map(-n, a0, b0) == -f_map(n, a0, b0) for n in range(20))
    assert all(f_map(n, a0, 2 * a0) == a0 * n for n in range(-20, 20))


# ---------------------------------------------------------------------------
# bracket algebra


P_RANDOM = ExplicitWindow({(label(i), label(j)): Fraction(i * j - 3 * i, j) for i in range(1, 5) for j in range(i + 1, 5)})


@given(laurent_polys(), laurent_polys(), laurent_polys())
@settings(max_examples=60, deadline=None)
def test_leibniz_and_skew(f, g, h):
    assert bracket_eval(P_RANDOM, f, g * h) == bracket_eval(P_RANDOM, f, g) * h + g * bracket_eval(P_RANDOM, f, h)
    assert bracket_eval(P_RANDOM, f, g) == -bracket_eval(P_RANDOM, g, f)


@given(st.lists(rationals, min_size=6, max_size=6))
def test_jacobi_for_constant_coefficients(vals):
    labs = [label(i) for i in range(1, 5)]
    pairs = [(labs[i], labs[j]) for i in range(4) for j in range(i + 1, 4)]
    P = ExplicitWindow(dict(zip(pairs, vals)))
    for i, j, k in [(1, 2, 3), (1, 2, 4), (2, 3, 4)]:
        assert jacobi_residual(P, label(i), label(j), label(k)).is_zero()


def test_bracket_of_monomials():
    P = ExplicitWindow({(label(1), label(2)): 3})
    x1, x2 = LaurentPoly.var(label(1)), LaurentPoly.var(label(2))
    assert bracket_eval(P, x1 * x1, x2 ** -1) == x1 * x1 * x2 ** -1 * -6


# ---------------------------------------------------------------------------
# compatibility and mutation


def test_random_compatible_pairs_mutate_consistently():
    rng = random.Random(7)
    for _ in range(25):
        B, P = random_compatible_pair(rng, rng.randint(2, 5))
        assert compatibility_check(P, B).diagonal
        k = rng.choice(B.labels)
        assert verify_induced_bracket(P, B, k)


def test_somos_solution_space():
    B = somos4_matrix()
    rng = random.Random(1)
    labs = B.labels
    # the 4x4 solve: PB diagonal has a two-dimensional solution space here
    _, P = random_compatible_pair(random.Random(3), 4)
    D = B.to_dense()
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    rows = []
    for i in range(4):
        for j in range(4):
            if i != j:
                row = {}
                for l in range(4):
                    if D[l][j] and l != i:
                        key = (min(i, l), max(i, l))
                        row[key] = row.get(key, 0) + (1 if i < l else -1) * D[l][j]
                row = {kk: Fraction(v) for kk, v in row.items() if v}
                if row:
                    rows.append(row)
    basis = nullspace(rows, pairs)
    assert len(basis) >= 1
    table = {(labs[i], labs[j]): sum(v.get((i, j), 0) * (k + 2) for k, v in enumerate(basis)) for i, j in pairs}
    P = ExplicitWindow(table, labs)
    assert compatibility_check(P, B).diagonal
    assert verify_induced_bracket(P, B, labs[0])


def test_incompatible_bracket_is_rejected_and_not_log_canonical():
    B = somos4_matrix()
    P = ExplicitWindow({(label(1), label(2)): 1}, B.labels)
    assert not compatibility_check(P, B).diagonal
    with pytest.raises(NotCompatible):
        poisson_mutate(P, B, label(1))
    # column 1 of PB happens to vanish, so that single mutation stays log-canonical
    assert induced_bracket_check(P, B, label(1))[0]
    ok, witness, _ = induced_bracket_check(P, B, label(3))
    assert not ok and witness[1] == label(3)


def test_dimension_mismatch():
    P = ExplicitWindow({(label(1), label(2)): 1})
    with pytest.raises(DimensionMismatch):
        compatibility_check(P, somos4_matrix())


def test_kdv_window_mutation_follows_the_family():
    m = builtin_model("kdv-a")
    W = materialize_window(m.stencil, -15, 15)
    K = kdv_bracket(a0=1, q={1: 3, 2: -2})
    Pw = ExplicitWindow({(a, b): K.p(m.var_map(a.coords[0]), m.var_map(b.coords[0]))
                         for a in W.labels for b in W.labels if a < b}, W.labels)
    k = label(0)
    Pm = poisson_mutate(Pw, W, k, scope="column")

    def site(lab):
        s = m.var_map(lab.coords[0])
        return s.shifted(m.step) if lab == k else s

    for a in W.labels:
        for b in W.labels:
            assert Pm.p(a, b) == K.p(site(a), site(b))
    assert verify_induced_bracket(Pw, W, k, scope="column")
    with pytest.raises(NotCompatible):
        poisson_mutate(Pw, W, k)  # boundary rows are not diagonal


# ---------------------------------------------------------------------------
# Hamiltonian test


@pytest.mark.parametrize("mid", ["kdv-a", "kdv-b", "b210"])
def test_kdv_family_is_hamiltonian(mid):
    v = ideal_stability_check(kdv_bracket(a0=1, q={1: 3}), builtin_model(mid), (-8, 8))
    assert v.holds and v.checked > 0 and v.skipped == 0


def test_period_three_part_separates_the_models():
    chi = BoussinesqFamily(0, 1)
    assert not ideal_stability_check(chi, builtin_model("kdv-a"), (-6, 6)).holds
    assert ideal_stability_check(chi, builtin_model("boussinesq"), (-6, 6)).holds
    assert ideal_stability_check(chi, builtin_model("b210"), (-6, 6)).holds
    assert ideal_stability_check(b210_bracket(1, 5, {1: 2}), builtin_model("b210"), (-6, 6)).holds


def test_perturbation_is_caught_next_to_the_perturbed_site():
    m = builtin_model("kdv-a")
    K = kdv_bracket(a0=1, q={1: 3})
    bad = ExplicitWindow({(label(0, 0), label(1, 0)): K.p(label(0, 0), label(1, 0)) + 1}, base=K)
    v = ideal_stability_check(bad, m, (-6, 6))
    assert not v.holds
    for site, var, exp, got in v.witnesses:
        assert exp != got
        assert var in (label(0, 0), label(1, 0))
        gen_sites = {site.shifted(a) for _, pair in m.equation for a in pair}
        assert gen_sites & {label(0, 0), label(1, 0)}
    assert v.lines()[0].startswith("FAIL site=")


def test_fast_path_agrees_with_direct_enumeration():
    m = builtin_model("boussinesq")
    for P in (BoussinesqFamily(1, 5), kdv_bracket(a0=1)):
        fast = ideal_stability_check(P, m, (-4, 4))
        slow = ideal_stability_check(P, m, (-4, 4), fast=False)
        assert (fast.holds, fast.checked) == (slow.holds, slow.checked)
        assert fast.witnesses[:1] == slow.witnesses[:1]


def test_partial_tables_skip_uncovered_pairs():
    K = kdv_bracket(a0=1)
    table = {(dl, dn): K.g((dl, dn)) for dl in range(-3, 4) for dn in range(-3, 4)}
    v = ideal_stability_check(OffsetTable(table), builtin_model("kdv-a"), (-6, 6))
    assert v.holds and v.skipped > 0 and v.checked > 0
    with pytest.raises(WindowTooSmall):
        ideal_stability_check(OffsetTable({(0, 1): 1}), builtin_model("kdv-a"), (-6, 6))
    with pytest.raises(WindowTooSmall):
        ideal_stability_check(K, builtin_model("kdv-a"), (0, 2))


def test_pencil():
    m = builtin_model("kdv-a")
    rep = pencil_check(kdv_bracket(a0=1), kdv_bracket(q={1: 1}), m, [0, 1, -2, 7], (-6, 6))
    assert rep.holds and rep.certificate.startswith("CERTIFIED")
    bad = pencil_check(kdv_bracket(a0=1), BoussinesqFamily(0, 1), m, [0, 1], (-6, 6))
    assert not bad.holds
    few = pencil_check(kdv_bracket(a0=1), kdv_bracket(q={1: 1}), m, [1], (-6, 6))
    assert not few.holds and "no pencil certificate" in few.certificate


# ---------------------------------------------------------------------------
# text format


@pytest.mark.parametrize("text", [
    "kdv a0=1 q1=3",
    "bracket kdv a0=1/2 q1=3 q3=-1",
    "bracket kdv a0=1 simplified=1",
    "bracket b210 a0=1 b0=5 q1=2",
    "bracket boussinesq a0=1",
    "bracket boussinesq a0=1 b0=3",
    "bracket offsets\ng 0,1 2\ng 1,-1 1/3\n",
    "bracket explicit\np s[0,0] s[1,0] 3\np s[0,0] s[0,1] -1\n",
    "bracket kdv a0=1\np s[0,0] s[1,0] 9\n",
])
def test_bracket_text_roundtrip(text):
    P = parse_bracket(text)
    Q = parse_bracket(P.to_text())
    for a in [label(0, 0), label(1, 0), label(0, 1)]:
        for b in [label(0, 0), label(1, 0), label(0, 1)]:
            try:
                want = P.p(a, b)
            except Exception:
                continue
            assert Q.p(a, b) == want


@pytest.mark.parametrize("text, line", [
    ("bracket nosuch a0=1", 1),
    ("bracket kdv a0=0.5", 1),
    ("bracket kdv q0=1", 1),
    ("bracket explicit\np s[0,0] 3\n", 2),
    ("bracket explicit\nq s[0,0] s[1,0] 3\n", 2),
])
def test_bracket_parse_errors(text, line):
    with pytest.raises(ParseError) as err:
        parse_bracket(text)
    assert err.value.line == line
