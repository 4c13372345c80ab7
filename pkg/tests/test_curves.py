import dataclasses
import json

import pytest
from hypothesis import given, settings, strategies as st

from ltlab.curves import (
    AffineCurve,
    BudgetError,
    FitError,
    affine_line,
    artin_schreier_curve,
    count_points,
    counts_table,
    curve_from_reduction,
    dl_dimension_suite,
    expected_gauss_eigenvalues,
    fit_zeta,
    format_counts_csv,
    identity_aut,
    lefschetz_trace,
    moore_curve,
    moore_torsor,
    mu_scale_aut,
    multisets_match,
    poly_aut,
    ramified_base_curve,
    shift_aut,
    unramified_base_curve,
    x0_translation_prediction,
)
from ltlab.ff import standard_tower
from ltlab.polys import MultiPoly
from ltlab.reduction import reduce_ramified, reduce_unramified

TOL = 1e-9


def brute_clone(curve):
    return dataclasses.replace(curve, counter=("brute",))


# -- counting ---------------------------------------------------------------


def test_affine_line_counts():
    L = affine_line(3)
    assert [count_points(L, k) for k in (1, 2, 3)] == [3, 9, 27]


def test_quadratic_cover_counts():
    C = artin_schreier_curve(3, 1, 2, 1)
    assert [count_points(C, k) for k in (1, 2, 3, 4)] == [3, 15, 27, 63]


def test_quadratic_cover_counts_match_brute():
    C = artin_schreier_curve(3, 1, 2, 1)
    B = brute_clone(C)
    for k in (1, 2, 3):
        assert count_points(C, k) == count_points(B, k)


def test_level_two_curve_counts_and_formula():
    q = 3
    X0 = unramified_base_curve(q)
    formula = [q ** (2 * k + 1) - q * q * (q - 1) * (-q) ** k for k in (1, 2, 3)]
    assert formula == [81, 81, 2673]
    assert [count_points(X0, k) for k in (1, 2)] == formula[:2]
    assert count_points(brute_clone(X0), 1) == 81


def test_moore_curve_counts_and_formula():
    q = 3
    W = moore_curve(q)
    counts = [count_points(W, k) for k in (1, 2, 3, 4)]
    assert counts == [q ** (2 * k) - q - q * (q - 1) * (-q) ** k for k in (1, 2, 3, 4)]
    assert counts[:3] == [24, 24, 888]
    assert count_points(brute_clone(W), 1) == 24


def test_torsor_counts_are_a_multiple_of_the_moore_counts():
    q = 3
    W, T = moore_curve(q), moore_torsor(q)
    assert T.components == q - 1
    for k in (1, 2, 3):
        assert count_points(T, k) == (q - 1) * count_points(W, k)
    assert count_points(T, 1) == 48
    assert count_points(brute_clone(T), 1) == 48


def test_ramified_curve_counts_match_the_quadratic_cover():
    C = artin_schreier_curve(3, 1, 2, 1)
    for level in (1, 3):
        R = ramified_base_curve(3, level)
        for k in (1, 2, 3):
            assert count_points(R, k) == count_points(C, k)


def test_budget_refuses_oversized_extensions():
    C = artin_schreier_curve(3, 1, 2, 1)
    with pytest.raises(BudgetError, match="budget"):
        count_points(C, 40)


# -- curves delivered by the reduction engine -------------------------------


def test_level_one_reduction_counts_like_the_torsor():
    c = curve_from_reduction(reduce_unramified(3, 1))
    T = moore_torsor(3)
    assert c.components == T.components
    for k in (1, 2):
        assert count_points(c, k) == count_points(T, k)


def test_level_two_reduction_counts_like_the_level_two_curve():
    c = curve_from_reduction(reduce_unramified(3, 2))
    X0 = unramified_base_curve(3)
    assert c.components == X0.components
    for k in (1, 2):
        assert count_points(c, k) == count_points(X0, k)


def test_ramified_reduction_counts_like_the_quadratic_cover():
    C = artin_schreier_curve(3, 1, 2, 1)
    for n in (1, 3):
        c = curve_from_reduction(reduce_ramified(3, n))
        for k in (1, 2, 3):
            assert count_points(c, k) == count_points(C, k)


# -- eigenvalue fits --------------------------------------------------------


def test_fit_recovers_the_quadratic_cover_eigenvalues():
    C = artin_schreier_curve(3, 1, 2, 1)
    counts = [count_points(C, k) for k in (1, 2, 3, 4)]
    fit = fit_zeta(counts, base_order=3, dim=2)
    assert fit.method == "newton" and fit.rounded
    assert multisets_match(fit.eigenvalues, [complex(0, 3**0.5), complex(0, -(3**0.5))], TOL)
    assert fit.conjugation_closed()
    for lam in fit.eigenvalues:
        assert abs(abs(lam) - 3**0.5) < TOL  # weight one


def test_fit_matches_the_character_sum_values():
    for q, kmax in ((3, 4), (5, 5)):
        C = artin_schreier_curve(q, 1, 2, 1)
        counts = [count_points(C, k) for k in range(1, kmax + 1)]
        fit = fit_zeta(counts, base_order=q, dim=q - 1)
        assert multisets_match(fit.eigenvalues, expected_gauss_eigenvalues(q, 1, 2), TOL)


def test_fit_handles_a_high_multiplicity_cluster():
    # eighteen equal eigenvalues smear float roots badly; exact division
    # through the integer characteristic polynomial must still pin them
    q = 3
    X0 = unramified_base_curve(q)
    formula = [q ** (2 * k + 1) - q * q * (q - 1) * (-q) ** k for k in range(1, 20)]
    assert [count_points(X0, k) for k in (1, 2)] == formula[:2]
    fit = fit_zeta(formula, base_order=q * q, dim=18, components=q)
    assert fit.method == "newton" and fit.rounded
    assert fit.eigenvalues == (complex(-3),) * 18


def test_fit_needs_more_counts_than_dimensions():
    C = artin_schreier_curve(3, 1, 2, 1)
    counts = [count_points(C, k) for k in (1, 2)]
    with pytest.raises(FitError, match="need at least"):
        fit_zeta(counts, base_order=3, dim=2)


def test_fit_geometric_path_on_few_counts():
    q = 3
    counts = [q ** (2 * k) + 1 - q * (q - 1) * (-q) ** k for k in range(1, 6)]
    fit = fit_zeta(counts, base_order=q * q, dim=q * (q - 1), model="projective")
    assert fit.method == "geometric"
    assert fit.eigenvalues == (complex(-q),) * (q * (q - 1))


def test_fit_dimension_zero():
    fit = fit_zeta([10, 82, 730], base_order=9, dim=0, model="projective")
    assert fit.method == "empty" and fit.eigenvalues == ()


def test_fit_confirms_a_supplied_multiset():
    # six eigenvalues would need seven counts for a blind fit and the
    # degree-seven table is beyond budget; four counts confirm a supplied
    # multiset instead
    tower = standard_tower(3)
    z1 = tower.zeta1()
    C = artin_schreier_curve(3, 2, 4, c0=z1)
    counts = [count_points(C, k) for k in (1, 2, 3, 4)]
    lams = expected_gauss_eigenvalues(3, 2, 4, c0=z1)
    fit = fit_zeta(counts, base_order=9, dim=6, candidates=lams)
    assert fit.method == "candidate" and not fit.rounded
    assert fit.conjugation_closed()
    for lam in fit.eigenvalues:
        assert abs(abs(lam) - 3.0) < TOL  # weight one over the degree-two base


def test_fit_rejects_a_wrong_supplied_multiset():
    C = artin_schreier_curve(3, 1, 2, 1)
    counts = [count_points(C, k) for k in (1, 2, 3)]
    with pytest.raises(FitError):
        fit_zeta(counts, base_order=3, dim=2, candidates=[complex(3), complex(-3)])
    with pytest.raises(FitError, match="size"):
        fit_zeta(counts, base_order=3, dim=2, candidates=[complex(0, 1)])


def test_fit_rejects_doctored_counts():
    with pytest.raises(FitError):
        fit_zeta([3, 15, 28, 63], base_order=3, dim=2)


def test_fit_rejects_wrong_component_count():
    C = artin_schreier_curve(3, 1, 2, 1)
    counts = [count_points(C, k) for k in (1, 2, 3, 4)]
    with pytest.raises(FitError):
        fit_zeta(counts, base_order=3, dim=2, components=2)


def test_fit_json_roundtrip():
    C = artin_schreier_curve(3, 1, 2, 1)
    fit = fit_zeta([count_points(C, k) for k in (1, 2, 3, 4)], base_order=3, dim=2)
    blob = json.loads(json.dumps(fit.to_json()))
    assert blob["schema"] == 1 and blob["method"] == "newton"
    assert sorted(tuple(z) for z in blob["eigenvalues"]) == sorted(
        [(z.real, z.imag) for z in fit.eigenvalues]
    )
    assert fit.predict(5) == 3**5 - round(fit.power_sum(5).real)


# -- twisted point counts ---------------------------------------------------


def test_identity_twist_matches_plain_counts():
    C = artin_schreier_curve(3, 1, 2, 1)
    for k in (1, 2):
        assert lefschetz_trace(C, identity_aut(), k) == count_points(C, k)


def test_shift_twist_against_gridded_fixed_points():
    C = artin_schreier_curve(3, 1, 2, 1)
    fast = shift_aut(C, 1)
    a, y = MultiPoly.variables(C.field, 2)
    slow = poly_aut(C, (a + MultiPoly.const(C.field, 2, 1), y), 3)
    assert [lefschetz_trace(C, fast, k) for k in (1, 2)] == [0, 6]
    assert [lefschetz_trace(C, slow, k) for k in (1, 2)] == [0, 6]


def test_sign_twist_against_gridded_fixed_points():
    C = artin_schreier_curve(3, 1, 2, 1)
    fast = shift_aut(C, 0, 2)
    a, y = MultiPoly.variables(C.field, 2)
    slow = poly_aut(C, (a, y.scale(2)), 2)
    assert [lefschetz_trace(C, fast, k) for k in (1, 2)] == [3, 3]
    assert [lefschetz_trace(C, slow, k) for k in (1, 2)] == [3, 3]


def test_translation_twists_follow_the_trace_pattern():
    q = 3
    X0 = unramified_base_curve(q)
    f2 = X0.field
    for k in (1, 2):
        for gamma in range(f2.order):
            want = x0_translation_prediction(q, gamma, k)
            assert lefschetz_trace(X0, shift_aut(X0, gamma), k) == want
    # the nonzero values: identity gives the plain count, kernel shifts
    # revive at even powers, everything else dies
    assert x0_translation_prediction(q, 0, 1) == 81
    line = [g for g in range(1, f2.order) if f2.trace(g, 1) == 0]
    assert len(line) == 2
    assert all(x0_translation_prediction(q, g, 1) == 0 for g in range(1, 9))
    assert all(x0_translation_prediction(q, g, 2) == 324 for g in line)
    assert all(
        x0_translation_prediction(q, g, 2) == 0
        for g in range(1, 9)
        if g not in line
    )


def test_torsor_scalings_have_no_twisted_fixed_points():
    T = moore_torsor(3)
    F2 = T.field
    vals = []
    for j in range(4):
        xi = int(F2.exp[j * (F2.order - 1) // 4])
        vals.append(lefschetz_trace(T, mu_scale_aut(T, xi), 1))
    assert vals == [48, 0, 0, 0]
    # fixed points of the group action assemble into free orbits
    assert sum(vals) % 4 == 0


def test_torsor_scaling_against_gridded_fixed_points():
    T = moore_torsor(3)
    F2 = T.field
    m1 = int(F2.exp[(F2.order - 1) // 2])
    S, Tv = MultiPoly.variables(F2, 2)
    slow = poly_aut(T, (S.scale(m1), Tv.scale(m1)), 2)
    assert lefschetz_trace(T, slow, 1) == 0
    assert lefschetz_trace(T, mu_scale_aut(T, m1), 1) == 0


def test_automorphism_validation():
    # a shift outside the kernel subfield
    C2 = artin_schreier_curve(3, 2, 2, 1)
    g = C2.field.gen
    assert C2.field.pow(g, 3) != g
    with pytest.raises(AssertionError):
        shift_aut(C2, g)
    # a scaling that moves the right side
    C1 = artin_schreier_curve(3, 1, 1, 1)
    with pytest.raises(AssertionError):
        shift_aut(C1, 0, 2)
    # a scaling that moves the Moore target
    W = moore_curve(3)
    with pytest.raises(AssertionError):
        mu_scale_aut(W, W.field.gen)
    # a substitution that changes the equation
    S, Tv = MultiPoly.variables(W.field, 2)
    with pytest.raises(AssertionError):
        poly_aut(W, (S + MultiPoly.const(W.field, 2, 1), Tv), 3)


# -- dimension report -------------------------------------------------------


def test_dimension_suite_small_field():
    rep = dl_dimension_suite(3)
    assert rep.kmax == 5
    assert rep.counts_affine == (24, 24, 888, 6072, 60504)
    assert rep.counts_projective == (28, 28, 892, 6076, 60508)
    assert rep.boundary_points == 4
    assert rep.numerator_degree == 6
    assert set(rep.eigenvalues) == {complex(-3)}
    assert rep.h1c_dim == 9 and rep.h1c_weight0 == 3
    assert rep.cuspidal_family == 6 and rep.cuspidal_dim == 12
    blob = rep.to_json()
    assert blob["schema"] == 1 and blob["h1c_dim"] == 9


def test_dimension_suite_larger_field():
    rep = dl_dimension_suite(5)
    assert rep.counts_affine[0] == 120  # the special linear group order
    assert rep.boundary_points == 6
    assert rep.numerator_degree == 20
    assert set(rep.eigenvalues) == {complex(-5)}
    assert rep.h1c_dim == 25 and rep.cuspidal_dim == 80


def test_dimension_suite_needs_room_for_two_degrees():
    # even a cached degree-four table cannot dodge the scan charge
    with pytest.raises(BudgetError):
        dl_dimension_suite(3, budget=400)


# -- tabulation -------------------------------------------------------------


def test_counts_csv_layout():
    C = artin_schreier_curve(3, 1, 2, 1)
    rows = counts_table([C], (1, 2))
    text = format_counts_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "curve,k,count"
    assert lines[1] == f"{C.name},1,3"
    assert lines[2] == f"{C.name},2,15"


# -- randomized agreement between the trace count and the grid count --------


@st.composite
def small_rhs(draw):
    nterms = draw(st.integers(1, 3))
    terms = {}
    for _ in range(nterms):
        e = draw(st.integers(1, 4))
        c = draw(st.integers(1, 2))
        terms[e] = c
    return tuple(terms.items())


@given(small_rhs())
@settings(max_examples=25, deadline=None)
def test_random_additive_covers_count_both_ways(rhs):
    from ltlab.ff import standard_tower

    tower = standard_tower(3)
    F = tower.field(1)
    eq_terms = {(3, 0): 1, (1, 0): F.neg(1)}
    for e, c in rhs:
        eq_terms[(0, e)] = F.neg(c)
    eq = MultiPoly(F, 2, eq_terms)
    curve = AffineCurve(
        name="random_cover",
        tower=tower,
        level=1,
        var_names=("a", "y"),
        equation=eq,
        components=1,
        counter=("as", 0, 3, 1, rhs),
    )
    for k in (1, 2):
        assert count_points(curve, k) == count_points(brute_clone(curve), k)
