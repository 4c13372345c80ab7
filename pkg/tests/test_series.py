from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ltlab.ff import FiniteField
from ltlab.series import (
    AdditivePoly,
    PrecisionError,
    Puiseux,
    TowerTooSmallError,
    additive_roots,
    default_cutoff,
    newton_slopes,
    power_root_coeff,
    theta_tower,
    unramified_tower,
    verify_root,
)

F9 = FiniteField(3, 2)
F81 = FiniteField(3, 4)
F25 = FiniteField(5, 2)


def _series(field, draw_terms, cutoff):
    return Puiseux(field, draw_terms, cutoff)


exponents = st.fractions(min_value=-2, max_value=4, max_denominator=8)
term_lists = st.lists(st.tuples(exponents, st.integers(0, 8)), max_size=5)
cutoffs = st.one_of(st.none(), st.fractions(min_value=1, max_value=6, max_denominator=4))


@settings(max_examples=80, deadline=None)
@given(term_lists, term_lists, term_lists)
def test_ring_laws(ta, tb, tc):
    a = _series(F9, ta, None)
    b = _series(F9, tb, None)
    c = _series(F9, tc, None)
    assert (a + b).terms == (b + a).terms
    assert ((a + b) + c).terms == (a + (b + c)).terms
    assert (a * b).terms == (b * a).terms
    assert ((a * b) * c).terms == (a * (b * c)).terms
    assert (a * (b + c)).terms == (a * b + a * c).terms
    assert (a + (-a)).is_zero()


@settings(max_examples=60, deadline=None)
@given(term_lists, term_lists, cutoffs, cutoffs)
def test_cutoff_is_a_lower_bound_on_error(ta, tb, ca, cb):
    # truncating exact inputs first never changes what a product reports below its cutoff
    a_ex, b_ex = _series(F9, ta, None), _series(F9, tb, None)
    a_tr, b_tr = _series(F9, ta, ca), _series(F9, tb, cb)
    exact = a_ex * b_ex
    trunc = a_tr * b_tr
    if trunc.cutoff is not None:
        for v, c in exact.terms:
            if v < trunc.cutoff:
                assert trunc.coeff_at(v) == c
        for v, c in trunc.terms:
            assert exact.coeff_at(v) == c


@settings(max_examples=60, deadline=None)
@given(term_lists)
def test_frobenius_power_is_multiplicative(ta):
    a = _series(F9, ta, None)
    assert (a.frob_pow(3).frob_pow(3)).terms == a.frob_pow(9).terms
    manual = a * a * a
    assert manual.terms == (a ** 3).terms == a.frob_pow(3).terms


def test_pow_matches_repeated_multiplication():
    a = Puiseux(F9, [(Fraction(1, 2), 2), (Fraction(1), 5), (Fraction(3, 2), 1)])
    acc = Puiseux.const(F9, 1)
    for n in range(1, 8):
        acc = acc * a
        assert (a ** n).terms == acc.terms


def test_inverse_certifies_its_band():
    a = Puiseux(F9, [(Fraction(-1, 2), 4), (Fraction(0), 1), (Fraction(2, 3), 7)], cutoff=Fraction(4))
    inv = a.inv()
    prod = a * inv
    one = Puiseux.const(F9, 1)
    assert prod.same_mod(one, prod.cutoff)
    assert prod.cutoff == Fraction(4) - Fraction(-1, 2)  # relative band preserved


def test_newton_slopes_with_negative_edge():
    # X^3 - X = -t^(-1/2): single edge of slope -1/6 through exponents 0 and 3
    pts = [(3, Fraction(0)), (1, Fraction(0)), (0, Fraction(-1, 2))]
    edges = newton_slopes(pts)
    assert len(edges) == 1
    mu, exps = edges[0]
    assert mu == Fraction(-1, 6)
    assert set(exps) == {0, 3}


def test_artin_schreier_roots_with_negative_valuation():
    # X^3 - X = -t^(-1/2): the expansion -sum t^(-1/(2*3^j)) accumulates at 0,
    # where the three roots (differing by prime-field constants) merge
    P = AdditivePoly(F9, {3: Puiseux.const(F9, 1), 1: Puiseux.const(F9, F9.neg(1))})
    rhs = Puiseux.monomial(F9, Fraction(-1, 2), F9.neg(1))
    roots = additive_roots(P, rhs, Fraction(-1, 100))
    assert len(roots) == 1
    assert roots[0].val() == Fraction(-1, 6)
    verify_root(P, rhs, roots[0], Fraction(-3, 100))
    with pytest.raises(PrecisionError):
        additive_roots(P, rhs, Fraction(1, 10), max_depth=60)


def test_constant_kernel_count_matches_degree():
    # X^9 - X over F_81 kills exactly the 9 subfield constants
    P = AdditivePoly(F81, {9: Puiseux.const(F81, 1), 1: Puiseux.const(F81, F81.neg(1))})
    roots = additive_roots(P, Puiseux.zero(F81), Fraction(3))
    assert len(roots) == 9
    consts = {r.coeff_at(0) for r in roots}
    assert consts == {c for c in F81.elements() if F81.in_subfield(c, 2)}


def test_inhomogeneous_root_count_matches_degree():
    P = AdditivePoly(F81, {9: Puiseux.const(F81, 1), 1: Puiseux.const(F81, F81.neg(1))})
    rhs = Puiseux.monomial(F81, 1, 1)
    roots = additive_roots(P, rhs, Fraction(4))
    assert len(roots) == 9
    for r in roots:
        verify_root(P, rhs, r, Fraction(4))


def test_power_root_coeff_reports_required_degree():
    with pytest.raises(TowerTooSmallError) as exc:
        power_root_coeff(F9, 8, F9.neg(1))
    assert exc.value.required_deg == 4
    c = power_root_coeff(F81, 8, F81.neg(1))
    assert F81.pow(c, 8) == F81.neg(1)


def test_torsion_above_level_one_cannot_be_truncated_past_accumulation():
    # corrections to the level-two point accumulate below h = 1/(q^2-1)
    h = Fraction(1, 8)
    tower = unramified_tower(F81, 3, 1)
    P = tower.mult_by_varpi()
    with pytest.raises(PrecisionError):
        additive_roots(P, tower.levels[0], h + Fraction(1, 100), max_depth=60)
    # below the accumulation all nine roots coincide: one representative comes back
    roots = additive_roots(P, tower.levels[0], h * Fraction(9, 10))
    assert len(roots) == 1
    assert roots[0].val() == h / 9


@pytest.mark.parametrize("q,deg", [(3, 4), (5, 4)])
def test_unramified_tower_valuations_and_chain(q, deg):
    field = FiniteField(q, deg) if q == 3 else FiniteField(5, 4)
    h = Fraction(1, q * q - 1)
    tower = unramified_tower(field, q, 3 if q == 3 else 2)
    P = tower.mult_by_varpi()
    assert tower.levels[0].val() == h
    assert field.pow(tower.levels[0].leading()[1], q * q - 1) == field.neg(1)
    for i, lv in enumerate(tower.levels):
        assert lv.val() == h / q ** (2 * i)
    for i in range(1, len(tower.levels)):
        res = P(tower.levels[i]) - tower.levels[i - 1]
        assert res.is_zero()


def test_theta_tower_relations_hold_to_available_precision():
    q = 3
    field = F9
    tower = theta_tower(field, q, 2)
    a1 = Fraction(1, 2 * (q - 1))
    assert [th.val() for th in tower.thetas] == [a1, a1 / q - a1, a1 / q ** 2 - a1]
    th1, th2, th3 = tower.thetas
    pe = tower.varpi_E
    r1 = th1 ** (q - 1) + pe
    assert r1.is_zero()
    r2 = th2.frob_pow(q) - th2 + pe.inv()
    assert r2.is_zero()
    r3 = th3.frob_pow(q) - th3 + th2 * pe.inv()
    assert r3.is_zero()
    assert r3.cutoff is not None  # certified only up to the truncation band


def test_default_cutoff_value():
    assert default_cutoff(3) == Fraction(9, 4)
    assert default_cutoff(5) == Fraction(25, 12)
