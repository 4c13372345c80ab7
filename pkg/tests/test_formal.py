import itertools

import pytest

from ltlab.ff import standard_tower
from ltlab.formal import (
    apply_scalar,
    digit_add,
    digit_mul,
    law_consistency_check,
    module_law,
    mu1_cofactor_check,
    mu1_cofactor_proof,
    primitive_torsion,
    reciprocity_check,
    scalar_action,
    universal_mult_poly,
)
from ltlab.polys import MultiPoly
from ltlab.series import Puiseux


def test_mu1_cofactor_identity_all_q():
    for q in (3, 5, 7, 9):
        assert mu1_cofactor_check(q)


def test_mu1_specialization_pi_u_zero():
    q = 3
    lhs, rhs, ok = mu1_cofactor_proof(q)
    assert ok
    f = lhs.field
    zero = MultiPoly.const(f, 4, 0)
    pi, u, X, Y = MultiPoly.variables(f, 4)
    spec = lhs.subs([zero, zero, X, Y])
    expect = X.frob_pow(q).frob_pow(q) * Y.frob_pow(q) - X.frob_pow(q) * Y.frob_pow(q).frob_pow(q)
    assert spec == expect


def test_universal_law_shape():
    P = universal_mult_poly(3)
    assert len(P.terms) == 3
    assert all(sum(m) > 0 for m in P.terms)


def test_scalar_action_f0_is_pure_frobenius():
    law = module_law("F0", 3)
    tower = standard_tower(3)
    field = tower.field(4)
    poly = scalar_action(law, (0, 1), field)  # a = pi
    assert set(poly.coeffs) == {9}
    one_poly = scalar_action(law, (1,), field)
    assert set(one_poly.coeffs) == {1}
    assert one_poly.coeffs[1].terms == ((0, 1),)


@pytest.mark.parametrize("name", ["F", "G", "LT"])
def test_law_consistency(name):
    assert law_consistency_check(module_law(name, 3))


def test_law_consistency_f0_twist():
    assert law_consistency_check(module_law("F0", 3))


@pytest.mark.parametrize(
    "name,n,count",
    [("G", 1, 2), ("F", 1, 8), ("LT", 2, 6), ("G", 2, 6), ("F", 2, 72)],
)
def test_primitive_counts(name, n, count):
    law = module_law(name, 3)
    ts = primitive_torsion(law, n)
    assert len(ts.primitive_index) == count
    qt = ts.digit_field.order
    assert len(ts.points) == qt ** n


def test_primitivity_agrees_with_direct_kernel_test():
    law = module_law("F", 3)
    ts = primitive_torsion(law, 2)
    mult = law.mult_map(ts.field)
    for i, pt in enumerate(ts.points):
        down = mult(pt)
        assert mult(down).is_zero()  # level-2 torsion dies after two steps
        assert (i in ts.primitive_index) == (not down.is_zero())


def test_torsion_is_a_module_and_digits_compose():
    law = module_law("G", 3)
    tower = standard_tower(3)
    ts = primitive_torsion(law, 2, tower=tower)
    f = ts.digit_field
    mult = law.mult_map(ts.field)
    keys = {pt.key() for pt in ts.points}
    pairs = list(itertools.product(ts.digit_tuples, repeat=2))
    for a, b in pairs[:40] + pairs[::7]:
        pa, pb = ts.point_for(a), ts.point_for(b)
        assert (pa + pb).key() in keys
        assert (pa + pb - ts.point_for(digit_add(f, a, b))).is_zero()
        emb_a = tuple(int(ts.embed_tab[d]) for d in a)
        assert (apply_scalar(law, emb_a, pb, mult) - ts.point_for(digit_mul(f, a, b))).is_zero()


def test_scalar_action_polynomial_matches_pointwise_action():
    law = module_law("LT", 3)
    tower = standard_tower(3)
    ts = primitive_torsion(law, 2, tower=tower)
    mult = law.mult_map(ts.field)
    digits = (2, 1)
    emb = tuple(int(ts.embed_tab[d]) for d in digits)
    poly = scalar_action(law, emb, ts.field)
    top = ts.levels[-1]
    assert (poly(top) - apply_scalar(law, emb, top, mult)).is_zero()


@pytest.mark.parametrize("name,n", [("G", 1), ("G", 2), ("F", 1), ("F", 2), ("LT", 2)])
def test_reciprocity_simple_transitivity(name, n):
    law = module_law(name, 3)
    rep = reciprocity_check(law, n)
    assert rep.ok, rep
    qt = 9 if name == "F" else 3
    assert rep.unit_count == qt ** n - qt ** (n - 1)
    assert rep.primitive_count == rep.unit_count


def test_reciprocity_unit_count_value():
    rep = reciprocity_check(module_law("F", 3), 2)
    assert rep.unit_count == 72  # q^2 (q^2 - 1) at q = 3
