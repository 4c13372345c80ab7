from fractions import Fraction

import pytest

from ltlab.ff import FiniteField
from ltlab.series import Puiseux
from ltlab.tower import cyclic_exact, ramified_exact, unramified_exact

F9 = FiniteField(3, 2)
F81 = FiniteField(3, 4)
F625 = FiniteField(5, 4)
F25 = FiniteField(5, 2)


@pytest.fixture(scope="module")
def unram_k2():
    return unramified_exact(F81, 3, 2)


@pytest.fixture(scope="module")
def unram_k3():
    return unramified_exact(F81, 3, 3)


@pytest.fixture(scope="module")
def ram_n3():
    return ramified_exact(F9, 3, 3)


def test_construction_invariants_run_for_both_primes(unram_k2, unram_k3, ram_n3):
    # constructors assert the chain and theta relations exactly; reaching here is the test
    unramified_exact(F625, 5, 2)
    ramified_exact(F25, 5, 1)
    cyclic_exact(F9, 3, 2)


def test_valuations_are_exact_under_products(unram_k2):
    w = unram_k2.spec.w()
    v1 = unram_k2.levels[0]
    x = w * w + v1
    assert x.val() == 2 * unram_k2.spec.v_w
    y = x * x
    assert y.val() == 2 * x.val()
    assert (x - x).is_zero()


def test_no_cancellation_across_degree_classes(unram_k2):
    # distinct w-degrees occupy distinct valuation classes, so sums never drop rank
    spec = unram_k2.spec
    a = spec.w().mul_base(Puiseux.monomial(F81, Fraction(1, 8), 2))
    b = spec.monomial(Fraction(1, 8), 1)
    s = a + b
    assert s.val() == min(a.val(), b.val())
    assert s.val() == Fraction(1, 8)


def test_frobenius_power_agrees_with_multiplication(unram_k2):
    w = unram_k2.spec.w()
    assert (w.frob_pow(3) - w * w * w).is_zero()
    x = w + unram_k2.spec.one()
    assert (x.frob_pow(9) - x ** 9).is_zero()


def test_generator_inverse_is_exact(unram_k2):
    spec = unram_k2.spec
    prod = spec.w() * spec.w_inv
    assert (prod - spec.one()).is_zero()


def test_unit_inverse_certifies_band(unram_k2):
    spec = unram_k2.spec
    x = unram_k2.levels[1] + spec.monomial(2, 2)  # varpi_2 plus a deep perturbation
    band = Fraction(3)
    y = x.inv(band)
    err = x * y - spec.one()
    assert err.val() is None or err.val() >= band
    assert y.cutoff() is not None


def test_truncation_carries_the_band_through_products(unram_k2):
    spec = unram_k2.spec
    x = unram_k2.levels[1].truncate(1)
    assert x.cutoff() == 1
    y = x * unram_k2.levels[0]
    assert y.cutoff() == 1 + unram_k2.levels[0].val()


def test_level_congruence_used_by_the_descent(unram_k2, unram_k3):
    # v(varpi_{i}^{q^{2(k-i)}} ... ) the top power collapses to level one modulo h+
    h = Fraction(1, 8)
    for tower, k in ((unram_k2, 2), (unram_k3, 3)):
        top = tower.levels[-1]
        drop = top ** (3 ** (2 * (k - 1)))
        res = drop - tower.levels[0]
        assert res.val() > h
        assert res.cutoff() is None  # the congruence is exact, not an artifact of pruning


def test_ramified_terms_have_quarter_lattice(ram_n3):
    th1 = ram_n3.thetas[0]
    half = th1 ** ((3 - 1) // 2)
    assert half.val() == Fraction(1, 4)


def test_cyclic_tower_level_valuations():
    ct = cyclic_exact(F9, 3, 2)
    assert ct.levels[0].val() == Fraction(1, 2)
    assert ct.levels[1].val() == Fraction(1, 6)
    spec = ct.spec
    # w^q = lambda_1 - t w exactly
    res = spec.w().frob_pow(3) - ct.levels[0] + spec.w().mul_base(ct.varpi)
    assert res.is_zero()
