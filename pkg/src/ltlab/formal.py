"""Formal module laws, torsion sets, and finite-level reciprocity checks.

Every law here is additive (X + Y) with residue scalars acting linearly, so a
multiplication-by-uniformizer map determines everything.  Torsion points are
exact tower-ring elements: a point at level n is the digit combination
sum(a_i * chain[n-1-i]) over the chain of compatible torsion generators, and
two points are equal exactly when their normal forms agree.  (A truncated
series cannot make that call: points differing by a higher-level kernel
element agree below the accumulation valuation.)

The base ring at level n is the truncated polynomial ring F_res[pi]/pi^n; in
equal characteristic digit arithmetic is plain polynomial arithmetic with no
carries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .ff import FieldTower, FiniteField, standard_tower
from .polys import MultiPoly
from .series import AdditivePoly, Puiseux
from .tower import cyclic_exact, ramified_exact, unramified_exact

LAW_NAMES = ("F0", "F_univ", "F", "G", "LT")


@dataclass(frozen=True)
class ModuleLaw:
    """An additive formal module law, keyed by its uniformizer polynomial.

    F0:  X^{q^2}                 (special fibre, no linear term)
    F_univ: X^{q^2} + u X^q + pi X  (u a symbol; symbolic checks only)
    F:   X^{q^2} + pi X          (base ring has residue field F_{q^2})
    G:   X^q + pi_E X            (ramified quadratic, pi_E^2 = pi)
    LT:  X^q + pi X              (height one over the base)
    """

    name: str
    p: int
    r: int = 1

    def __post_init__(self):
        assert self.name in LAW_NAMES

    @property
    def q(self) -> int:
        return self.p ** self.r

    @property
    def residue_mult(self) -> int:
        """Digits live in F_{q^residue_mult}."""
        return 2 if self.name in ("F0", "F_univ", "F") else 1

    @property
    def step(self) -> int:
        """q-power degree of multiplication by the uniformizer."""
        return self.q ** 2 if self.name in ("F0", "F_univ", "F") else self.q

    @property
    def uniformizer_val(self) -> Fraction:
        return Fraction(1, 2) if self.name == "G" else Fraction(1)

    @property
    def coeff_level(self) -> int:
        """FieldTower level whose field carries the torsion coefficients."""
        return 4 if self.name in ("F0", "F_univ", "F") else 2

    def mult_map(self, field: FiniteField) -> AdditivePoly:
        one = Puiseux.const(field, 1)
        uni = Puiseux.monomial(field, self.uniformizer_val, 1)
        if self.name == "F0":
            return AdditivePoly(field, {self.q ** 2: one})
        if self.name == "F":
            return AdditivePoly(field, {self.q ** 2: one, 1: uni})
        if self.name in ("G", "LT"):
            return AdditivePoly(field, {self.q: one, 1: uni})
        raise ValueError("the universal law needs its symbol; use universal_mult_poly")

    def exact_chain(self, tower: FieldTower, n: int):
        """(spec, [level-1 .. level-n points]) over the coefficient field."""
        field = tower.field(self.coeff_level)
        if self.name == "F":
            tw = unramified_exact(field, self.q, n)
            return tw.spec, tw.levels
        if self.name == "G":
            tw = ramified_exact(field, self.q, n - 1)
            return tw.spec, tw.levels
        if self.name == "LT":
            tw = cyclic_exact(field, self.q, n)
            return tw.spec, tw.levels
        raise ValueError(f"law {self.name} has no reduced torsion chain")


def module_law(name: str, p: int, r: int = 1) -> ModuleLaw:
    return ModuleLaw(name, p, r)


def universal_mult_poly(q: int) -> MultiPoly:
    """[pi] for the universal deformation, in F_q[pi, u, X]."""
    p, r = _factor_prime_power(q)
    f = FiniteField(p, r)
    pi, u, X = MultiPoly.variables(f, 3)
    return X.frob_pow(q).frob_pow(q) + u * X.frob_pow(q) + pi * X


def _factor_prime_power(q: int) -> tuple[int, int]:
    for p in (2, 3, 5, 7, 11, 13):
        if q % p == 0:
            r = 0
            while q > 1:
                assert q % p == 0, f"{q} is not a prime power"
                q //= p
                r += 1
            return p, r
    raise AssertionError(f"no small prime divides {q}")


# -- scalar action --


def scalar_action(law: ModuleLaw, digits: tuple[int, ...], field: FiniteField) -> AdditivePoly:
    """The additive polynomial of [a] for a = sum(digits[i] * pi^i).

    Digit codes must already live in `field`.  Built as
    sum(digits[i] * ([pi] composed i times)); for F0 this collapses to
    sum(digits[i] * X^{q^{2i}}).
    """
    mult = law.mult_map(field)
    acc = AdditivePoly(field, {})
    power = AdditivePoly(field, {1: Puiseux.const(field, 1)})
    for i, a in enumerate(digits):
        if i:
            power = mult.compose(power) if i > 1 else mult
        if a:
            acc = acc + power.scale(a)
    return acc


def apply_scalar(law: ModuleLaw, digits: tuple[int, ...], x, mult: AdditivePoly):
    """[a](x) for a torsion point x; digits embedded in the coefficient field."""
    out = None
    cur = x
    for a in digits:
        if a:
            term = cur.scale(a)
            out = term if out is None else out + term
        cur = mult(cur)
    assert out is not None or digits, "empty digit tuple"
    return out if out is not None else cur.scale(0)


def digit_mul(field: FiniteField, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """Product in F_res[pi]/pi^n: truncated convolution, no carries."""
    n = len(a)
    assert len(b) == n
    out = []
    for k in range(n):
        s = 0
        for i in range(k + 1):
            s = field.add(s, field.mul(a[i], b[k - i]))
        out.append(s)
    return tuple(out)


def digit_add(field: FiniteField, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(field.add(x, y) for x, y in zip(a, b))


# -- torsion sets --


@dataclass
class TorsionSet:
    law: ModuleLaw
    n: int
    field: FiniteField
    digit_field: FiniteField
    embed_tab: np.ndarray
    levels: list  # TowerElem chain, level 1 .. n
    digit_tuples: list[tuple[int, ...]]
    points: list  # aligned with digit_tuples
    primitive_index: list[int]

    @property
    def primitive(self) -> list:
        return [self.points[i] for i in self.primitive_index]

    def point_for(self, digits: tuple[int, ...]):
        """sum(embed(digits[i]) * levels[n-1-i]); digits in the digit field."""
        acc = None
        for i, a in enumerate(digits):
            if a:
                term = self.levels[self.n - 1 - i].scale(int(self.embed_tab[a]))
                acc = term if acc is None else acc + term
        if acc is None:
            spec = self.levels[0].spec
            return spec.zero()
        return acc


def primitive_torsion(
    law: ModuleLaw,
    n: int,
    cutoff=None,
    tower: Optional[FieldTower] = None,
) -> TorsionSet:
    """All level-n torsion with primitivity flags; counts checked on the spot.

    Points are exact; `cutoff` only bounds the optional truncated views taken
    by callers, never the arithmetic here.
    """
    assert n >= 1
    tower = tower if tower is not None else standard_tower(law.p, law.r)
    spec, levels = law.exact_chain(tower, n)
    field = tower.field(law.coeff_level)
    digit_field = tower.field(law.residue_mult)
    emb = tower.embedding_table(law.residue_mult, law.coeff_level)
    ts = TorsionSet(law, n, field, digit_field, emb, levels, [], [], [])
    qt = digit_field.order
    for digits in itertools.product(digit_field.elements(), repeat=n):
        pt = ts.point_for(digits)
        ts.digit_tuples.append(digits)
        ts.points.append(pt)
        if digits[0]:
            ts.primitive_index.append(len(ts.points) - 1)
    assert len(ts.points) == qt ** n
    assert len(ts.primitive_index) == qt ** n - qt ** (n - 1)
    return ts


def mu1_cofactor_proof(q: int):
    """Exact witness that mu_1^q - pi*mu_1 lies in the ideal ([pi]_u X, [pi]_u Y).

    Returns (lhs, rhs, equal) over F_q[pi, u, X, Y] with
    mu_1 = X^q Y - X Y^q,  lhs = mu_1^q - pi*mu_1,
    rhs = Y^q * [pi]_u(X) - X^q * [pi]_u(Y).
    """
    p, r = _factor_prime_power(q)
    f = FiniteField(p, r)
    pi, u, X, Y = MultiPoly.variables(f, 4)
    mu1 = X.frob_pow(q) * Y - X * Y.frob_pow(q)
    lhs = mu1.frob_pow(q) - pi * mu1
    act_X = X.frob_pow(q).frob_pow(q) + u * X.frob_pow(q) + pi * X
    act_Y = Y.frob_pow(q).frob_pow(q) + u * Y.frob_pow(q) + pi * Y
    rhs = Y.frob_pow(q) * act_X - X.frob_pow(q) * act_Y
    return lhs, rhs, lhs == rhs


def mu1_cofactor_check(q: int) -> bool:
    _, _, ok = mu1_cofactor_proof(q)
    return ok


# -- consistency and reciprocity --


def law_consistency_check(law: ModuleLaw, tower: Optional[FieldTower] = None) -> bool:
    """Residue scalars commute with [pi]; for F0 they twist by the full degree."""
    tower = tower if tower is not None else standard_tower(law.p, law.r)
    field = tower.field(law.coeff_level)
    mult = law.mult_map(field)
    emb = tower.embedding_table(law.residue_mult, law.coeff_level)
    one = Puiseux.const(field, 1)
    for z in tower.field(law.residue_mult).elements():
        ze = int(emb[z])
        sc = AdditivePoly(field, {1: Puiseux.const(field, ze)} if ze else {})
        left = mult.compose(sc)
        right = sc.compose(mult)
        if not _additive_eq(left, right):
            return False
    if law.name == "F0":
        for z in field.units():
            sc = AdditivePoly(field, {1: Puiseux.const(field, z)})
            tw = AdditivePoly(field, {1: Puiseux.const(field, field.pow(z, law.step))})
            if not _additive_eq(mult.compose(sc), tw.compose(mult)):
                return False
    return True


def _additive_eq(a: AdditivePoly, b: AdditivePoly) -> bool:
    if set(a.coeffs) != set(b.coeffs):
        return False
    return all((a.coeffs[e] - b.coeffs[e]).is_zero() for e in a.coeffs)


@dataclass
class ReciprocityReport:
    law: str
    n: int
    unit_count: int
    primitive_count: int
    all_images_primitive: bool
    images_distinct: bool
    transitive: bool
    independent_of_base_choice: bool
    compatible_with_projection: bool

    @property
    def ok(self) -> bool:
        return (
            self.unit_count == self.primitive_count
            and self.all_images_primitive
            and self.images_distinct
            and self.transitive
            and self.independent_of_base_choice
            and self.compatible_with_projection
        )


def reciprocity_check(law: ModuleLaw, n: int, tower: Optional[FieldTower] = None) -> ReciprocityReport:
    """Units of the truncated base ring act simply transitively on primitive torsion.

    Verified for every choice of base point in the primitive set, since no
    choice is canonical.  The projection square [pi]([a](pt_n)) =
    [a mod pi^{n-1}](pt_{n-1}) is checked on the chain point.
    """
    tower = tower if tower is not None else standard_tower(law.p, law.r)
    ts = primitive_torsion(law, n, tower=tower)
    field = ts.field
    mult = law.mult_map(field)
    units = [d for d in ts.digit_tuples if d[0]]
    prim_keys = {ts.points[i].key() for i in ts.primitive_index}
    all_prim = True
    distinct = True
    covers = True
    base_ok = True
    for bi in ts.primitive_index:
        base = ts.points[bi]
        seen = set()
        for u in units:
            emb_u = tuple(int(ts.embed_tab[d]) for d in u)
            img = apply_scalar(law, emb_u, base, mult)
            k = img.key()
            if k not in prim_keys:
                all_prim = False
            if k in seen:
                distinct = False
            seen.add(k)
        if seen != prim_keys:
            covers = False
        if not (all_prim and distinct and covers):
            base_ok = False
            break
    compat = True
    if n >= 2:
        for u in units:
            emb_u = tuple(int(ts.embed_tab[d]) for d in u)
            left = mult(apply_scalar(law, emb_u, ts.levels[-1], mult))
            right = apply_scalar(law, emb_u[:-1], ts.levels[-2], mult)
            if not (left - right).is_zero():
                compat = False
                break
    else:
        compat = all(mult(ts.points[i]).is_zero() for i in ts.primitive_index)
    return ReciprocityReport(
        law=law.name,
        n=n,
        unit_count=len(units),
        primitive_count=len(ts.primitive_index),
        all_images_primitive=all_prim,
        images_distinct=distinct,
        transitive=covers,
        independent_of_base_choice=base_ok,
        compatible_with_projection=compat,
    )
