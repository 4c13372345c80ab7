"""Exact arithmetic with one torsion generator over Puiseux polynomials.

Truncated series cannot represent a torsion point above level one to useful
precision (its expansion accumulates below the kernel valuation), so the
congruence engine works in the ring T[w] where T is exact Puiseux polynomials
over the coefficient field and w is the top torsion point, subject to the
rewrite rule given by its defining additive equation P(w) = rhs.  Normal forms
have w-degree below deg(P), and because j*v(w) lies in a different class
modulo the base exponent lattice for each j, distinct normal-form terms can
never share a valuation: the minimum term valuation IS the valuation.  All
ring operations are exact; a cutoff appears only when an element is pruned,
and then it is carried through every later operation.

Element terms are dicts {w-degree: Puiseux}.  Division is a leading-monomial
peel (w is invertible exactly: w * (P minus its constant)/w / rhs) followed by
Newton iteration for the unit part, truncated at a requested band.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .ff import FiniteField
from .series import AdditivePoly, Puiseux, _min_cut


class TowerSpec:
    """The ring T[w]/(P(w) - rhs) with exact valuation bookkeeping.

    P has monic top coefficient at a p-power degree D; rhs is a single exact
    monomial; v_w = val(rhs)/D is the valuation of w.  base_den bounds the
    exponent denominators of T so that the degree classes stay separated.
    """

    def __init__(self, field: FiniteField, P: dict[int, Puiseux], rhs: Puiseux, base_den: int):
        self.field = field
        self.D = max(P)
        top = P[self.D]
        assert top.terms == ((Fraction(0), 1),) and top.cutoff is None, "defining map must be monic"
        assert len(rhs.terms) == 1 and rhs.cutoff is None, "level one must be a single exact monomial"
        self.rhs = rhs
        self.v_w = rhs.val() / self.D
        self.base_den = base_den
        for j in range(1, self.D):
            assert (j * self.v_w * base_den).denominator > 1, (
                "generator valuation classes collide with the base lattice"
            )
        # w^D = rhs - (lower part of P)
        rule: dict[int, Puiseux] = {0: rhs}
        for e, a in P.items():
            if e != self.D:
                rule[e] = rule.get(e, Puiseux.zero(field)) - a
        self.rule = {j: c for j, c in rule.items() if not c.is_zero()}
        # w^{-1} = (sum_{e} P_e w^{e-1}) / rhs, exponents e >= 1
        rinv = rhs.inv()
        self.w_inv = TowerElem(self, {e - 1: a * rinv for e, a in P.items()})
        self._winv_pows: dict[int, TowerElem] = {0: self.one(), 1: self.w_inv}

    # -- constructors --

    def zero(self, cutoff=None) -> "TowerElem":
        return TowerElem(self, {} if cutoff is None else {0: Puiseux.zero(self.field, cutoff)})

    def one(self) -> "TowerElem":
        return TowerElem(self, {0: Puiseux.const(self.field, 1)})

    def const(self, c: int) -> "TowerElem":
        return TowerElem(self, {0: Puiseux.const(self.field, c)})

    def monomial(self, v, c: int = 1) -> "TowerElem":
        assert (Fraction(v) * self.base_den).denominator == 1, "exponent off the base lattice"
        return TowerElem(self, {0: Puiseux.monomial(self.field, v, c)})

    def from_puiseux(self, x: Puiseux) -> "TowerElem":
        for v, _ in x.terms:
            assert (v * self.base_den).denominator == 1, "exponent off the base lattice"
        return TowerElem(self, {0: x})

    def w(self) -> "TowerElem":
        return TowerElem(self, {1: Puiseux.const(self.field, 1)})

    def w_inv_pow(self, j: int) -> "TowerElem":
        cached = self._winv_pows.get(j)
        if cached is None:
            cached = self.w_inv_pow(j - 1) * self.w_inv
            self._winv_pows[j] = cached
        return cached


def _reduce(spec: TowerSpec, cs: dict[int, Puiseux]) -> dict[int, Puiseux]:
    while True:
        top = max((j for j in cs if j >= spec.D), default=None)
        if top is None:
            break
        c = cs.pop(top)
        if c.is_zero() and c.cutoff is None:
            continue
        for e, r in spec.rule.items():
            j2 = top - spec.D + e
            add = c * r
            cs[j2] = cs[j2] + add if j2 in cs else add
    return cs


class TowerElem:
    __slots__ = ("spec", "cs")

    def __init__(self, spec: TowerSpec, cs: dict[int, Puiseux]):
        self.spec = spec
        cs = _reduce(spec, dict(cs))
        self.cs = {j: c for j, c in cs.items() if not (c.is_zero() and c.cutoff is None)}

    # -- inspection --

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.cs.values())

    def val(self) -> Optional[Fraction]:
        """Exact valuation of the visible part; the cutoff band if none visible."""
        best = None
        for j, c in self.cs.items():
            if c.is_zero():
                continue
            v = c.val() + j * self.spec.v_w
            if best is None or v < best:
                best = v
        return best if best is not None else self.cutoff()

    def cutoff(self) -> Optional[Fraction]:
        best = None
        for j, c in self.cs.items():
            if c.cutoff is None:
                continue
            v = c.cutoff + j * self.spec.v_w
            if best is None or v < best:
                best = v
        return best

    def leading(self) -> tuple[Fraction, int, int]:
        """(valuation, w-degree, coefficient code) of the minimal term."""
        best = None
        for j, c in self.cs.items():
            if c.is_zero():
                continue
            v, code = c.leading()
            vv = v + j * self.spec.v_w
            if best is None or vv < best[0]:
                best = (vv, j, code)
        assert best is not None, "leading term of (visible) zero"
        return best

    def __repr__(self):
        parts = [f"w^{j}*{c}" for j, c in sorted(self.cs.items())]
        return " + ".join(parts) if parts else "0"

    def key(self) -> tuple:
        """Hashable identity of the visible part plus bands; exact elements compare exactly."""
        return tuple(sorted((j, c.terms, c.cutoff) for j, c in self.cs.items() if c.terms or c.cutoff is not None))

    def same_mod(self, other: "TowerElem", upto) -> bool:
        d = self - other
        upto = Fraction(upto)
        cut = d.cutoff()
        assert cut is None or cut >= upto, "insufficient precision for comparison"
        v = d.val()
        return v is None or v >= upto

    # -- arithmetic --

    def __add__(self, other: "TowerElem") -> "TowerElem":
        assert self.spec is other.spec
        out = dict(self.cs)
        for j, c in other.cs.items():
            out[j] = out[j] + c if j in out else c
        return TowerElem(self.spec, out)

    def __neg__(self) -> "TowerElem":
        return TowerElem(self.spec, {j: -c for j, c in self.cs.items()})

    def __sub__(self, other: "TowerElem") -> "TowerElem":
        return self + (-other)

    def __mul__(self, other: "TowerElem") -> "TowerElem":
        assert self.spec is other.spec
        out: dict[int, Puiseux] = {}
        for j1, c1 in self.cs.items():
            for j2, c2 in other.cs.items():
                j = j1 + j2
                add = c1 * c2
                out[j] = out[j] + add if j in out else add
        return TowerElem(self.spec, out)

    def mul_base(self, x: Puiseux) -> "TowerElem":
        return TowerElem(self.spec, {j: c * x for j, c in self.cs.items()})

    def scale(self, code: int) -> "TowerElem":
        return TowerElem(self.spec, {j: c.scale(code) for j, c in self.cs.items()})

    def shift(self, dv) -> "TowerElem":
        return TowerElem(self.spec, {j: c.shift(dv) for j, c in self.cs.items()})

    def frob_pow(self, e: int) -> "TowerElem":
        return TowerElem(self.spec, {j * e: c.frob_pow(e) for j, c in self.cs.items()})

    def __pow__(self, n: int) -> "TowerElem":
        assert n >= 0
        p = self.spec.field.p
        result = self.spec.one()
        base = self
        while n:
            e = 1
            while n % p == 0:
                n //= p
                e *= p
            if e > 1:
                base = base.frob_pow(e)
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def truncate(self, cutoff) -> "TowerElem":
        cutoff = Fraction(cutoff)
        return TowerElem(
            self.spec,
            {j: c.truncate(cutoff - j * self.spec.v_w) for j, c in self.cs.items()},
        )

    def inv(self, band) -> "TowerElem":
        """Inverse with error below t^band relative to 1/val: (self*inv - 1) = O(t^band).

        Newton iteration doubles the agreement band each pass; exact inputs
        still need a finite band because unit inverses are infinite series.
        """
        band = Fraction(band)
        v0, j0, code = self.leading()
        lead_inv = self.spec.w_inv_pow(j0).mul_base(
            Puiseux.monomial(self.spec.field, -(v0 - j0 * self.spec.v_w), self.spec.field.inv(code))
        )
        y = lead_inv
        one = self.spec.one()
        for _ in range(64):
            err = one - (self * y).truncate(band)
            ev = err.val()
            if ev is None or ev >= band:
                return y.truncate(band - v0)
            y = (y + y * err).truncate(band - v0)
        raise AssertionError("inverse iteration failed to converge")

    def divide(self, other: "TowerElem", band) -> "TowerElem":
        return self * other.inv(band)


@dataclass
class ExactUnramifiedTower:
    """Exact torsion chain for [pi](X) = X^{q^2} + pi X, top level k as generator."""

    spec: TowerSpec
    q: int
    k: int
    varpi: Puiseux  # t
    levels: list  # TowerElem: varpi_1, ..., varpi_k


def _chain_spec(field: FiniteField, mul_map: AdditivePoly, depth: int, rhs: Puiseux, base_den: int) -> TowerSpec:
    """Spec with rule (mul_map composed depth times)(w) = rhs; depth 0 pins w = rhs."""
    if depth == 0:
        return TowerSpec(field, {1: Puiseux.const(field, 1)}, rhs, base_den)
    chain_map = mul_map
    for _ in range(depth - 1):
        chain_map = mul_map.compose(chain_map)
    return TowerSpec(field, dict(chain_map.coeffs), rhs, base_den)


def unramified_exact(field: FiniteField, q: int, k: int) -> ExactUnramifiedTower:
    """Tower with w = varpi_k; every lower level is an exact polynomial in w.

    The defining rule is ([pi] composed k-1 times)(w) = varpi_1 with
    varpi_1 = c t^h, c the smallest code with c^{q^2-1} = -1.
    """
    from .series import power_root_coeff

    assert k >= 1
    h = Fraction(1, q * q - 1)
    varpi = Puiseux.monomial(field, 1, 1)
    one = Puiseux.const(field, 1)
    mul_map = AdditivePoly(field, {q * q: one, 1: varpi})
    c1 = power_root_coeff(field, q * q - 1, field.neg(1))
    varpi1 = Puiseux.monomial(field, h, c1)
    spec = _chain_spec(field, mul_map, k - 1, varpi1, base_den=q * q - 1)
    levels = [spec.w()]
    for _ in range(k - 1):
        levels.append(mul_map(levels[-1]))
    levels.reverse()
    assert (levels[0] - spec.from_puiseux(varpi1)).is_zero(), "chain bottom disagrees with level one"
    for i in range(1, k):
        assert (mul_map(levels[i]) - levels[i - 1]).is_zero()
        assert levels[i].val() == h / q ** (2 * i)
    return ExactUnramifiedTower(spec, q, k, varpi, levels)


@dataclass
class ExactRamifiedTower:
    """Exact torsion chain for [pi_E](X) = X^q + pi_E X, pi_E = t^(1/2)."""

    spec: TowerSpec
    q: int
    n: int
    varpi_E: Puiseux
    levels: list  # TowerElem: varpi_{E,1}, ..., varpi_{E,n+1}
    thetas: list  # TowerElem: theta_1, ..., theta_{n+1}


def ramified_exact(field: FiniteField, q: int, n: int) -> ExactRamifiedTower:
    """Tower with w = varpi_{E,n+1}; thetas are exact w-polynomials.

    theta_1 = varpi_{E,1}, theta_i = varpi_{E,i}/varpi_{E,1} above.  The exact
    relations theta_1^{q-1} = -varpi_E, theta_2^q - theta_2 = -1/varpi_E and
    theta_i^q - theta_i = -theta_{i-1}/varpi_E are asserted on construction.
    The base lattice includes quarters for the half-power scalings downstream.
    """
    from .series import power_root_coeff

    assert n >= 0
    a1 = Fraction(1, 2 * (q - 1))
    varpi_E = Puiseux.monomial(field, Fraction(1, 2), 1)
    one = Puiseux.const(field, 1)
    mul_map = AdditivePoly(field, {q: one, 1: varpi_E})
    c1 = power_root_coeff(field, q - 1, field.neg(1))
    varpiE1 = Puiseux.monomial(field, a1, c1)
    base_den = 2 * (q - 1) if (q - 1) % 4 == 0 else 4 * (q - 1)
    spec = _chain_spec(field, mul_map, n, varpiE1, base_den=base_den)
    levels = [spec.w()]
    for _ in range(n):
        levels.append(mul_map(levels[-1]))
    levels.reverse()
    assert (levels[0] - spec.from_puiseux(varpiE1)).is_zero()
    for i in range(1, n + 1):
        assert (mul_map(levels[i]) - levels[i - 1]).is_zero()
        assert levels[i].val() == a1 / q ** i
    inv1 = spec.from_puiseux(varpiE1.inv())
    thetas = [levels[0]] + [lv * inv1 for lv in levels[1:]]
    pe_inv = spec.from_puiseux(varpi_E.inv())
    assert (thetas[0] ** (q - 1) + spec.from_puiseux(varpi_E)).is_zero()
    if n >= 1:
        assert (thetas[1].frob_pow(q) - thetas[1] + pe_inv).is_zero()
    for i in range(2, n + 1):
        assert (thetas[i].frob_pow(q) - thetas[i] + thetas[i - 1] * pe_inv).is_zero()
    return ExactRamifiedTower(spec, q, n, varpi_E, levels, thetas)


@dataclass
class ExactCyclicTower:
    """Exact torsion chain for the degree-one law [pi](X) = pi X + X^q."""

    spec: TowerSpec
    q: int
    n: int
    varpi: Puiseux
    levels: list  # TowerElem: lambda_1, ..., lambda_n


def cyclic_exact(field: FiniteField, q: int, n: int) -> ExactCyclicTower:
    """Tower with w = lambda_n for [pi](X) = pi X + X^q; lambda_1^{q-1} = -pi."""
    from .series import power_root_coeff

    assert n >= 1
    varpi = Puiseux.monomial(field, 1, 1)
    one = Puiseux.const(field, 1)
    mul_map = AdditivePoly(field, {q: one, 1: varpi})
    c1 = power_root_coeff(field, q - 1, field.neg(1))
    lam1 = Puiseux.monomial(field, Fraction(1, q - 1), c1)
    spec = _chain_spec(field, mul_map, n - 1, lam1, base_den=q - 1)
    levels = [spec.w()]
    for _ in range(n - 1):
        levels.append(mul_map(levels[-1]))
    levels.reverse()
    assert (levels[0] - spec.from_puiseux(lam1)).is_zero()
    for i in range(1, n):
        assert (mul_map(levels[i]) - levels[i - 1]).is_zero()
        assert levels[i].val() == Fraction(1, (q - 1) * q ** i)
    return ExactCyclicTower(spec, q, n, varpi, levels)
