"""Truncated Puiseux series over a small finite field, and additive polynomials.

A series is a finite sum of terms c * t^v with rational exponents v and nonzero
field coefficients c, plus an error band O(t^cutoff); every stored term has
v < cutoff.  cutoff None means the element is exact.  All arithmetic tracks the
band honestly: a result's cutoff is the largest bound the inputs justify, so a
comparison below the cutoff is a certification, not a heuristic.

Additive polynomials sum(a_e X^e) with p-power exponents e are solved by Newton
polygon descent: each slope contributes a leading-coefficient equation that is
F_p-linear in the leading coefficient, solved by enumerating the (small)
coefficient field.  Root lifting recurses branch by branch, so the returned
list carries every solution to the requested precision.

In characteristic p the expansion of a torsion point above level one has
exponents that accumulate below the kernel valuation (correction valuations
follow mu' = (v(pi) + mu)/deg and converge to the kernel slope without
reaching it), so no finite truncation can certify anything at or beyond the
accumulation point.  The tower builders below cap their precision accordingly;
work beyond the cap uses the exact representation in the tower module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .ff import FiniteField

INF = None  # cutoff sentinel: exact


class PrecisionError(Exception):
    """Inputs do not carry enough series precision for the requested output."""


class TowerTooSmallError(Exception):
    """A leading-coefficient equation has no root in the coefficient field."""

    def __init__(self, field: FiniteField, required_deg: Optional[int], msg: str = ""):
        self.field = field
        self.required_deg = required_deg
        text = (
            f"no solution over F_{field.order}; "
            + (f"degree {required_deg} over the prime field suffices" if required_deg else "no small enlargement found")
            + (f" ({msg})" if msg else "")
        )
        super().__init__(text)


def _min_cut(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class Puiseux:
    __slots__ = ("field", "terms", "cutoff")

    def __init__(self, field: FiniteField, terms: Iterable[tuple[Fraction, int]] = (), cutoff=INF):
        self.field = field
        self.cutoff = cutoff
        merged: dict[Fraction, int] = {}
        for v, c in terms:
            v = Fraction(v)
            if c == 0:
                continue
            if cutoff is not None and v >= cutoff:
                continue
            if v in merged:
                s = field.add(merged[v], c)
                if s:
                    merged[v] = s
                else:
                    del merged[v]
            else:
                merged[v] = c
        self.terms = tuple(sorted(merged.items()))

    # -- constructors --

    @staticmethod
    def zero(field, cutoff=INF):
        return Puiseux(field, (), cutoff)

    @staticmethod
    def const(field, c, cutoff=INF):
        return Puiseux(field, [(Fraction(0), c)], cutoff)

    @staticmethod
    def monomial(field, v, c=1, cutoff=INF):
        return Puiseux(field, [(Fraction(v), c)], cutoff)

    # -- inspection --

    def is_zero(self) -> bool:
        """No visible terms.  With a finite cutoff this means zero mod cutoff."""
        return not self.terms

    def val(self):
        """Valuation; for a term-free series, the cutoff (None = +infinity)."""
        return self.terms[0][0] if self.terms else self.cutoff

    def leading(self) -> tuple[Fraction, int]:
        assert self.terms, "leading term of (visible) zero"
        return self.terms[0]

    def coeff_at(self, v) -> int:
        v = Fraction(v)
        for tv, tc in self.terms:
            if tv == v:
                return tc
        return 0

    def sort_key(self):
        return tuple((t[0], t[1]) for t in self.terms)

    def __repr__(self):
        if not self.terms:
            body = "0"
        else:
            body = " + ".join(f"{c}*t^{v}" for v, c in self.terms)
        tail = "" if self.cutoff is None else f" + O(t^{self.cutoff})"
        return f"({body}{tail})"

    def __eq__(self, other):
        return (
            isinstance(other, Puiseux)
            and self.field is other.field
            and self.terms == other.terms
            and self.cutoff == other.cutoff
        )

    def __hash__(self):
        return hash((id(self.field), self.terms, self.cutoff))

    def same_mod(self, other: "Puiseux", upto) -> bool:
        """Equality of all terms with valuation < upto; demands both see that far."""
        upto = Fraction(upto)
        for x in (self, other):
            assert x.cutoff is None or x.cutoff >= upto, "insufficient precision for comparison"
        a = [(v, c) for v, c in self.terms if v < upto]
        b = [(v, c) for v, c in other.terms if v < upto]
        return a == b

    # -- arithmetic --

    def truncate(self, cutoff) -> "Puiseux":
        return Puiseux(self.field, self.terms, _min_cut(self.cutoff, Fraction(cutoff)))

    def __add__(self, other: "Puiseux") -> "Puiseux":
        assert self.field is other.field
        return Puiseux(self.field, self.terms + other.terms, _min_cut(self.cutoff, other.cutoff))

    def __neg__(self) -> "Puiseux":
        f = self.field
        return Puiseux(f, [(v, f.neg(c)) for v, c in self.terms], self.cutoff)

    def __sub__(self, other: "Puiseux") -> "Puiseux":
        return self + (-other)

    def __mul__(self, other: "Puiseux") -> "Puiseux":
        assert self.field is other.field
        f = self.field
        cut = _min_cut(
            None if other.cutoff is None else (self.val() + other.cutoff if self.val() is not None else None),
            None if self.cutoff is None else (other.val() + self.cutoff if other.val() is not None else None),
        )
        out: list[tuple[Fraction, int]] = []
        for v1, c1 in self.terms:
            for v2, c2 in other.terms:
                v = v1 + v2
                if cut is not None and v >= cut:
                    continue
                out.append((v, f.mul(c1, c2)))
        return Puiseux(f, out, cut)

    def scale(self, c: int) -> "Puiseux":
        f = self.field
        if c == 0:
            return Puiseux(f, (), self.cutoff)
        return Puiseux(f, [(v, f.mul(cc, c)) for v, cc in self.terms], self.cutoff)

    def shift(self, dv) -> "Puiseux":
        """Multiply by the monomial t^dv."""
        dv = Fraction(dv)
        return Puiseux(
            self.field,
            [(v + dv, c) for v, c in self.terms],
            None if self.cutoff is None else self.cutoff + dv,
        )

    def frob_pow(self, e: int) -> "Puiseux":
        """x^e for e a power of p: exact termwise (char p additivity)."""
        f = self.field
        assert e >= 1 and _is_p_power(e, f.p), "frob_pow wants a power of p"
        return Puiseux(
            f,
            [(v * e, f.pow(c, e)) for v, c in self.terms],
            None if self.cutoff is None else self.cutoff * e,
        )

    def __pow__(self, n: int) -> "Puiseux":
        assert n >= 0
        f = self.field
        # peel off the largest p-power dividing the job to keep terms sparse
        result = Puiseux.const(f, 1, None)
        base = self
        while n:
            e = 1
            while n % f.p == 0:
                n //= f.p
                e *= f.p
            if e > 1:
                base = base.frob_pow(e)
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inv(self) -> "Puiseux":
        assert self.terms, "inverse of (visible) zero"
        f = self.field
        v0, c0 = self.terms[0]
        # relative precision is preserved: cutoff - val stays fixed
        rel = None if self.cutoff is None else self.cutoff - v0
        lead_inv = Puiseux.monomial(f, -v0, f.inv(c0))
        u = (self * lead_inv) - Puiseux.const(f, 1)  # val > 0, cutoff rel
        if rel is not None:
            u = u.truncate(rel)
        acc = Puiseux.const(f, 1, rel)
        term = Puiseux.const(f, 1, rel)
        while not term.is_zero():
            term = (term * u).scale(f.neg(1))
            if rel is not None:
                term = term.truncate(rel)
            acc = acc + term
            if u.is_zero():
                break
        return acc * lead_inv

    def __truediv__(self, other: "Puiseux") -> "Puiseux":
        return self * other.inv()


def _is_p_power(e: int, p: int) -> bool:
    while e % p == 0:
        e //= p
    return e == 1


class AdditivePoly:
    """sum over p-power exponents e of a_e X^e, coefficients Puiseux.

    Evaluation accepts any ring element with frob_pow and either mul_base or
    left-multiplication by a coefficient.
    """

    def __init__(self, field: FiniteField, coeffs: dict[int, Puiseux]):
        self.field = field
        self.coeffs = {e: a for e, a in coeffs.items() if not a.is_zero()}
        for e in self.coeffs:
            assert _is_p_power(e, field.p), f"exponent {e} is not a p-power"

    @property
    def degree(self) -> int:
        return max(self.coeffs) if self.coeffs else 1

    def __call__(self, x):
        out = None
        for e, a in sorted(self.coeffs.items()):
            xe = x.frob_pow(e)
            term = xe.mul_base(a) if hasattr(xe, "mul_base") else a * xe
            out = term if out is None else out + term
        if out is None:
            out = Puiseux.zero(self.field)
        return out

    def compose(self, other: "AdditivePoly") -> "AdditivePoly":
        out: dict[int, Puiseux] = {}
        f = self.field
        for e1, a1 in self.coeffs.items():
            for e2, a2 in other.coeffs.items():
                e = e1 * e2
                term = a1 * a2.frob_pow(e1)
                out[e] = out.get(e, Puiseux.zero(f)) + term
        return AdditivePoly(f, out)

    def scale(self, c: int) -> "AdditivePoly":
        return AdditivePoly(self.field, {e: a.scale(c) for e, a in self.coeffs.items()})

    def __add__(self, other: "AdditivePoly") -> "AdditivePoly":
        out = dict(self.coeffs)
        for e, a in other.coeffs.items():
            out[e] = out[e] + a if e in out else a
        return AdditivePoly(self.field, out)

    def __repr__(self):
        return " + ".join(f"{a}*X^{e}" for e, a in sorted(self.coeffs.items()))


def _solve_linearized(field: FiniteField, lead: dict[int, int], rhs: int) -> list[int]:
    """All c in the coefficient field with sum(a_e * c^e) = rhs; e are p-powers."""
    out = []
    for c in field.elements():
        acc = 0
        for e, a in lead.items():
            acc = field.add(acc, field.mul(a, field.pow(c, e) if c else 0))
        if acc == rhs:
            out.append(c)
    return out


def _required_degree_for(field: FiniteField, lead: dict[int, int], rhs: int) -> Optional[int]:
    # probe small extensions for solvability, reporting a sufficient degree
    from .ff import FieldTower

    for mult in (2, 3, 4, 6):
        deg = field.deg * mult
        if field.p ** deg > 3 ** 9:
            break
        tw = FieldTower(field.p, 1, levels=())
        tw._fields[field.deg] = field
        big = tw.field(deg)
        emb = tw.embedding_table(field.deg, deg)
        lead_up = {e: int(emb[a]) for e, a in lead.items()}
        if _solve_linearized(big, lead_up, int(emb[rhs])):
            return deg
    return None


def power_root_coeff(field: FiniteField, n: int, target: int) -> int:
    """Smallest code c with c^n = target (nonzero); reports a sufficient field on failure."""
    assert target != 0
    for c in field.units():
        if field.pow(c, n) == target:
            return c
    order = field.mult_order(target)
    req = None
    for mult in (2, 3, 4, 6):
        m = field.p ** (field.deg * mult) - 1
        if (m // math.gcd(n, m)) % order == 0:
            req = field.deg * mult
            break
    raise TowerTooSmallError(field, req, f"c^{n} = {target}")


def newton_slopes(points: list[tuple[int, Fraction]]) -> list[tuple[Fraction, list[int]]]:
    """Lower-hull edges of (exponent, valuation) points.

    Returns (root_valuation, [exponents on the edge]) per edge, root valuation
    mu = (v_i - v_j)/(e_j - e_i) for the edge from e_i < e_j.
    """
    pts = sorted(points)
    hull: list[tuple[int, Fraction]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it sits on or above the segment hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    edges = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        mu = Fraction(y1 - y2, x2 - x1)
        on_edge = [e for e, v in pts if (v - y1) * (x2 - x1) == (y2 - y1) * (e - x1)]
        edges.append((mu, on_edge))
    return edges


def additive_roots(P: AdditivePoly, rhs: Puiseux, prec, max_depth: int = 400) -> list[Puiseux]:
    """Every solution of P(X) = rhs, each determined modulo O(t^prec).

    Distinct solutions that agree modulo prec are returned once.  Raises
    PrecisionError when rhs does not carry enough precision to pin the
    solutions down to prec (or when correction valuations accumulate below
    prec, which finite truncation cannot cross), and TowerTooSmallError when a
    leading-coefficient equation needs a larger coefficient field (the error
    reports a degree that suffices).
    """
    prec = Fraction(prec)
    field = P.field
    assert rhs.field is field

    sols: list[Puiseux] = []

    def rec(partial: list[tuple[Fraction, int]], residual: Puiseux, floor: Optional[Fraction], depth: int):
        if depth > max_depth:
            raise PrecisionError(
                f"no convergence within {max_depth} lifting steps; "
                "correction valuations likely accumulate below the requested precision"
            )
        if residual.is_zero():
            # nothing visible to cancel; remaining corrections solve P(Y) = O(cutoff),
            # so they sit at or above the first polygon slope for that band
            if residual.cutoff is not None:
                pts = [(e, a.val()) for e, a in P.coeffs.items()]
                pts.append((0, residual.cutoff))
                attain = newton_slopes(pts)[0][0]
                if attain < prec:
                    raise PrecisionError(
                        f"roots determined only mod t^{attain}, wanted t^{prec}; raise input cutoffs"
                    )
            sols.append(Puiseux(field, partial, prec))
            return
        points = [(e, a.val()) for e, a in P.coeffs.items()]
        points.append((0, residual.val()))
        for mu, exps in newton_slopes(points):
            if floor is not None and mu <= floor:
                continue
            if mu >= prec:
                # corrections below resolution: the partial expansion is a root mod prec
                sols.append(Puiseux(field, partial, prec))
                return
            lead = {e: P.coeffs[e].leading()[1] for e in exps if e != 0}
            r0 = residual.leading()[1] if 0 in exps else 0
            roots_c = [c for c in _solve_linearized(field, lead, r0) if c != 0]
            if 0 in exps and not roots_c:
                req = _required_degree_for(field, lead, r0)
                raise TowerTooSmallError(field, req, f"slope {mu}")
            for c in roots_c:
                step = Puiseux.monomial(field, mu, c)
                rec(partial + [(mu, c)], residual - P(step), mu, depth + 1)

    if rhs.is_zero() and rhs.cutoff is None:
        # exact kernel: include the zero solution and all slope branches
        sols.append(Puiseux.zero(field, prec))
        points = [(e, a.val()) for e, a in P.coeffs.items()]
        for mu, exps in newton_slopes(points):
            if mu >= prec:
                continue
            lead = {e: P.coeffs[e].leading()[1] for e in exps}
            for c in _solve_linearized(field, lead, 0):
                if c == 0:
                    continue
                step = Puiseux.monomial(field, mu, c)
                rec([(mu, c)], -P(step), mu, 1)
    else:
        rec([], rhs, None, 0)

    uniq: dict[tuple, Puiseux] = {}
    for s in sols:
        uniq.setdefault(s.sort_key(), s)
    return sorted(uniq.values(), key=lambda s: s.sort_key())


def verify_root(P: AdditivePoly, rhs: Puiseux, x: Puiseux, min_residual_val) -> Fraction:
    """Resubstitute and return the residual valuation; asserts it clears the bar."""
    res = P(x) - rhs
    v = res.val()
    ok = v is None or v >= Fraction(min_residual_val)
    assert ok, f"residual valuation {v} below {min_residual_val}"
    return v if v is not None else Fraction(10 ** 9)


def default_cutoff(q: int) -> Fraction:
    h = Fraction(1, q * q - 1)
    return 2 * (1 + h)


# -- truncated uniformizer towers --
#
# Level one is a single exact monomial.  Higher levels carry the most precision
# a finite truncation can certify: `steps` lifting passes reach
# accum - (accum - v_level)/deg^steps, where accum is the level-one valuation
# and deg the degree of the level map; solving against a truncated right side
# costs a further factor deg.


@dataclass
class UnramifiedTower:
    """Primitive torsion chain for X^{q^2} + pi X over F_q((pi))."""

    field: FiniteField
    q: int
    varpi: Puiseux
    levels: list[Puiseux]  # varpi_1, ..., varpi_n

    def mult_by_varpi(self) -> AdditivePoly:
        f = self.field
        return AdditivePoly(f, {self.q ** 2: Puiseux.const(f, 1), 1: self.varpi})


def unramified_tower(field: FiniteField, q: int, n: int, cutoff=None, steps: int = 5) -> UnramifiedTower:
    """varpi_i with varpi_1^{q^2-1} = -varpi and varpi_i mapping down the chain.

    Valuations follow v(varpi_1) = h = 1/(q^2-1), v(varpi_i) = h/q^{2(i-1)}.
    """
    cutoff = Fraction(cutoff) if cutoff is not None else default_cutoff(q)
    h = Fraction(1, q * q - 1)
    varpi = Puiseux.monomial(field, 1, 1)
    mul_map = AdditivePoly(field, {q * q: Puiseux.const(field, 1), 1: varpi})
    c1 = power_root_coeff(field, q * q - 1, field.neg(1))
    levels = [Puiseux.monomial(field, h, c1)]
    for i in range(2, n + 1):
        want = h / q ** (2 * (i - 1))
        attain = h - (h - want) / q ** (2 * steps)
        prev = levels[-1]
        if prev.cutoff is not None:
            attain = min(attain, prev.cutoff / q ** 2)
        prec = min(cutoff, attain)
        assert prec > want, "precision cap below the level valuation"
        roots = [r for r in additive_roots(mul_map, prev, prec) if r.val() == want]
        assert roots, f"no root at the expected valuation {want}"
        levels.append(roots[0])
    return UnramifiedTower(field, q, varpi, levels)


@dataclass
class RamifiedTower:
    """Torsion chain for X^q + varpi_E X over F_q((varpi_E)), varpi_E^2 = varpi."""

    field: FiniteField
    q: int
    varpi_E: Puiseux  # t^(1/2)
    thetas: list[Puiseux]  # theta_1, ..., theta_{n+1}
    varpi_levels: list[Puiseux]  # varpi_{E,1}, ..., varpi_{E,n+1}

    def mult_by_varpi_E(self) -> AdditivePoly:
        f = self.field
        return AdditivePoly(f, {self.q: Puiseux.const(f, 1), 1: self.varpi_E})


def theta_tower(field: FiniteField, q: int, n: int, cutoff=None, steps: int = 5) -> RamifiedTower:
    """theta_1..theta_{n+1}: theta_1 = varpi_{E,1} and theta_i = varpi_{E,i}/varpi_{E,1}.

    The chain satisfies theta_1^{q-1} = -varpi_E, theta_2^q - theta_2 =
    -1/varpi_E, and theta_i^q - theta_i = -theta_{i-1}/varpi_E above that;
    theta_2 onward have negative valuation.
    """
    cutoff = Fraction(cutoff) if cutoff is not None else default_cutoff(q)
    a1 = Fraction(1, 2 * (q - 1))
    varpi_E = Puiseux.monomial(field, Fraction(1, 2), 1)
    mul_map = AdditivePoly(field, {q: Puiseux.const(field, 1), 1: varpi_E})
    c1 = power_root_coeff(field, q - 1, field.neg(1))
    levels = [Puiseux.monomial(field, a1, c1)]
    for i in range(2, n + 2):
        want = a1 / q ** (i - 1)
        attain = a1 - (a1 - want) / q ** steps
        prev = levels[-1]
        if prev.cutoff is not None:
            attain = min(attain, prev.cutoff / q)
        prec = min(cutoff, attain)
        assert prec > want, "precision cap below the level valuation"
        roots = [r for r in additive_roots(mul_map, prev, prec) if r.val() == want]
        assert roots, f"no root at the expected valuation {want}"
        levels.append(roots[0])
    inv1 = levels[0].inv()
    thetas = [levels[0]] + [lv * inv1 for lv in levels[1:]]
    return RamifiedTower(field, q, varpi_E, thetas, levels)
