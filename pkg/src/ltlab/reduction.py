"""Reduction of deep-level affinoids to plane curves over the residue field.

The engine replays a congruence computation in the exact one-generator ring
from ``tower``: every symbol that survives to the residue level (the curve
variables and the auxiliary unknowns that get eliminated) is carried as a
polynomial exponent, and every coefficient is an exact tower element, with a
working band introduced only where an honest infinite series shows up
(inverse scalings, the elimination of the mirror branch).  Each relation is
processed the same way: divide by the coefficient of its designated leading
monomial, read off the valuation-zero layer, and certify that everything
else sits at strictly positive valuation.  The valuation-zero layers form a
triangular polynomial system over the residue field; eliminating the pinned
symbols one at a time leaves a single plane curve.

Shape violations raise ``StructureError`` (a relation whose residue layer is
not what the triangular bookkeeping requires), and an insufficient working
band raises ``PrecisionError`` naming a cutoff that would do.  Certification
is strict: a visible term at negative valuation, or an unresolved band at or
below zero, always aborts the run rather than degrade the output.

Two reduction families are implemented, plus the deciders for whether a
unit-translated reference torsion point lands in the same affinoid.  Runs
are pure; rerunning with a translated reference point of the allowed class,
or the opposite choice of the scaling square root, reproduces the curve
coefficient for coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .ff import FiniteField, FieldTower, standard_tower
from .formal import _factor_prime_power
from .polys import MultiPoly
from .series import (
    AdditivePoly,
    PrecisionError,
    Puiseux,
    power_root_coeff,
    theta_tower,
    unramified_tower,
)
from .tower import TowerElem, TowerSpec, ramified_exact, unramified_exact


class StructureError(AssertionError):
    """A normalized relation failed its declared residue-level shape."""


# -- graded expressions: residue symbols with exact tower coefficients --


class GradedRing:
    """Polynomial ring in named residue symbols over one exact tower ring.

    ``cut`` is the optional working band: when set, every stored coefficient
    is truncated there, so bands propagate through all later arithmetic.
    """

    __slots__ = ("spec", "names", "cut")

    def __init__(self, spec: TowerSpec, names: tuple[str, ...], cut=None):
        self.spec = spec
        self.names = tuple(names)
        self.cut = None if cut is None else Fraction(cut)

    @property
    def nvars(self) -> int:
        return len(self.names)

    @property
    def field(self) -> FiniteField:
        return self.spec.field

    def zero(self) -> "GradedExpr":
        return GradedExpr(self, {})

    def one(self) -> "GradedExpr":
        return GradedExpr(self, {(0,) * self.nvars: self.spec.one()})

    def from_tower(self, c: TowerElem) -> "GradedExpr":
        return GradedExpr(self, {(0,) * self.nvars: c})

    def symbol(self, i: int) -> "GradedExpr":
        exp = tuple(1 if j == i else 0 for j in range(self.nvars))
        return GradedExpr(self, {exp: self.spec.one()})

    def lift(self, poly: MultiPoly) -> "GradedExpr":
        """Residue polynomial as a graded expression with constant coefficients."""
        assert poly.field is self.field and poly.nvars == self.nvars
        return GradedExpr(self, {m: self.spec.const(c) for m, c in poly.terms.items()})


class GradedExpr:
    __slots__ = ("ring", "terms")

    def __init__(self, ring: GradedRing, terms: dict[tuple[int, ...], TowerElem]):
        self.ring = ring
        clean: dict[tuple[int, ...], TowerElem] = {}
        for exp, c in terms.items():
            if ring.cut is not None:
                c = c.truncate(ring.cut)
            # exact zeros drop; banded zeros stay, they still carry uncertainty
            if c.is_zero() and c.cutoff() is None:
                continue
            clean[exp] = c
        self.terms = clean

    def __repr__(self):
        names = self.ring.names
        bits = []
        for exp, c in sorted(self.terms.items()):
            mono = "*".join(f"{names[i]}^{e}" for i, e in enumerate(exp) if e)
            bits.append(f"({c}){'*' + mono if mono else ''}")
        return " + ".join(bits) if bits else "0"

    def coeff(self, exp: tuple[int, ...]) -> TowerElem:
        c = self.terms.get(exp)
        return c if c is not None else self.ring.spec.zero(self.ring.cut)

    def has_visible(self) -> bool:
        return any(not c.is_zero() for c in self.terms.values())

    def min_visible_val(self) -> Optional[Fraction]:
        best = None
        for c in self.terms.values():
            if c.is_zero():
                continue
            v = c.val()
            if best is None or v < best:
                best = v
        return best

    def __add__(self, other: "GradedExpr") -> "GradedExpr":
        assert self.ring is other.ring
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out[exp] + c if exp in out else c
        return GradedExpr(self.ring, out)

    def __neg__(self) -> "GradedExpr":
        return GradedExpr(self.ring, {exp: -c for exp, c in self.terms.items()})

    def __sub__(self, other: "GradedExpr") -> "GradedExpr":
        return self + (-other)

    def __mul__(self, other: "GradedExpr") -> "GradedExpr":
        assert self.ring is other.ring
        out: dict[tuple[int, ...], TowerElem] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                add = c1 * c2
                out[exp] = out[exp] + add if exp in out else add
        return GradedExpr(self.ring, out)

    def mul_tower(self, c: TowerElem) -> "GradedExpr":
        return GradedExpr(self.ring, {exp: cc * c for exp, cc in self.terms.items()})

    def mul_code(self, code: int) -> "GradedExpr":
        return GradedExpr(self.ring, {exp: cc.scale(code) for exp, cc in self.terms.items()})

    def frob_pow(self, e: int) -> "GradedExpr":
        return GradedExpr(
            self.ring,
            {tuple(a * e for a in exp): c.frob_pow(e) for exp, c in self.terms.items()},
        )

    def __pow__(self, n: int) -> "GradedExpr":
        assert n >= 0
        p = self.ring.field.p
        result = self.ring.one()
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

    def subs(self, values: dict[int, MultiPoly]) -> "GradedExpr":
        """Substitute residue polynomials for the given symbols."""
        ring = self.ring
        pow_cache: dict[tuple[int, int], MultiPoly] = {}
        out = ring.zero()
        for exp, c in self.terms.items():
            rp: Optional[MultiPoly] = None
            rest = list(exp)
            for i, e in enumerate(exp):
                if e and i in values:
                    rest[i] = 0
                    pw = pow_cache.get((i, e))
                    if pw is None:
                        pw = values[i] ** e
                        pow_cache[(i, e)] = pw
                    rp = pw if rp is None else rp * pw
            base = GradedExpr(ring, {tuple(rest): c})
            out = out + (base * ring.lift(rp) if rp is not None else base)
        return out


def _exact_monomial_inv(c: TowerElem) -> Optional[TowerElem]:
    # single exact monomial: invert without any band at all
    if c.cutoff() is not None:
        return None
    vis = [(j, pz) for j, pz in c.cs.items() if not pz.is_zero()]
    if len(vis) != 1 or len(vis[0][1].terms) != 1:
        return None
    j, pz = vis[0]
    v, code = pz.terms[0]
    spec = c.spec
    return spec.w_inv_pow(j).mul_base(Puiseux.monomial(spec.field, -v, spec.field.inv(code)))


def _div(expr: GradedExpr, c: TowerElem, context: str) -> GradedExpr:
    """Divide by a normalizer; bands propagate, insufficiency raises."""
    inv_elem = _exact_monomial_inv(c)
    if inv_elem is None:
        vc = c.val()
        know = c.cutoff()
        if vc is None or vc == know:
            base = know if know is not None else Fraction(0)
            raise PrecisionError(
                f"{context}: normalizer entirely below the working band {know}; "
                f"rerun with cutoff at least {base + 1}"
            )
        band = (know - vc) if know is not None else (max(vc, Fraction(0)) + 3)
        if band <= 0:
            raise PrecisionError(
                f"{context}: normalizer valuation {vc} exceeds the working band {know}; "
                f"rerun with cutoff at least {vc + 1}"
            )
        inv_elem = c.inv(band)
    return expr.mul_tower(inv_elem)


def _residue_split(expr: GradedExpr, context: str):
    """(valuation-zero layer, min positive val, max positive val, min band).

    Negative-valuation terms and bands at or below zero abort: the layer
    would not be pinned.
    """
    ring = expr.ring
    f = ring.field
    v_w = ring.spec.v_w
    zero_layer: dict[tuple[int, ...], int] = {}
    min_pos = max_pos = None
    min_band = None
    for exp, c in expr.terms.items():
        b = c.cutoff()
        if b is not None:
            if b <= 0:
                hint = ring.cut - b + 1 if ring.cut is not None else 1 - b
                raise PrecisionError(
                    f"{context}: coefficient band {b} at or below zero; "
                    f"rerun with cutoff at least {hint}"
                )
            if min_band is None or b < min_band:
                min_band = b
        for j, pz in c.cs.items():
            for v, code in pz.terms:
                vv = v + j * v_w
                if vv < 0:
                    raise StructureError(f"{context}: term at negative valuation {vv}: {expr!r}")
                if vv == 0:
                    assert j == 0, "valuation-zero term off the base lattice"
                    s = f.add(zero_layer.get(exp, 0), code)
                    if s:
                        zero_layer[exp] = s
                    else:
                        zero_layer.pop(exp, None)
                else:
                    if min_pos is None or vv < min_pos:
                        min_pos = vv
                    if max_pos is None or vv > max_pos:
                        max_pos = vv
    return MultiPoly(f, ring.nvars, zero_layer), min_pos, max_pos, min_band


def _grade0(expr: GradedExpr, context: str) -> MultiPoly:
    return _residue_split(expr, context)[0]


def _assert_vanishes(expr: GradedExpr, context: str) -> None:
    g, _, _, _ = _residue_split(expr, context)
    if not g.is_zero():
        raise StructureError(f"{context}: nonzero residue layer {g!r}")


class _ResidualTally:
    """Aggregate dropped-term statistics across certified relations."""

    def __init__(self):
        self.min_pos: Optional[Fraction] = None
        self.max_pos: Optional[Fraction] = None
        self.min_band: Optional[Fraction] = None

    def feed(self, stats) -> None:
        _, mn, mx, band = stats
        if mn is not None and (self.min_pos is None or mn < self.min_pos):
            self.min_pos = mn
        if mx is not None and (self.max_pos is None or mx > self.max_pos):
            self.max_pos = mx
        if band is not None and (self.min_band is None or band < self.min_band):
            self.min_band = band


# -- results --


def _poly_json(poly: MultiPoly, names) -> dict:
    return {
        "vars": list(names),
        "terms": sorted([list(mono), int(c)] for mono, c in poly.terms.items()),
    }


def _frac_str(x) -> Optional[str]:
    return None if x is None else str(x)


@dataclass
class ReductionResult:
    """Plane curve plus the triangular residue system it was cut from.

    ``curve`` lives in two variables (``curve_vars``); ``aux_system`` holds
    the valuation-zero layers of all normalized relations in elimination
    order, over the full symbol set ``aux_names``.  ``residual_max_val`` is
    the largest valuation seen among certified-dropped terms,
    ``residual_min_val`` the binding positive margin, ``cutoff`` the working
    band (None for an exact run).
    """

    q: int
    level: int
    case: str
    field: FiniteField
    curve_vars: tuple[str, str]
    curve: MultiPoly
    aux_names: tuple[str, ...]
    aux_system: list[MultiPoly]
    residual_min_val: Optional[Fraction]
    residual_max_val: Optional[Fraction]
    cutoff: Optional[Fraction]
    jacobian: str

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "level": self.level,
            "case": self.case,
            "field": {"p": self.field.p, "deg": self.field.deg},
            "curve_poly": _poly_json(self.curve, self.curve_vars),
            "aux_system": [_poly_json(g, self.aux_names) for g in self.aux_system],
            "residual_max_val": _frac_str(self.residual_max_val),
            "residual_min_val": _frac_str(self.residual_min_val),
            "cutoff": _frac_str(self.cutoff),
            "jacobian": self.jacobian,
        }


def _project(poly: MultiPoly, keep: tuple[int, int], context: str) -> MultiPoly:
    out: dict[tuple[int, int], int] = {}
    for mono, c in poly.terms.items():
        for i, e in enumerate(mono):
            if e and i not in keep:
                raise StructureError(f"{context}: stray symbol index {i} in {poly!r}")
        out[(mono[keep[0]], mono[keep[1]])] = c
    return MultiPoly(poly.field, 2, out)


def _solve_pivot(g: MultiPoly, pivot: int, solved: dict[int, MultiPoly], context: str) -> MultiPoly:
    """Solve a residue relation linear in its pivot after back-substitution."""
    nv = g.nvars
    values = [solved.get(i, MultiPoly.var(g.field, nv, i)) for i in range(nv)]
    gs = g.subs(values)
    e_pivot = tuple(1 if i == pivot else 0 for i in range(nv))
    c_p = 0
    rest: dict[tuple[int, ...], int] = {}
    for mono, c in gs.terms.items():
        if mono == e_pivot:
            c_p = c
        elif mono[pivot]:
            raise StructureError(f"{context}: relation not linear in its pivot: {gs!r}")
        else:
            rest[mono] = c
    if not c_p:
        raise StructureError(f"{context}: pivot coefficient vanished: {gs!r}")
    return MultiPoly(g.field, nv, rest).scale(g.field.neg(g.field.inv(c_p)))


def _triangular_det(rows: list[MultiPoly], cols: list[int], context: str) -> int:
    """Determinant of d(rows)/d(cols) for a system triangular in that order.

    Entries above the diagonal must vanish and diagonal entries must be
    nonzero constants; anything else is a structure failure.
    """
    assert len(rows) == len(cols)
    f = rows[0].field
    det = 1
    for i, g in enumerate(rows):
        for jj, col in enumerate(cols):
            d = g.partial(col)
            if jj > i and not d.is_zero():
                raise StructureError(f"{context}: entry ({i},{jj}) above the diagonal is {d!r}")
            if jj == i:
                if set(d.terms) - {(0,) * g.nvars}:
                    raise StructureError(f"{context}: diagonal entry ({i},{i}) not constant: {d!r}")
                c = d.terms.get((0,) * g.nvars, 0)
                if not c:
                    raise StructureError(f"{context}: zero diagonal entry at {i}")
                det = f.mul(det, c)
    return det


# -- unramified reduction --


def _unramified_level_one(q: int, st: FieldTower, cutoff) -> ReductionResult:
    """Level one reduces by an exact residue-field identity; no bands at all.

    With E_X = X^{q^2} + u0 X^q - X and the bilinear form mu = X^q Y - X Y^q,
    the combination Y^q E_X - X^q E_Y equals mu^q + mu identically, so the
    vanishing locus forces mu^{q-1} = -1.  The scaled module law itself is
    checked exactly in the level-one tower ring.
    """
    f2 = st.field(2)
    u0v, xv, yv = MultiPoly.variables(f2, 3)
    ex = xv.frob_pow(q * q) + u0v * xv.frob_pow(q) - xv
    ey = yv.frob_pow(q * q) + u0v * yv.frob_pow(q) - yv
    mu = xv.frob_pow(q) * yv - xv * yv.frob_pow(q)
    assert yv.frob_pow(q) * ex - xv.frob_pow(q) * ey == mu.frob_pow(q) + mu
    curve3 = mu ** (q - 1) + MultiPoly.const(f2, 3, 1)

    # u0 is a unit function of either coordinate on the locus
    aux_x = u0v * xv ** (q - 1) - MultiPoly.const(f2, 3, 1) + xv ** (q * q - 1)
    aux_y = u0v * yv ** (q - 1) - MultiPoly.const(f2, 3, 1) + yv ** (q * q - 1)
    assert ex == xv * aux_x and ey == yv * aux_y

    # smoothness certificate on the unit locus: X f_X + Y f_Y = 1 - f
    fx, fy = curve3.partial(1), curve3.partial(2)
    assert xv * fx + yv * fy == MultiPoly.const(f2, 3, 1) - curve3

    # the coordinate scalings turn the module law into E_X exactly
    f4 = st.field(4)
    tw = unramified_exact(f4, q, 1)
    spec = tw.spec
    ring = GradedRing(spec, ("u0", "X", "Y"), cutoff)
    w1 = tw.levels[0]
    varpi = spec.monomial(1)
    arg = ring.symbol(1).mul_tower(w1)
    law = (
        arg.frob_pow(q * q)
        + (ring.symbol(0).mul_tower(w1 ** (q * (q - 1)))) * arg.frob_pow(q)
        + arg.mul_tower(varpi)
    )
    scaled = _div(law, w1 ** (q * q), "level-one law")
    u4, x4, _ = MultiPoly.variables(f4, 3)
    target = x4.frob_pow(q * q) + u4 * x4.frob_pow(q) - x4
    _assert_vanishes(scaled - ring.lift(target), "level-one scaled law")

    curve = _project(curve3, (1, 2), "level-one curve")
    return ReductionResult(
        q=q,
        level=1,
        case="unramified",
        field=f2,
        curve_vars=("X", "Y"),
        curve=curve,
        aux_names=("u0", "X", "Y"),
        aux_system=[aux_x, aux_y],
        residual_min_val=None,
        residual_max_val=None,
        cutoff=None if cutoff is None else Fraction(cutoff),
        jacobian="unit certificate: X*dX + Y*dY = 1 - f",
    )


def _translated_levels(tw, q: int, codes4: list[int]) -> list[TowerElem]:
    """Torsion chain under a translated reference point given by unit digits."""
    spec = tw.spec
    f = spec.field
    k = tw.k
    top = None
    for i, code in enumerate(codes4):
        if code == 0:
            continue
        piece = tw.levels[k - 1 - i].scale(code)
        top = piece if top is None else top + piece
    assert top is not None
    mul_map = AdditivePoly(f, {q * q: Puiseux.const(f, 1), 1: Puiseux.monomial(f, 1, 1)})
    chain = [top]
    for _ in range(k - 1):
        chain.append(mul_map(chain[-1]))
    chain.reverse()
    # bottom of the chain is the digit-0 scaling of level one; above a
    # translate of the allowed class, the lower levels are untouched
    assert (chain[0] - tw.levels[0].scale(codes4[0])).is_zero()
    for i in range(k - 1):
        assert (chain[i] - tw.levels[i]).is_zero()
    assert (mul_map(chain[0])).is_zero()
    return chain


def reduce_unramified(q: int, k: int, *, translate=None, cutoff=None) -> ReductionResult:
    """Reduce the level-k affinoid of the two-dimensional module to its curve.

    ``translate`` optionally replaces the reference torsion point by its
    image under a unit with digit vector ``(1, 0, ..., 0, c)`` (codes in the
    quadratic extension); the output must not change.  ``cutoff`` forces a
    working band; the run is exact when it is omitted.
    """
    p, r = _factor_prime_power(q)
    assert k >= 1
    st = standard_tower(p, r)
    if k == 1:
        if translate is not None:
            assert len(translate) == 1 and translate[0] != 0
        return _unramified_level_one(q, st, cutoff)

    f4 = st.field(4)
    tw = unramified_exact(f4, q, k)
    spec = tw.spec
    levels = list(tw.levels)
    if translate is not None:
        codes = list(translate)
        assert len(codes) == k and codes[0] == 1
        assert all(c == 0 for c in codes[1 : k - 1]), "translate must fix the lower chain"
        codes4 = [st.embed(c, 2, 4) for c in codes]
        levels = _translated_levels(tw, q, codes4)

    zeta = st.embed(st.zeta(2), 2, 4)
    z1 = f4.sub(f4.pow(zeta, q), zeta)
    zeta_q = f4.pow(zeta, q)
    m = (k + 1) // 2
    h = Fraction(1, q * q - 1)
    varpi = spec.monomial(1)

    ring = GradedRing(spec, ("u0", "X", "Y"), cutoff)
    u0s = ring.symbol(0)

    if k % 2 == 0:
        s_u = spec.monomial(m)
        s_S = levels[m] ** q
        # the top scaling constant is congruent to level one past the kernel valuation
        assert (levels[m] ** (q ** k) - levels[0]).val() > h
    else:
        s_u = spec.monomial(m - 1) * levels[0] ** (q * (q - 1))
        s_S = levels[m - 1]
        assert (levels[m - 1] ** (q ** (k - 1)) - levels[0]).val() > h

    u_full = u0s.mul_tower(s_u)
    S = ring.symbol(2).mul_tower(s_S)
    U = ring.symbol(1).mul_tower(levels[0].scale(z1))

    S1 = U1 = None
    for i in range(k, 0, -1):
        if i == 1:
            S1, U1 = S, U
        pi_i_q = levels[i - 1] ** q
        Sq = S.frob_pow(q)
        S_new = S.frob_pow(q * q) + S.mul_tower(varpi) + u_full * (ring.from_tower(pi_i_q) + Sq)
        U_new = U.frob_pow(q * q) + U.mul_tower(varpi) + u_full * (Sq.mul_code(z1) + U.frob_pow(q))
        S, U = S_new, U_new

    e_u0 = (1, 0, 0)
    e_xq2 = (0, q * q, 0)
    c1 = S.coeff(e_u0)
    c2 = U.coeff(e_xq2)

    # the first normalizer has a closed form: the u0 scaling times the
    # twisted sum of the chain below the top
    acc = spec.zero()
    for i in range(1, k + 1):
        acc = acc + (levels[i - 1] ** q).mul_base(Puiseux.monomial(f4, i - 1, 1))
    expected_c1 = s_u * acc
    d_c1 = c1 - expected_c1
    assert d_c1.is_zero(), "closed form for the first normalizer failed"
    if ring.cut is None:
        assert c1.val() == (m + q * h if k % 2 == 0 else m + h)
        assert c2.val() == k + h

    f1 = _div(S, c1, f"level-{k} first relation")
    f2 = _div(U, c2, f"level-{k} second relation")
    s1 = _residue_split(f1, "first relation")
    s2 = _residue_split(f2, "second relation")
    g1, g2 = s1[0], s2[0]

    # first layer: u0 plus a polynomial in Y alone, unit coefficient on u0
    if g1.terms.get(e_u0) != 1:
        raise StructureError(f"first relation: u0 coefficient is not one: {g1!r}")
    for mono in g1.terms:
        if mono != e_u0 and (mono[0] or mono[1]):
            raise StructureError(f"first relation: stray monomial {mono} in {g1!r}")
    # second layer: X^{q^2} - X plus terms free of X
    if g2.terms.get(e_xq2) != 1 or g2.terms.get((0, 1, 0)) != f4.neg(1):
        raise StructureError(f"second relation: Frobenius-minus-identity part malformed: {g2!r}")
    for mono in g2.terms:
        if mono[1] and mono not in (e_xq2, (0, 1, 0)):
            raise StructureError(f"second relation: stray X monomial {mono} in {g2!r}")

    det = g1.partial(0) * g2.partial(1) - g1.partial(1) * g2.partial(0)
    if det != MultiPoly.const(f4, 3, f4.neg(1)):
        raise StructureError(f"level-{k} Jacobian is {det!r}, not -1")

    u0_sol = MultiPoly.var(f4, 3, 0) - g1
    xv, yv = MultiPoly.var(f4, 3, 1), MultiPoly.var(f4, 3, 2)
    curve3 = g2.subs([u0_sol, xv, yv])
    curve = _project(curve3, (1, 2), f"level-{k} curve")

    # certified residuals, then re-substitution soundness
    tally = _ResidualTally()
    tally.feed(s1)
    tally.feed(s2)
    _assert_vanishes(f1.subs({0: u0_sol}), "first relation after elimination")
    _assert_vanishes(f2.subs({0: u0_sol}) - ring.lift(curve3), "second relation after elimination")

    # the level-one coordinate pair stays a unit of exact valuation (q+1)h:
    # its leading behavior is -zeta1 * (level one)^{q+1} times (1 + positive)
    x1 = ring.from_tower(levels[0]) + S1
    y1 = ring.from_tower(levels[0].scale(zeta)) + (S1.mul_code(zeta_q) - U1)
    mu1 = x1.frob_pow(q) * y1 - x1 * y1.frob_pow(q)
    lead = (levels[0] ** (q + 1)).scale(f4.neg(z1))
    _assert_vanishes(_div(mu1, lead, "bilinear unit") - ring.one(), "bilinear unit leading part")

    return ReductionResult(
        q=q,
        level=k,
        case="unramified",
        field=f4,
        curve_vars=("X", "Y"),
        curve=curve,
        aux_names=("u0", "X", "Y"),
        aux_system=[g1, g2],
        residual_min_val=tally.min_pos,
        residual_max_val=tally.max_pos,
        cutoff=ring.cut,
        jacobian="-1",
    )


# -- ramified reduction --


def reduce_ramified(q: int, n: int, *, eps_sign: int = 1, cutoff=None) -> ReductionResult:
    """Reduce the odd-level affinoid of the ramified quadratic twist.

    ``n`` must be odd (even levels split into disjoint lines and are out of
    scope).  ``eps_sign`` flips the square root used in the symbol scalings;
    both signs must give the same curve.  ``cutoff`` overrides the working
    band, which unlike the other family is always needed here.
    """
    p, r = _factor_prime_power(q)
    assert p != 2, "odd residue characteristic only"
    assert n >= 1 and n % 2 == 1, "odd levels only"
    assert eps_sign in (1, -1)
    k = n
    m = (k + 1) // 2
    st = standard_tower(p, r)
    f2 = st.field(2)
    tw = ramified_exact(f2, q, k)
    spec = tw.spec
    levels, thetas = tw.levels, tw.thetas

    cut = Fraction(cutoff) if cutoff is not None else Fraction(k - 1, 2) + 3
    b_inv = cut + 2
    names = tuple(
        [f"U{i}" for i in range(k + 1)] + ["b1z", "b1"] + [f"b1_{j}" for j in range(1, k + 1)]
    )
    ring = GradedRing(spec, names, cut)
    idx_a, idx_s = k, 2 * k + 2

    varpi_E = Puiseux.monomial(f2, Fraction(1, 2), 1)
    pe = spec.from_puiseux(varpi_E)
    pe_inv = spec.from_puiseux(varpi_E.inv())
    th1 = thetas[0]
    E = (q - 1) // 2

    eps = 1 if (m - 1) % 2 == 0 else f2.sqrt(f2.neg(1))
    if eps_sign == -1:
        eps = f2.neg(eps)
    assert f2.mul(eps, eps) == (1 if (m - 1) % 2 == 0 else f2.neg(1))

    # symbol scalings; their valuations follow the affinoid chain
    sb_base = (th1 ** E).scale(eps)
    scal_b = sb_base * spec.monomial(Fraction(m - 2, 2))
    assert scal_b.val() == Fraction(k - 2, 4)
    scal_bj: dict[int, TowerElem] = {}
    for j in range(1, m):
        scal_bj[j] = sb_base * spec.monomial(Fraction(m - 1 - j, 2))
        assert scal_bj[j].val() == Fraction(k - 2 * j, 4)
    scal_bj[m] = (levels[1] ** E).inv(b_inv).scale(eps)
    assert scal_bj[m].val() == -Fraction(1, 4 * q)
    for j in range(1, m):
        prod = levels[j + 1]
        for l in range(2, j + 2):
            prod = prod * levels[l - 1] ** 2
        scal_bj[m + j] = (prod ** E).inv(b_inv).scale(eps)
    for j in range(m + 1, k + 1):
        assert scal_bj[j].val() == (scal_bj[j - 1].val() - Fraction(1, 2)) / q

    s_U = [spec.monomial(Fraction(k - 1, 2))] + [
        spec.monomial(Fraction(k - i, 2)) for i in range(1, k + 1)
    ]
    U_e = [ring.symbol(i).mul_tower(s_U[i]) for i in range(k + 1)]
    u10 = ring.symbol(k + 1).mul_tower(scal_b)
    u1 = ring.symbol(k + 2).mul_tower(scal_b)
    u1j = {j: ring.symbol(k + 2 + j).mul_tower(scal_bj[j]) for j in range(1, k + 1)}

    # mirror branch: u2 = -u1 * sum (pe*u1)^t, convergent since v(pe*u1) > 0
    g_ser = u1.mul_tower(pe)
    vg = g_ser.min_visible_val()
    if vg is None:
        raise PrecisionError(
            f"mirror branch: ratio entirely below the working band; "
            f"rerun with cutoff at least {cut + 1}"
        )
    assert vg > 0
    geo = ring.one()
    gp = g_ser
    while gp.has_visible():
        geo = geo + gp
        gp = gp * g_ser
    u2 = -(u1 * geo)
    _assert_vanishes(u1 + u2 - (u1 * u2).mul_tower(pe), "mirror branch sum rule")
    u2j = {j: U_e[j] - u1j[j] for j in range(1, k + 1)}

    def e_of(i: int, mult: int = 1) -> tuple[int, ...]:
        return tuple(mult if j == i else 0 for j in range(ring.nvars))

    relations: list[tuple[str, GradedExpr, tuple[int, ...], Optional[int]]] = []
    # (name, relation, normalizer monomial, pivot symbol or None for the curve)
    for j in range(k, 1, -1):
        ux = u1 if j % 2 == 1 else u2
        rel = (
            u1j[j].frob_pow(q)
            - u1j[j]
            + u1j[j - 1].mul_tower(pe_inv)
            - (ring.from_tower(thetas[j - 1]) + u1j[j - 1]) * ux
        )
        norm = e_of(k + 2 + j, q) if j >= m else e_of(k + 2 + j)
        relations.append((f"chain {j}", rel, norm, k + j + 1))
    rel_c1 = u1j[1].frob_pow(q) - u1j[1] - u1
    norm_c1 = e_of(k + 3, q) if m == 1 else e_of(k + 3)
    relations.append(("chain 1", rel_c1, norm_c1, k + 2))
    rel_a = (
        u10
        - u1
        + (u10.frob_pow(q).mul_tower(pe ** (q - 1))) * (ring.one() - u10.mul_tower(pe))
    )
    relations.append(("branch parameter", rel_a, e_of(k + 1), k + 1))
    relations.append(("norm 0", U_e[0] - (u1 * u2).mul_tower(pe), e_of(0), 0))
    for i in range(1, k):
        if i == 1:
            rel = U_e[1].frob_pow(q) - U_e[1] - U_e[0]
        else:
            qq = u1j[i - 1] * (u1 if i % 2 == 1 else u2) + u2j[i - 1] * (u2 if i % 2 == 1 else u1)
            rel = (
                U_e[i].frob_pow(q)
                - U_e[i]
                + U_e[i - 1].mul_tower(pe_inv)
                - ring.from_tower(thetas[i - 1]) * U_e[0]
                - qq
            )
        relations.append((f"norm {i}", rel, e_of(i), i))
    if k == 1:
        curve_rel = U_e[1].frob_pow(q) - U_e[1] - U_e[0]
    else:
        qq = u1j[k - 1] * (u1 if k % 2 == 1 else u2) + u2j[k - 1] * (u2 if k % 2 == 1 else u1)
        curve_rel = (
            U_e[k].frob_pow(q)
            - U_e[k]
            + U_e[k - 1].mul_tower(pe_inv)
            - ring.from_tower(thetas[k - 1]) * U_e[0]
            - qq
        )

    tally = _ResidualTally()
    solved: dict[int, MultiPoly] = {}
    aux: list[MultiPoly] = []
    rows: list[MultiPoly] = []
    cols: list[int] = []
    normalized: list[tuple[str, GradedExpr]] = []
    for name, rel, norm_exp, pivot in relations:
        nrel = _div(rel, rel.coeff(norm_exp), name)
        stats = _residue_split(nrel, name)
        tally.feed(stats)
        g = stats[0]
        aux.append(g)
        rows.append(g)
        cols.append(pivot)
        normalized.append((name, nrel))
        solved[pivot] = _solve_pivot(g, pivot, solved, name)

    # curve relation: already monic in the Frobenius power of the last symbol
    stats = _residue_split(curve_rel, "curve relation")
    tally.feed(stats)
    gc = stats[0]
    aux.append(gc)
    rows.append(gc)
    cols.append(idx_a)
    values = [solved.get(i, MultiPoly.var(f2, ring.nvars, i)) for i in range(ring.nvars)]
    curve_full = gc.subs(values)
    curve = _project(curve_full, (idx_a, idx_s), "curve")

    det = _triangular_det(rows, cols, "triangular system")
    if det not in (1, f2.neg(1)):
        raise StructureError(f"triangular determinant {det} is not a sign")
    if curve.partial(0) != MultiPoly.const(f2, 2, f2.neg(1)):
        raise StructureError("curve is not monic-separable in its first variable")

    # re-substitution soundness: the solved layers kill every relation
    for name, nrel in normalized:
        _assert_vanishes(nrel.subs(solved), f"{name} after elimination")
    _assert_vanishes(curve_rel.subs(solved) - ring.lift(curve_full), "curve after elimination")

    return ReductionResult(
        q=q,
        level=k,
        case="ramified",
        field=f2,
        curve_vars=("a", "s"),
        curve=curve,
        aux_names=names,
        aux_system=aux,
        residual_min_val=tally.min_pos,
        residual_max_val=tally.max_pos,
        cutoff=cut,
        jacobian="-1" if det == f2.neg(1) else "1",
    )


# -- affinoid membership for translated reference points --


@dataclass
class OverlapReport:
    """Outcome of comparing the affinoids of two unit-translated points.

    ``v_delta`` is the exact valuation of the difference of reference points
    (None when they coincide); the decision compares it to ``threshold``.
    ``digit_rule`` is the same decision read off the digit vector, and
    ``series_val`` the valuation recomputed from truncated-series torsion
    points; both must agree with the exact computation.
    """

    case: str
    q: int
    level: int
    digits: tuple[int, ...]
    decision: str
    v_delta: Optional[Fraction]
    threshold: Fraction
    digit_rule: str
    series_val: Optional[Fraction]
    witness_val: Optional[Fraction]

    @property
    def same(self) -> bool:
        return self.decision == "same"


def affinoid_overlap(q: int, k: int, digits) -> OverlapReport:
    """Decide whether a unit translate keeps the level-k reference affinoid.

    ``digits`` are the unit's expansion codes in the quadratic extension,
    length k (the action only matters mod the k-th power of the uniformizer);
    the leading digit must be nonzero.  The decision "same" holds exactly
    when the translate moves the reference point by valuation at least the
    kernel valuation h, which happens precisely for digit vectors
    (1, 0, ..., 0, *).
    """
    p, r = _factor_prime_power(q)
    st = standard_tower(p, r)
    f4 = st.field(4)
    digits = tuple(digits)
    assert len(digits) == k and digits[0] != 0
    codes4 = [st.embed(c, 2, 4) for c in digits]

    tw = unramified_exact(f4, q, k)
    translate = None
    for i, code in enumerate(codes4):
        if code == 0:
            continue
        piece = tw.levels[k - 1 - i].scale(code)
        translate = piece if translate is None else translate + piece
    assert translate is not None

    # the translate is again a primitive point of the same level
    mul_map = AdditivePoly(f4, {q * q: Puiseux.const(f4, 1), 1: Puiseux.monomial(f4, 1, 1)})
    down = translate
    for _ in range(k - 1):
        down = mul_map(down)
    assert (down - tw.levels[0].scale(codes4[0])).is_zero()
    assert mul_map(down).is_zero()

    delta = tw.levels[k - 1] - translate
    v_delta = None if delta.is_zero() else delta.val()
    h = Fraction(1, q * q - 1)
    same = v_delta is None or v_delta >= h

    # level one is a single affinoid; higher up only the leading digit 1
    # with untouched middle digits keeps the kernel-valuation margin
    rule_same = k == 1 or (digits[0] == 1 and all(c == 0 for c in digits[1 : k - 1]))
    assert same == rule_same

    # independent check against truncated-series torsion points; a series
    # chain is only certified below the kernel valuation, so a difference at
    # or above its cutoff legitimately shows as empty
    ser = unramified_tower(f4, q, k)
    dser = ser.levels[k - 1].scale(f4.sub(1, codes4[0]))
    for i in range(1, k):
        if codes4[i]:
            dser = dser - ser.levels[k - 1 - i].scale(codes4[i])
    series_val = dser.val() if dser.terms else None
    if series_val is not None:
        assert series_val == v_delta
    elif v_delta is not None:
        assert dser.cutoff is not None and v_delta >= dser.cutoff

    # the affinoid coordinate pair moves by scalar multiples of the
    # translation itself, so the coordinate shift has the same valuation
    zeta = st.embed(st.zeta(2), 2, 4)
    z1 = f4.sub(f4.pow(zeta, q), zeta)
    witness = delta.scale(f4.neg(z1))
    witness_val = None if witness.is_zero() else witness.val()
    assert witness_val == v_delta

    return OverlapReport(
        case="unramified",
        q=q,
        level=k,
        digits=digits,
        decision="same" if same else "disjoint",
        v_delta=v_delta,
        threshold=h,
        digit_rule="same" if rule_same else "disjoint",
        series_val=series_val,
        witness_val=witness_val,
    )


def affinoid_overlap_ramified(q: int, k: int, digits) -> OverlapReport:
    """Decide affinoid membership for a unit translate in the ramified family.

    ``digits`` are the unit's expansion codes in the base residue field,
    length k+1 (the action matters mod the (k+1)-st power of the ramified
    uniformizer).  The threshold 1/(q-1) exceeds the valuation of every
    nonzero torsion point, so only the identity keeps the affinoid.
    """
    p, r = _factor_prime_power(q)
    assert p != 2
    st = standard_tower(p, r)
    f2 = st.field(2)
    digits = tuple(digits)
    assert len(digits) == k + 1 and digits[0] != 0
    codes2 = [st.embed(c, 1, 2) for c in digits]

    tw = ramified_exact(f2, q, k)
    translate = None
    for i, code in enumerate(codes2):
        if code == 0:
            continue
        piece = tw.levels[k - i].scale(code)
        translate = piece if translate is None else translate + piece
    assert translate is not None

    mul_map = AdditivePoly(f2, {q: Puiseux.const(f2, 1), 1: Puiseux.monomial(f2, Fraction(1, 2), 1)})
    down = translate
    for _ in range(k):
        down = mul_map(down)
    assert (down - tw.levels[0].scale(codes2[0])).is_zero()
    assert mul_map(down).is_zero()

    delta = tw.levels[k] - translate
    v_delta = None if delta.is_zero() else delta.val()
    threshold = Fraction(1, q - 1)
    same = v_delta is None or v_delta >= threshold

    rule_same = digits[0] == 1 and all(c == 0 for c in digits[1:])
    assert same == rule_same

    ser = theta_tower(f2, q, k)
    dser = ser.varpi_levels[k].scale(f2.sub(1, codes2[0]))
    for i in range(1, k + 1):
        if codes2[i]:
            dser = dser - ser.varpi_levels[k - i].scale(codes2[i])
    series_val = dser.val() if dser.terms else None
    if series_val is not None:
        assert series_val == v_delta
    elif v_delta is not None:
        assert dser.cutoff is not None and v_delta >= dser.cutoff

    # ratio coordinate at the top of the chain: theta difference witness
    a1 = Fraction(1, 2 * (q - 1))
    c1 = power_root_coeff(f2, q - 1, f2.neg(1))
    inv1 = tw.spec.from_puiseux(Puiseux.monomial(f2, a1, c1).inv())
    theta_prime = translate * inv1.scale(f2.inv(codes2[0]))
    theta_diff = tw.thetas[k] - theta_prime
    witness_val = None if theta_diff.is_zero() else theta_diff.val()
    if same:
        assert witness_val is None
    elif codes2[0] == 1:
        assert witness_val == v_delta - a1

    return OverlapReport(
        case="ramified",
        q=q,
        level=k,
        digits=digits,
        decision="same" if same else "disjoint",
        v_delta=v_delta,
        threshold=threshold,
        digit_rule="same" if rule_same else "disjoint",
        series_val=series_val,
        witness_val=witness_val,
    )
