"""Point counts and Frobenius eigenvalue fits for the reduction curves.

Curves are affine plane curves over one level of a field tower, tagged with
a counting strategy so that extension-field enumeration stays one
dimensional whenever the defining equation allows it:

* ``("as", i, q0, j, rhs)``: the equation reads ``x_i^{q0} - x_i = rhs(x_j)``.
  For each value of ``x_j`` the fiber has ``q0`` points exactly when the
  trace of the right side down to the ``q0``-element subfield vanishes, so a
  single pass over ``x_j`` counts the curve.
* ``("mu", targets)``: the equation constrains ``S^q T - S T^q`` to a tuple
  of nonzero targets.  For fixed ``T != 0`` the left side is additive in
  ``S`` with image ``T^{q+1}`` times the trace-zero hyperplane, so a single
  pass over ``T`` counts the fiber union.
* ``("brute",)``: grid scan, kept for cross-checks and small oddballs.

Twisted point counts (an automorphism composed with a power of Frobenius)
reuse the same passes after restricting each coordinate to the twisted
eigenline ``{y : y^Q = c y}`` inside the extension field that the
automorphism order forces.  Eigenvalue extraction runs Newton's identities
on the count sequence, takes roots, and snaps them to quadratic integers
before verifying the rounded multiset against every supplied count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ff import Character, FieldTower, FiniteField, gauss_sum, standard_tower
from .formal import _factor_prime_power
from .polys import MultiPoly

DEFAULT_BUDGET = 50_000_000


class BudgetError(RuntimeError):
    """Raised when a count would need more table or scan work than allowed."""


class FitError(ValueError):
    """Raised when no integral eigenvalue multiset reproduces the counts."""


# -- cost model -------------------------------------------------------------
#
# Building the log/exp tables of F_{p^d} costs about p^d * d^2 elementary
# steps and dominates everything else at the sizes we allow; enumeration
# passes add a small per-element factor on top.

_SCAN_FACTOR = 6


def _table_cost(tower: FieldTower, level: int) -> int:
    if level in tower._fields:
        return 0
    d = tower.r * level
    return tower.p ** d * d * d


def _charge(tower: FieldTower, level: int, scan: int, budget: int, what: str) -> None:
    cost = _table_cost(tower, level) + scan
    if cost > budget:
        order = tower.p ** (tower.r * level)
        raise BudgetError(
            f"{what} needs a pass over a field of order {order} "
            f"(about {cost:,} steps); budget {budget:,}"
        )


# -- bulk helpers on code arrays -------------------------------------------


def _pow1(F: FiniteField, a: int, e: int) -> int:
    return 1 if e == 0 else F.pow(a, e)


def _bulk_eval_terms(F: FiniteField, terms, values: np.ndarray) -> np.ndarray:
    """Sum of c * v^e over (e, c) pairs, elementwise on a code array."""
    acc = np.zeros_like(values)
    for e, c in terms:
        acc = F.add_bulk(acc, F.mul_bulk(F.pow_bulk(values, e), c))
    return acc


def _bulk_trace(F: FiniteField, A: np.ndarray, sub_pdeg: int) -> np.ndarray:
    """Trace onto the subfield of degree sub_pdeg over the prime field."""
    assert F.deg % sub_pdeg == 0
    step = F.p ** sub_pdeg
    acc = A
    cur = A
    for _ in range(F.deg // sub_pdeg - 1):
        cur = F.pow_bulk(cur, step)
        acc = F.add_bulk(acc, cur)
    return acc


def _eval_rows(F: FiniteField, poly: MultiPoly, x: int, ys: np.ndarray) -> np.ndarray:
    """Evaluate a 2-variable polynomial at a fixed x against a y array."""
    acc = np.zeros_like(ys)
    for (ex, ey), c in poly.terms.items():
        s = F.mul(_pow1(F, x, ex), c)
        if s:
            acc = F.add_bulk(acc, F.mul_bulk(F.pow_bulk(ys, ey), s))
    return acc


def _embed_poly(tower: FieldTower, poly: MultiPoly, m_from: int, m_to: int) -> MultiPoly:
    F = tower.field(m_to)
    return MultiPoly(
        F, poly.nvars, {mono: tower.embed(c, m_from, m_to) for mono, c in poly.terms.items()}
    )


# -- curves -----------------------------------------------------------------


@dataclass(frozen=True)
class AffineCurve:
    """Affine curve over tower level ``level`` with a counting strategy."""

    name: str
    tower: FieldTower
    level: int
    var_names: tuple[str, ...]
    equation: MultiPoly
    components: int
    counter: tuple = ("brute",)
    dim_h1: int | None = None

    @property
    def field(self) -> FiniteField:
        return self.tower.field(self.level)

    @property
    def q(self) -> int:
        return self.tower.q


def _tower_for(q: int, tower: FieldTower | None) -> FieldTower:
    p, r = _factor_prime_power(q)
    if tower is None:
        return standard_tower(p, r)
    assert tower.q == q
    return tower


def affine_line(q: int, tower: FieldTower | None = None) -> AffineCurve:
    """The affine line; counts are q^k on the nose."""
    tower = _tower_for(q, tower)
    F = tower.field(1)
    return AffineCurve(
        name=f"line_q{q}",
        tower=tower,
        level=1,
        var_names=("t",),
        equation=MultiPoly(F, 1, {}),
        components=1,
        counter=("brute",),
        dim_h1=0,
    )


def artin_schreier_curve(
    q: int, m: int, n: int, c0: int = 1, tower: FieldTower | None = None
) -> AffineCurve:
    """a^q - a = c0 * y^n over F_{q^m}; one component, (q-1)(n-1) eigenvalues."""
    tower = _tower_for(q, tower)
    F = tower.field(m)
    assert c0 != 0
    eq = MultiPoly(F, 2, {(q, 0): 1, (1, 0): F.neg(1), (0, n): F.neg(c0)})
    return AffineCurve(
        name=f"as_q{q}m{m}n{n}",
        tower=tower,
        level=m,
        var_names=("a", "y"),
        equation=eq,
        components=1,
        counter=("as", 0, q, 1, ((n, c0),)),
        dim_h1=(q - 1) * (n - 1),
    )


def unramified_base_curve(q: int, tower: FieldTower | None = None) -> AffineCurve:
    """X^{q^2} - X = Y^{q(q+1)} - Y^{q+1} over F_{q^2}.

    The right side is h^q - h for h = Y^{q+1}, so the covering group drops
    to F_{q^2} mod a trace-zero line and the curve has q components.
    """
    tower = _tower_for(q, tower)
    F = tower.field(2)
    neg1 = F.neg(1)
    eq = MultiPoly(
        F, 2, {(q * q, 0): 1, (1, 0): neg1, (0, q * (q + 1)): neg1, (0, q + 1): 1}
    )
    return AffineCurve(
        name=f"unramified_base_q{q}",
        tower=tower,
        level=2,
        var_names=("X", "Y"),
        equation=eq,
        components=q,
        counter=("as", 0, q * q, 1, ((q * (q + 1), 1), (q + 1, neg1))),
        dim_h1=q * q * (q - 1),
    )


def ramified_base_curve(q: int, level: int = 1, tower: FieldTower | None = None) -> AffineCurve:
    """a^q - a = s^{2 q^m} over F_q, m = (level+1)/2 for odd ramified levels.

    The exponent is a Frobenius twist of 2, so counts agree with the n = 2
    curve at every extension degree.
    """
    assert level % 2 == 1 and level >= 1
    tower = _tower_for(q, tower)
    F = tower.field(1)
    m = (level + 1) // 2
    e = 2 * q**m
    eq = MultiPoly(F, 2, {(q, 0): 1, (1, 0): F.neg(1), (0, e): F.neg(1)})
    return AffineCurve(
        name=f"ramified_base_q{q}_level{level}",
        tower=tower,
        level=1,
        var_names=("a", "s"),
        equation=eq,
        components=1,
        counter=("as", 0, q, 1, ((e, 1),)),
        dim_h1=q - 1,
    )


def moore_curve(q: int, tower: FieldTower | None = None) -> AffineCurve:
    """S^q T - S T^q = zeta1 over F_{q^2}, zeta1 a trace-zero unit."""
    tower = _tower_for(q, tower)
    F = tower.field(2)
    z1 = tower.zeta1()
    eq = MultiPoly(F, 2, {(q, 1): 1, (1, q): F.neg(1), (0, 0): F.neg(z1)})
    return AffineCurve(
        name=f"moore_q{q}",
        tower=tower,
        level=2,
        var_names=("S", "T"),
        equation=eq,
        components=1,
        counter=("mu", (z1,)),
        dim_h1=q * q,
    )


def moore_torsor(q: int, tower: FieldTower | None = None) -> AffineCurve:
    """(S^q T - S T^q)^{q-1} = -1 over F_{q^2}; q-1 components."""
    tower = _tower_for(q, tower)
    F = tower.field(2)
    z1 = tower.zeta1()
    # the solutions of c^{q-1} = -1 are the F_q^x multiples of zeta1
    targets = tuple(F.mul(z1, tower.embed(c, 1, 2)) for c in range(1, q))
    for c in targets:
        assert F.pow(c, q - 1) == F.neg(1)
    mu = MultiPoly(F, 2, {(q, 1): 1, (1, q): F.neg(1)})
    eq = mu ** (q - 1) + MultiPoly.const(F, 2, 1)
    return AffineCurve(
        name=f"moore_torsor_q{q}",
        tower=tower,
        level=2,
        var_names=("S", "T"),
        equation=eq,
        components=q - 1,
        counter=("mu", targets),
        dim_h1=q * q * (q - 1),
    )


def curve_from_reduction(result) -> AffineCurve:
    """Wrap a reduction-engine plane curve for counting.

    The engine emits curves over its working residue field; coefficients are
    prime, so the same terms define the curve over the natural counting
    level (2 for the unramified tower, 1 for the ramified one).
    """
    q = result.q
    tower = _tower_for(q, None)
    level = 2 if result.case == "unramified" else 1
    F = tower.field(level)
    assert all(c < tower.p for c in result.curve.terms.values()), (
        "curve coefficients must lie in the prime field"
    )
    eq = MultiPoly(F, 2, dict(result.curve.terms))
    name = f"reduction_{result.case}_q{q}_level{result.level}"
    if result.case == "ramified":
        counter = _additive_split(eq, q)
        assert counter is not None
        return AffineCurve(name, tower, level, result.curve_vars, eq, 1, counter, q - 1)
    if result.level == 1:
        # level one reduces to the torsor of the Moore form; no additive split
        return AffineCurve(
            name, tower, level, result.curve_vars, eq, q - 1, ("brute",), q * q * (q - 1)
        )
    counter = _additive_split(eq, q)
    assert counter is not None and counter[2] == q * q
    return AffineCurve(
        name, tower, level, result.curve_vars, eq, q, counter, q * q * (q - 1)
    )


def _additive_split(eq: MultiPoly, q: int) -> tuple | None:
    """Recognize x_i^{q0} - x_i = rhs(x_j) and return the "as" strategy tag."""
    F = eq.field
    for i in range(2):
        j = 1 - i
        pure = {}
        rest = {}
        for mono, c in eq.terms.items():
            if mono[i] > 0:
                if mono[j] != 0:
                    pure = None
                    break
                pure[mono[i]] = c
            else:
                rest[mono[j]] = c
        if pure is None or set(pure.values()) != {1, F.neg(1)} or len(pure) != 2:
            continue
        (e_hi, e_lo) = sorted(pure, reverse=True)
        if e_lo != 1 or pure[e_hi] != 1 or pure[1] != F.neg(1):
            continue
        p0, d0 = _factor_prime_power(e_hi)
        if p0 != F.p:
            continue
        rhs = tuple(sorted((e, F.neg(c)) for e, c in rest.items() if c))
        return ("as", i, e_hi, j, rhs)
    return None


# -- point counting ---------------------------------------------------------


def count_points(curve: AffineCurve, k: int = 1, budget: int | None = None) -> int:
    """Number of points with coordinates in the degree-k extension."""
    assert k >= 1
    budget = DEFAULT_BUDGET if budget is None else budget
    tower = curve.tower
    lk = curve.level * k
    order = tower.p ** (tower.r * lk)
    kind = curve.counter[0]

    if kind == "as":
        _charge(tower, lk, _SCAN_FACTOR * order, budget, curve.name)
        _, _, q0, _, rhs = curve.counter
        return _count_additive(tower, curve.level, lk, q0, rhs)

    if kind == "mu":
        _charge(tower, lk, _SCAN_FACTOR * order, budget, curve.name)
        targets = [tower.embed(c, curve.level, lk) for c in curve.counter[1]]
        return _count_moore(tower, lk, targets)

    nv = curve.equation.nvars
    # grid scans run one vectorized row per x value, well under a step per cell
    _charge(tower, lk, _SCAN_FACTOR * order if nv == 1 else order * order // 4, budget, curve.name)
    return _count_brute(tower, curve, lk)


def _count_additive(
    tower: FieldTower,
    coeff_level: int,
    lk: int,
    q0: int,
    rhs,
    ambient_level: int | None = None,
    ys: np.ndarray | None = None,
    target: int = 0,
) -> int:
    """Fibers of x^{q0} - x = rhs(y): q0 points over each admissible y.

    Admissible means the trace-shaped sum ``rhs(y) + rhs(y)^{q0} + ...`` of
    length log_{q0} of the level-lk order hits ``target`` (0 for a plain
    count; a twisted count passes the eigenline ``ys`` inside a bigger
    ambient field together with the shifted target, both as ambient codes).
    """
    L = lk if ambient_level is None else ambient_level
    F = tower.field(L)
    if ys is None:
        ys = np.arange(F.order)
    terms = [(e, tower.embed(c, coeff_level, L)) for e, c in rhs]
    vals = _bulk_eval_terms(F, terms, ys)
    p0, d0 = _factor_prime_power(q0)
    assert p0 == tower.p and (tower.r * lk) % d0 == 0
    acc = vals
    cur = vals
    for _ in range((tower.r * lk) // d0 - 1):
        cur = F.pow_bulk(cur, q0)
        acc = F.add_bulk(acc, cur)
    return q0 * int((acc == target).sum())


def _count_moore(tower: FieldTower, lk: int, targets) -> int:
    """Fibers of S^q T - S T^q over nonzero targets, as level-lk codes."""
    q = tower.q
    F = tower.field(lk)
    t = np.arange(1, F.order)
    tw = F.pow_bulk(t, q + 1)
    n = F.order - 1
    total = 0
    for c in targets:
        assert c != 0
        v = F.exp[(int(F.log[c]) - F.log[tw]) % n]
        tr = _bulk_trace(F, v, tower.r)
        total += q * int((tr == 0).sum())
    return total


def _count_brute(tower: FieldTower, curve: AffineCurve, lk: int) -> int:
    F = tower.field(lk)
    eq = _embed_poly(tower, curve.equation, curve.level, lk)
    if curve.equation.nvars == 1:
        vals = _bulk_eval_terms(F, [(m[0], c) for m, c in eq.terms.items()], np.arange(F.order))
        return int((vals == 0).sum())
    ys = np.arange(F.order)
    total = 0
    for x in range(F.order):
        vals = _eval_rows(F, eq, x, ys)
        total += int((vals == 0).sum())
    return total


# -- automorphisms and twisted counts ---------------------------------------


@dataclass(frozen=True)
class CurveAut:
    """Finite-order curve automorphism with a counting strategy of its own.

    kinds: ("identity",); ("shift_scale", gamma, delta) for
    (x, y) -> (x + gamma, delta * y) on an additive-shape curve;
    ("mu_scale", xi) for (S, T) -> (xi S, xi T) on a Moore-shape curve;
    ("poly", maps) for anything else, counted by grid scan.
    """

    name: str
    order: int
    kind: tuple


def identity_aut() -> CurveAut:
    return CurveAut("id", 1, ("identity",))


def shift_aut(curve: AffineCurve, gamma: int, delta: int = 1) -> CurveAut:
    """(x, y) -> (x + gamma, delta * y) on a curve with an additive split."""
    assert curve.counter[0] == "as"
    _, i, q0, j, rhs = curve.counter
    F = curve.field
    # gamma must translate within the q0-kernel and delta must fix the rhs
    assert gamma == 0 or F.pow(gamma, q0) == gamma, "shift must lie in the kernel subfield"
    for e, c in rhs:
        assert F.mul(c, _pow1(F, delta, e)) == c, "scaling must preserve the right side"
    order = 1
    if gamma:
        order = F.p
    if delta != 1:
        order = order * F.mult_order(delta) // math.gcd(order, F.mult_order(delta))
    name = f"shift{gamma}" + (f"_scale{delta}" if delta != 1 else "")
    return CurveAut(name, order, ("shift_scale", gamma, delta))


def mu_scale_aut(curve: AffineCurve, xi: int) -> CurveAut:
    """(S, T) -> (xi S, xi T) on a Moore-shape curve."""
    assert curve.counter[0] == "mu"
    F = curve.field
    assert xi != 0
    targets = set(curve.counter[1])
    scale = F.pow(xi, curve.q + 1)
    assert {F.mul(scale, c) for c in targets} == targets, (
        "scaling must permute the target fibers"
    )
    return CurveAut(f"scale{xi}", F.mult_order(xi) if xi != 1 else 1, ("mu_scale", xi))


def poly_aut(curve: AffineCurve, maps: tuple[MultiPoly, ...], order: int) -> CurveAut:
    """Explicit coordinate maps; must fix the defining equation."""
    assert len(maps) == curve.equation.nvars and order >= 1
    assert curve.equation.subs(list(maps)) == curve.equation, (
        "maps must preserve the equation"
    )
    return CurveAut("poly", order, ("poly", tuple(maps)))


def _twist_unit(tower: FieldTower, base_level: int, big_level: int, d_emb: int) -> int:
    """Solve u^(Q-1) = d^{-1} in the big field, Q the base level order.

    Exists because the order of d divides big/base; found by dividing
    discrete logs.
    """
    F = tower.field(big_level)
    n = F.order - 1
    step = tower.p ** (tower.r * base_level) - 1
    t = (-int(F.log[d_emb])) % n
    assert t % step == 0, "no eigenline for this twist"
    u = int(F.exp[t // step])
    assert F.mul(F.pow(u, step), d_emb) == 1
    return u


def lefschetz_trace(
    curve: AffineCurve, aut: CurveAut, k: int = 1, budget: int | None = None
) -> int:
    """Fixed points of aut composed with the k-th power of base Frobenius."""
    assert k >= 1
    budget = DEFAULT_BUDGET if budget is None else budget
    tower = curve.tower
    lk = curve.level * k
    kind = aut.kind[0]

    if kind == "identity":
        return count_points(curve, k, budget)

    if kind == "shift_scale":
        assert curve.counter[0] == "as"
        _, i, q0, j, rhs = curve.counter
        _, gamma, delta = aut.kind
        F0 = curve.field
        target0 = F0.neg(gamma)
        if delta == 1:
            _charge(tower, lk, _SCAN_FACTOR * tower.p ** (tower.r * lk), budget, curve.name)
            tgt = tower.embed(target0, curve.level, lk)
            return _count_additive(tower, curve.level, lk, q0, rhs, target=tgt)
        M = F0.mult_order(delta)
        L = lk * M
        _charge(tower, L, _SCAN_FACTOR * tower.p ** (tower.r * L), budget, curve.name)
        emb = tower.embedding_table(lk, L)
        F = tower.field(L)
        u = _twist_unit(tower, lk, L, tower.embed(delta, curve.level, L))
        ys = F.mul_bulk(emb.copy(), u)  # the eigenline {y : y^Q = y/delta}
        tgt = tower.embed(target0, curve.level, L)
        return _count_additive(
            tower, curve.level, lk, q0, rhs, ambient_level=L, ys=ys, target=tgt
        )

    if kind == "mu_scale":
        assert curve.counter[0] == "mu"
        xi = aut.kind[1]
        q = curve.q
        if xi == 1:
            return count_points(curve, k, budget)
        M = curve.field.mult_order(xi)
        L = lk * M
        _charge(tower, L, _SCAN_FACTOR * tower.p ** (tower.r * L), budget, curve.name)
        F = tower.field(L)
        emb = tower.embedding_table(lk, L)
        back = {int(code): s for s, code in enumerate(emb)}
        u = _twist_unit(tower, lk, L, tower.embed(xi, curve.level, L))
        shift = F.inv(F.pow(u, q + 1))
        targets = []
        for c in curve.counter[1]:
            w = F.mul(tower.embed(c, curve.level, L), shift)
            wcode = back.get(w)
            if wcode is not None:
                # fiber target descends to the small field; otherwise empty
                targets.append(wcode)
        return _count_moore(tower, lk, targets)

    assert kind == "poly"
    L = lk * aut.order
    order = tower.p ** (tower.r * L)
    _charge(tower, L, order * order // 4, budget, curve.name)
    F = tower.field(L)
    eq = _embed_poly(tower, curve.equation, curve.level, L)
    maps = [_embed_poly(tower, mp, curve.level, L) for mp in aut.kind[1]]
    frob_e = tower.r * lk  # aut acts after the k-th power of base Frobenius
    ys = np.arange(order)
    ysF = F.pow_bulk(ys, tower.p**frob_e)
    total = 0
    for x in range(order):
        on_curve = _eval_rows(F, eq, x, ys) == 0
        if not on_curve.any():
            continue
        xF = F.frob(x, frob_e)
        mx = _eval_rows(F, maps[0], xF, ysF)
        my = _eval_rows(F, maps[1], xF, ysF)
        fixed = (mx == x) & (my == ys)
        total += int((on_curve & fixed).sum())
    return total


def x0_translation_prediction(q: int, gamma: int, k: int = 1) -> int:
    """Fixed-point prediction for translating the additive variable.

    The curve of ``unramified_base_curve`` has q components permuted by the
    translation through its image in the trace quotient, and the middle
    cohomology splits over the q^2 - q additive characters nontrivial on
    the trace-zero line, each with multiplicity q and eigenvalue -q.
    """
    p, r = _factor_prime_power(q)
    tower = standard_tower(p, r)
    f2 = tower.field(2)
    on_line = f2.trace(gamma, r) == 0
    comps = q ** (2 * k) * q if on_line else 0
    char_sum = (q * q if gamma == 0 else 0) - (q if on_line else 0)
    return comps - (-q) ** k * q * char_sum


# -- eigenvalue fitting -----------------------------------------------------


@dataclass(frozen=True)
class ZetaFit:
    """Fitted Frobenius eigenvalue multiset for one curve.

    ``model`` is "affine" (counts = components * Q^k - sum of eigenvalue
    k-th powers) or "projective" (counts = Q^k + 1 - sum).  ``method``
    records how the multiset was obtained: "newton" from a full run of
    Newton's identities, "geometric" when the power sums form a single
    geometric progression, "candidate" when a supplied multiset was
    confirmed against the counts, "empty" for dimension zero.
    """

    base_order: int
    model: str
    components: int
    counts: tuple[int, ...]
    eigenvalues: tuple[complex, ...]
    method: str
    rounded: bool
    tolerance: float

    def power_sum(self, k: int) -> complex:
        return sum(lam**k for lam in self.eigenvalues)

    def predict(self, k: int) -> int:
        # the dominant term is an exact integer; only the eigenvalue part
        # passes through floats, so round and tolerance-check it alone
        psum = self.power_sum(k)
        ps = round(psum.real)
        assert abs(psum - ps) <= self.tolerance * max(1.0, abs(ps)), (
            "fitted eigenvalues do not predict an integral count"
        )
        if self.model == "affine":
            return self.components * self.base_order**k - ps
        return self.base_order**k + 1 - ps

    def verify(self) -> None:
        for k, n in enumerate(self.counts, 1):
            if self.predict(k) != n:
                raise FitError(f"fit fails to reproduce the count at degree {k}")

    def conjugation_closed(self) -> bool:
        pool = list(self.eigenvalues)
        for lam in self.eigenvalues:
            best = min(pool, key=lambda m: abs(m - lam.conjugate()))
            if abs(best - lam.conjugate()) > self.tolerance * max(1.0, abs(lam)):
                return False
            pool.remove(best)
        return True

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "base_order": self.base_order,
            "model": self.model,
            "components": self.components,
            "counts": list(self.counts),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "method": self.method,
            "rounded": self.rounded,
        }


def _quad_complex(a: int, b: int, D: int) -> complex:
    sq = math.sqrt(abs(D))
    if D < 0:
        return complex(a / 2, b * sq / 2)
    return complex((a + b * sq) / 2, 0.0)


def _round_quadratic(z: complex, p: int) -> tuple[int, int] | None:
    """Nearest algebraic integer (a + b sqrt(D))/2 in the quadratic field of p.

    D is p or -p, whichever is 1 mod 4, and a, b must have equal parity.
    For real D only small b are tried; candidates get confirmed exactly
    downstream, so a miss here only costs a fallback.
    """
    D = p if p % 4 == 1 else -p
    sq = math.sqrt(abs(D))
    if D < 0:
        a0, b0 = round(2 * z.real), round(2 * z.imag / sq)
        cands = [(a0 + da, b0 + db) for da in (-1, 0, 1) for db in (-1, 0, 1)]
    else:
        if abs(z.imag) > 0.5:
            return None
        cands = [(round(2 * (z.real - b * sq / 2)), b) for b in range(-4, 5)]
    best = None
    for a, b in cands:
        if (a - b) % 2:
            continue
        if best is None or abs(_quad_complex(a, b, D) - z) < abs(_quad_complex(*best, D) - z):
            best = (a, b)
    return best


def fit_zeta(
    counts,
    *,
    base_order: int,
    dim: int,
    components: int = 1,
    model: str = "affine",
    tolerance: float = 1e-6,
    candidates=None,
) -> ZetaFit:
    """Recover the eigenvalue multiset of the given dimension from counts.

    Needs more counts than dimensions for the full fit; with fewer, a
    single repeated eigenvalue is still recognized.  Raises FitError when
    no integral multiset reproduces every count.

    ``candidates``, when given, must be a proposed multiset of size ``dim``;
    it is checked against every count instead of being solved for, so a
    handful of counts can confirm a multiset that a blind fit would need
    dim+1 counts to pin down.
    """
    counts = tuple(int(n) for n in counts)
    assert model in ("affine", "projective") and counts
    if model == "affine":
        psums = [components * base_order**k - n for k, n in enumerate(counts, 1)]
    else:
        assert components == 1
        psums = [base_order**k + 1 - n for k, n in enumerate(counts, 1)]

    p = _factor_prime_power(base_order)[0]
    K = len(counts)

    if candidates is not None:
        cand = tuple(complex(z) for z in candidates)
        if len(cand) != dim:
            raise FitError(f"candidate multiset has size {len(cand)}, expected {dim}")
        fit = ZetaFit(
            base_order, model, components, counts, cand, "candidate", False, tolerance
        )
        try:
            fit.verify()
        except AssertionError as exc:
            raise FitError(str(exc)) from exc
        if not fit.conjugation_closed():
            raise FitError("eigenvalue multiset is not closed under conjugation")
        return fit

    if dim == 0:
        if any(psums):
            raise FitError("counts disagree with an empty eigenvalue set")
        fit = ZetaFit(base_order, model, components, counts, (), "empty", True, tolerance)
        fit.verify()
        return fit

    if K > dim:
        e = _newton_elementary(psums, dim)
        approx = np.roots([float((-1) ** i * e[i]) for i in range(dim + 1)])
        snapped = _snap_roots(approx, e, p)
        for cand, flag in ((snapped, True), ([complex(z) for z in approx], False)):
            if cand is None:
                continue
            fit = ZetaFit(
                base_order, model, components, counts, tuple(cand), "newton", flag, tolerance
            )
            try:
                fit.verify()
            except (FitError, AssertionError):
                continue
            if not fit.conjugation_closed():
                raise FitError("eigenvalue multiset is not closed under conjugation")
            return fit
        raise FitError("no integral eigenvalue multiset reproduces the counts")

    # not enough counts for a full fit: try one repeated eigenvalue
    if K >= 2 and psums[0] != 0 and psums[1] % psums[0] == 0:
        lam = psums[1] // psums[0]
        if lam != 0 and psums[0] % lam == 0 and psums[0] // lam == dim:
            if all(ps == dim * lam**k for k, ps in enumerate(psums, 1)):
                fit = ZetaFit(
                    base_order,
                    model,
                    components,
                    counts,
                    (complex(lam),) * dim,
                    "geometric",
                    True,
                    tolerance,
                )
                fit.verify()
                return fit
    raise FitError(
        f"need at least {dim + 1} counts for a dimension-{dim} fit (have {K})"
    )


def _newton_elementary(psums, dim: int) -> list[int]:
    """Elementary symmetric functions from power sums, exactly."""
    e = [1]
    for i in range(1, dim + 1):
        acc = 0
        for j in range(1, i + 1):
            acc += (-1) ** (j - 1) * e[i - j] * psums[j - 1]
        if acc % i:
            raise FitError("power sums are not the moments of an integral multiset")
        e.append(acc // i)
    return e


def _divide_out(P, m):
    """P // m for monic integer polynomials; None when a remainder is left."""
    dm = len(m) - 1
    work = list(P)
    quot = []
    for i in range(len(work) - dm):
        c = work[i]
        quot.append(c)
        if c:
            for j in range(1, dm + 1):
                work[i + j] -= c * m[j]
    if any(work[len(work) - dm:]):
        return None
    return quot


def _snap_roots(approx, e, p: int) -> list[complex] | None:
    """Exact eigenvalue multiset from the integer characteristic polynomial.

    Approximate roots only nominate candidate quadratic integers; each
    candidate's minimal polynomial is divided out exactly, so a tight root
    cluster (high multiplicity smears float roots badly) cannot mislead
    the result.  None when the candidates fail to exhaust the polynomial.
    """
    dim = len(e) - 1
    D = p if p % 4 == 1 else -p
    P = [(-1) ** i * e[i] for i in range(dim + 1)]
    cands = []
    for z in approx:
        ab = _round_quadratic(complex(z), p)
        if ab is not None and (ab[0], abs(ab[1])) not in cands:
            cands.append((ab[0], abs(ab[1])))
    out = []
    for a, b in cands:
        if b == 0:
            m = [1, -(a // 2)]
            roots = [complex(a / 2, 0.0)]
        else:
            m = [1, -a, (a * a - D * b * b) // 4]
            roots = [_quad_complex(a, b, D), _quad_complex(a, -b, D)]
        while len(P) >= len(m):
            nxt = _divide_out(P, m)
            if nxt is None:
                break
            P = nxt
            out.extend(roots)
    return out if len(P) == 1 else None


def expected_gauss_eigenvalues(q: int, m: int, n: int, c0: int = 1) -> list[complex]:
    """The eigenvalue multiset of the a^q - a = c0 y^n curve.

    One value per pair (nontrivial base additive character, character of
    the n-torsion of the unit group nontrivial there).
    """
    p, r = _factor_prime_power(q)
    tower = standard_tower(p, r)
    F = tower.field(m)
    Q1 = F.order - 1
    assert Q1 % n == 0
    out = []
    seen = set()
    for jc in range(1, Q1):
        chi = Character(F, "mul", jc)
        if chi.restricted_order(n) == 1:
            continue
        key = jc * (Q1 // n) % Q1  # the torsion restriction is all that enters
        if key in seen:
            continue
        seen.add(key)
        for b in range(1, tower.field(1).order):
            psi = Character(tower.field(1), "add", b)
            out.append(gauss_sum(tower, m, n, c0, chi, psi))
    return out


def multisets_match(a, b, tol: float = 1e-6) -> bool:
    """Complex multiset comparison up to a tolerance."""
    pool = list(b)
    if len(a) != len(pool):
        return False
    for z in a:
        best = min(pool, key=lambda w: abs(w - z), default=None)
        if best is None or abs(best - z) > tol * max(1.0, abs(z)):
            return False
        pool.remove(best)
    return True


# -- dimension bookkeeping for the Moore curve ------------------------------


@dataclass(frozen=True)
class DLReport:
    """Cohomology dimensions of the Moore curve read off from counts."""

    q: int
    kmax: int
    counts_affine: tuple[int, ...]
    counts_projective: tuple[int, ...]
    boundary_points: int
    numerator_degree: int
    eigenvalues: tuple[complex, ...]
    h1c_dim: int
    h1c_weight0: int
    cuspidal_family: int
    cuspidal_dim: int

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "q": self.q,
            "kmax": self.kmax,
            "counts_affine": list(self.counts_affine),
            "counts_projective": list(self.counts_projective),
            "boundary_points": self.boundary_points,
            "numerator_degree": self.numerator_degree,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "h1c_dim": self.h1c_dim,
            "h1c_weight0": self.h1c_weight0,
            "cuspidal_family": self.cuspidal_family,
            "cuspidal_dim": self.cuspidal_dim,
        }


def dl_dimension_suite(
    q: int, kmax: int | None = None, budget: int | None = None
) -> DLReport:
    """Count the Moore curve, fit its smooth model, and report dimensions.

    The smooth completion adds q+1 rational boundary points (computed, not
    assumed).  The numerator degree of its zeta function gives the proper
    H^1; compactly supported H^1 of the affine curve follows from the Euler
    characteristic and splits as weight 0 (boundary minus one) plus weight
    1 (the numerator degree).
    """
    budget = DEFAULT_BUDGET if budget is None else budget
    curve = moore_curve(q)
    tower = curve.tower

    # largest usable extension degree under the budget
    ks = []
    for k in range(1, 64):
        if kmax is not None and k > kmax:
            break
        order = tower.p ** (tower.r * 2 * k)
        if _table_cost(tower, 2 * k) + _SCAN_FACTOR * order > budget:
            break
        ks.append(k)
    if len(ks) < 2:
        raise BudgetError("need at least two extension degrees within budget")

    w_counts = tuple(count_points(curve, k, budget) for k in ks)

    # every tuple [s : t] with the Moore form zero has a representative in P^1(F_q)
    f2 = tower.field(2)
    boundary = 1  # [1 : 0]
    for s in range(f2.order):
        if f2.sub(f2.pow(s, q) if s else 0, s) == 0:
            boundary += 1
    assert boundary == q + 1

    wbar_counts = tuple(n + boundary for n in w_counts)
    two_g = q * (q - 1)
    fit = fit_zeta(
        wbar_counts, base_order=q * q, dim=two_g, components=1, model="projective"
    )
    assert all(z == -q for z in fit.eigenvalues), "smooth model must be maximal"

    # affine eigenvalues: weight-0 part of size boundary-1 plus the fitted ones
    for k, n in zip(ks, w_counts):
        assert n == (q * q) ** k - q - two_g * (-q) ** k

    h1c = two_g + boundary - 1
    assert h1c == q * q
    family = q * (q - 1)
    report = DLReport(
        q=q,
        kmax=ks[-1],
        counts_affine=w_counts,
        counts_projective=wbar_counts,
        boundary_points=boundary,
        numerator_degree=len(fit.eigenvalues),
        eigenvalues=fit.eigenvalues,
        h1c_dim=h1c,
        h1c_weight0=boundary - 1,
        cuspidal_family=family,
        cuspidal_dim=family * (q - 1),
    )
    assert report.numerator_degree == two_g
    return report


# -- tabulation -------------------------------------------------------------


def counts_table(curves, ks, budget: int | None = None):
    """Rows of (curve name, extension degree, count)."""
    rows = []
    for curve in curves:
        for k in ks:
            rows.append((curve.name, k, count_points(curve, k, budget)))
    return rows


def format_counts_csv(rows) -> str:
    lines = ["curve,k,count"]
    for name, k, n in rows:
        lines.append(f"{name},{k},{n}")
    return "\n".join(lines) + "\n"
