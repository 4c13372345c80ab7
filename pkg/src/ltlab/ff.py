"""Finite fields with discrete-log tables, field towers, characters, Gauss sums.

Fields are small by design (at most a few thousand elements), so every field
precomputes exp/log tables for a fixed primitive element and does all
multiplicative arithmetic through them.  Elements are plain ints: the code
``sum(c_i * p**i)`` of the residue polynomial ``sum(c_i * X**i)``.  The prime
subfield is therefore literally ``range(p)`` and behaves like Z/p.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * cmath.pi


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# -- dense polynomial helpers over Z/p, used only while bootstrapping a field --

def _poly_mulmod(a, b, mod, p):
    res = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                res[i + j] = (res[i + j] + ai * bj) % p
    d = len(mod) - 1
    for i in range(len(res) - 1, d - 1, -1):
        c = res[i]
        if c:
            res[i] = 0
            for j in range(d):
                res[i - d + j] = (res[i - d + j] - c * mod[j]) % p
    while len(res) > 1 and res[-1] == 0:
        res.pop()
    return res


def _poly_powmod(base, e, mod, p):
    result = [1]
    cur = list(base)
    while e:
        if e & 1:
            result = _poly_mulmod(result, cur, mod, p)
        cur = _poly_mulmod(cur, cur, mod, p)
        e >>= 1
    return result


def _poly_rem(a, b, p):
    a = list(a)
    db = len(b) - 1
    inv = pow(b[-1], p - 2, p)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i]
        if c:
            f = c * inv % p
            a[i] = 0
            for j in range(db):
                a[i - db + j] = (a[i - db + j] - f * b[j]) % p
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _poly_gcd(a, b, p):
    a, b = list(a), list(b)
    while len(b) > 1 or b[0]:
        a, b = b, _poly_rem(a, b, p)
    return a


def _is_irreducible(coeffs, p):
    """coeffs: c_0..c_{d-1} of a monic degree-d polynomial X^d + sum c_i X^i."""
    d = len(coeffs)
    assert d >= 2
    mod = list(coeffs) + [1]
    x = [0, 1]
    if _poly_powmod(x, p ** d, mod, p) != x:
        return False
    for ell in _prime_factors(d):
        # no factor of degree dividing d/ell: gcd(X^(p^(d/ell)) - X, f) = 1
        xe = _poly_powmod(x, p ** (d // ell), mod, p)
        diff = list(xe) + [0] * (2 - len(xe))
        diff[1] = (diff[1] - 1) % p
        while len(diff) > 1 and diff[-1] == 0:
            diff.pop()
        if len(_poly_gcd(mod, diff, p)) > 1:
            return False
    return True


def smallest_irreducible(p: int, d: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree d over Z/p.

    Order: coefficient tuples (c_{d-1}, ..., c_0) compared left to right,
    i.e. dictionary order of the printed polynomial.
    """
    if d == 1:
        return (0,)
    # ascending code order == ascending (c_{d-1}, ..., c_0) dictionary order
    # when c_i is the i-th base-p digit of the code
    for code in range(p ** d):
        coeffs = tuple((code // p ** i) % p for i in range(d))
        if _is_irreducible(list(coeffs), p):
            return coeffs
    raise AssertionError("no irreducible found (impossible)")


class FiniteField:
    """F_{p^deg}; elements are int codes of residue polynomials, base p."""

    def __init__(self, p: int, deg: int):
        assert p >= 2 and deg >= 1
        self.p = p
        self.deg = deg
        self.order = p ** deg
        self.modulus = smallest_irreducible(p, deg)  # c_0..c_{deg-1}
        self._build_tables()
        self._pow_p_cache: dict[int, np.ndarray] = {}

    # bootstrap multiplication straight from the modulus
    def _raw_mul(self, a: int, b: int) -> int:
        p, d = self.p, self.deg
        da = [(a // p ** i) % p for i in range(d)]
        db = [(b // p ** i) % p for i in range(d)]
        prod = [0] * (2 * d - 1)
        for i, ai in enumerate(da):
            if ai:
                for j, bj in enumerate(db):
                    prod[i + j] = (prod[i + j] + ai * bj) % p
        for i in range(2 * d - 2, d - 1, -1):
            c = prod[i]
            if c:
                prod[i] = 0
                for j in range(d):
                    prod[i - d + j] = (prod[i - d + j] - c * self.modulus[j]) % p
        return sum(prod[i] * p ** i for i in range(d))

    def _build_tables(self):
        Q = self.order
        n = Q - 1
        fac = _prime_factors(n)
        gen = None
        for cand in range(1, Q):
            if cand == 1 and Q > 2:
                continue
            ok = True
            for ell in fac:
                # cand^(n/ell) by square-and-multiply on raw mul
                e = n // ell
                acc, cur = 1, cand
                while e:
                    if e & 1:
                        acc = self._raw_mul(acc, cur)
                    cur = self._raw_mul(cur, cur)
                    e >>= 1
                if acc == 1:
                    ok = False
                    break
            if ok:
                gen = cand
                break
        assert gen is not None
        self.gen = gen
        exp = np.zeros(2 * n, dtype=np.int64)
        log = np.full(Q, -1, dtype=np.int64)
        cur = 1
        for k in range(n):
            exp[k] = cur
            log[cur] = k
            cur = self._raw_mul(cur, gen)
        assert cur == 1, "generator order mismatch"
        exp[n:] = exp[:n]  # wraparound so exp[i+j] needs no reduction
        self.exp = exp
        self.log = log
        self._pvals = np.array([self.p ** i for i in range(self.deg)], dtype=np.int64)

    # -- scalar ops --

    def add(self, a: int, b: int) -> int:
        p = self.p
        out, shift = 0, 1
        for _ in range(self.deg):
            out += ((a + b) % p) * shift
            a //= p
            b //= p
            shift *= p
        return out

    def neg(self, a: int) -> int:
        p = self.p
        out, shift = 0, 1
        for _ in range(self.deg):
            out += ((-a) % p) * shift
            a //= p
            shift *= p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        assert a != 0, "division by zero"
        n = self.order - 1
        return int(self.exp[(n - self.log[a]) % n])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            assert e > 0, "0 to a nonpositive power"
            return 0
        n = self.order - 1
        return int(self.exp[(int(self.log[a]) * e) % n])

    def frob(self, a: int, i: int = 1) -> int:
        """a^(p^i)."""
        return self.pow(a, self.p ** i) if a else 0

    def scalar(self, c: int) -> int:
        """Image of the integer c under Z -> F (prime subfield)."""
        return c % self.p

    def trace_to_prime(self, a: int) -> int:
        t = 0
        cur = a
        for _ in range(self.deg):
            t = self.add(t, cur)
            cur = self.pow(cur, self.p) if cur else 0
        assert t < self.p
        return t

    def trace(self, a: int, subdeg: int) -> int:
        """Trace onto the subfield of degree `subdeg` over the prime field.

        Returned as a code of *this* field (lies in the embedded subfield).
        """
        assert self.deg % subdeg == 0
        t = 0
        cur = a
        for _ in range(self.deg // subdeg):
            t = self.add(t, cur)
            cur = self.pow(cur, self.p ** subdeg) if cur else 0
        return t

    def norm(self, a: int, subdeg: int) -> int:
        assert self.deg % subdeg == 0
        if a == 0:
            return 0
        e = (self.order - 1) // (self.p ** subdeg - 1)
        return self.pow(a, e)

    def in_subfield(self, a: int, subdeg: int) -> bool:
        assert self.deg % subdeg == 0
        return a == self.pow(a, self.p ** subdeg) if a else True

    def mult_order(self, a: int) -> int:
        assert a != 0
        n = self.order - 1
        return n // math.gcd(int(self.log[a]), n)

    def sqrt(self, a: int) -> int:
        """A square root, deterministic; asserts a is a square."""
        if a == 0:
            return 0
        la = int(self.log[a])
        assert la % 2 == 0 or (self.order - 1) % 2 == 1, "not a square"
        if la % 2 == 0:
            return int(self.exp[la // 2])
        return int(self.exp[(la + self.order - 1) // 2])

    def is_square(self, a: int) -> bool:
        if a == 0:
            return True
        return int(self.log[a]) % 2 == 0 or (self.order - 1) % 2 == 1

    def elements(self):
        return range(self.order)

    def units(self):
        return range(1, self.order)

    def elem(self, code: int) -> "FieldElem":
        assert 0 <= code < self.order
        return FieldElem(self, code)

    # -- bulk ops on numpy int64 arrays of codes --

    def add_bulk(self, A, B):
        p = self.p
        A = np.asarray(A)
        out = np.zeros_like(A)
        a = A.copy()
        b = np.full_like(A, int(B)) if np.ndim(B) == 0 else np.broadcast_to(B, A.shape).copy()
        shift = 1
        for _ in range(self.deg):
            out += ((a + b) % p) * shift
            a //= p
            b //= p
            shift *= p
        return out

    def neg_bulk(self, A):
        p = self.p
        out = np.zeros_like(A)
        a = A.copy()
        shift = 1
        for _ in range(self.deg):
            out += ((-a) % p) * shift
            a //= p
            shift *= p
        return out

    def mul_bulk(self, A, B):
        A = np.asarray(A)
        B = np.broadcast_to(B, A.shape)
        out = np.zeros_like(A)
        nz = (A != 0) & (B != 0)
        out[nz] = self.exp[self.log[A[nz]] + self.log[B[nz]]]
        return out

    def pow_bulk(self, A, e: int):
        A = np.asarray(A)
        out = np.zeros_like(A)
        n = self.order - 1
        nz = A != 0
        out[nz] = self.exp[(self.log[A[nz]] * (e % n)) % n]
        if e == 0:
            out[~nz] = 1  # 0**0 not expected; keep total
        return out

    def frob_bulk(self, A, i: int = 1):
        key = i % self.deg
        tab = self._pow_p_cache.get(key)
        if tab is None:
            tab = np.array([self.frob(a, key) for a in range(self.order)], dtype=np.int64)
            self._pow_p_cache[key] = tab
        return tab[np.asarray(A)]


@dataclass(frozen=True)
class FieldElem:
    """Operator sugar over (field, code).  Hot paths use raw codes instead."""

    field: FiniteField
    code: int

    def _lift(self, other) -> int:
        if isinstance(other, FieldElem):
            assert other.field is self.field, "elements of different fields"
            return other.code
        if isinstance(other, int):
            return other % self.field.p
        raise TypeError(other)

    def __add__(self, other):
        return FieldElem(self.field, self.field.add(self.code, self._lift(other)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(self.field, self.field.neg(self.code))

    def __sub__(self, other):
        return FieldElem(self.field, self.field.sub(self.code, self._lift(other)))

    def __rsub__(self, other):
        return FieldElem(self.field, self.field.sub(self._lift(other), self.code))

    def __mul__(self, other):
        return FieldElem(self.field, self.field.mul(self.code, self._lift(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FieldElem(self.field, self.field.div(self.code, self._lift(other)))

    def __pow__(self, e: int):
        return FieldElem(self.field, self.field.pow(self.code, e))

    def frob(self, i: int = 1):
        return FieldElem(self.field, self.field.frob(self.code, i))

    def __bool__(self):
        return self.code != 0

    def __repr__(self):
        return f"<{self.code} in F_{self.field.order}>"


class FieldTower:
    """Levels m -> F_{q^m} for q = p^r, with cached cross-level embeddings.

    Every level is realized over the prime field with the lexicographically
    smallest irreducible of degree r*m; an embedding F_{q^a} -> F_{q^b} sends
    the residue class of X to the smallest-code root of the level-a modulus.
    """

    def __init__(self, p: int, r: int = 1, levels=(1, 2)):
        assert p % 2 == 1, "odd characteristic only"
        self.p = p
        self.r = r
        self.q = p ** r
        self._fields: dict[int, FiniteField] = {}
        self._embeddings: dict[tuple[int, int], np.ndarray] = {}
        for m in levels:
            self.field(m)

    def field(self, m: int) -> FiniteField:
        f = self._fields.get(m)
        if f is None:
            f = FiniteField(self.p, self.r * m)
            self._fields[m] = f
        return f

    def embedding_table(self, m_from: int, m_to: int) -> np.ndarray:
        assert m_to % m_from == 0, "no embedding between these levels"
        key = (m_from, m_to)
        tab = self._embeddings.get(key)
        if tab is not None:
            return tab
        src, dst = self.field(m_from), self.field(m_to)
        if m_from == m_to:
            tab = np.arange(src.order, dtype=np.int64)
        else:
            root = None
            for cand in range(dst.order):
                # evaluate the src modulus (monic) at cand
                acc = 1
                for c in reversed(src.modulus):
                    acc = dst.add(dst.mul(acc, cand), c % dst.p)
                # multiply through: acc currently X^deg evaluated Horner-style
                if acc == 0:
                    root = cand
                    break
            assert root is not None, "modulus must split in the bigger field"
            powers = [1]
            for _ in range(src.deg - 1):
                powers.append(dst.mul(powers[-1], root))
            tab = np.zeros(src.order, dtype=np.int64)
            p = self.p
            for code in range(src.order):
                acc, c = 0, code
                for i in range(src.deg):
                    d = c % p
                    if d:
                        acc = dst.add(acc, dst.mul(d, powers[i]))
                    c //= p
                tab[code] = acc
            assert tab[1] == 1 and tab[0] == 0
        self._embeddings[key] = tab
        return tab

    def embed(self, code: int, m_from: int, m_to: int) -> int:
        return int(self.embedding_table(m_from, m_to)[code])

    def zeta(self, m: int = 2) -> int:
        """Canonical generator of the level-m field (the table generator)."""
        return self.field(m).gen

    def zeta1(self, zeta: int | None = None) -> int:
        """zeta^q - zeta in F_{q^2}; nonzero iff zeta generates over F_q."""
        f2 = self.field(2)
        z = self.zeta(2) if zeta is None else zeta
        z1 = f2.sub(f2.pow(z, self.q), z)
        assert z1 != 0, "zeta lies in the base field"
        return z1


class Character:
    """Additive or multiplicative character with complex values.

    additive:  x -> exp(2 pi i * Tr_{F/F_p}(b * x) / p), parameter b in F
    multiplicative:  g^t -> exp(2 pi i * j * t / (Q - 1)), parameter j mod Q-1
    """

    def __init__(self, field: FiniteField, kind: str, param: int):
        assert kind in ("add", "mul")
        self.field = field
        self.kind = kind
        if kind == "add":
            assert 0 <= param < field.order
        else:
            param %= field.order - 1
        self.param = param
        if kind == "add":
            self._tr = np.array(
                [field.trace_to_prime(field.mul(param, x)) for x in range(field.order)],
                dtype=np.int64,
            )
            self._roots = np.exp(2j * np.pi * np.arange(field.p) / field.p)
        else:
            n = field.order - 1
            self._roots = np.exp(2j * np.pi * ((param * np.arange(n)) % n) / n)

    @property
    def is_trivial(self) -> bool:
        return self.param == 0

    def __call__(self, x) -> complex:
        if isinstance(x, FieldElem):
            assert x.field is self.field
            x = x.code
        if self.kind == "add":
            return complex(self._roots[self._tr[x]])
        assert x != 0, "multiplicative character at 0"
        return complex(self._roots[self.field.log[x]])

    def restricted_order(self, n: int) -> int:
        """Order of the restriction to the n-torsion mu_n of the unit group."""
        assert self.kind == "mul"
        Q1 = self.field.order - 1
        assert Q1 % n == 0
        # mu_n is generated by g^(Q1/n), sent to e(param/n); order = n/gcd
        return n // math.gcd(self.param % n, n)


def additive_characters(field: FiniteField):
    return [Character(field, "add", b) for b in range(field.order)]


def multiplicative_characters(field: FiniteField):
    return [Character(field, "mul", j) for j in range(field.order - 1)]


def gauss_sum(tower: FieldTower, m: int, n: int, c0: int, chi: Character, psi: Character) -> complex:
    """-(sum over x in F_{q^m}^x of chi((x/c0)^((q^m-1)/n)) psi(Tr(x))).

    chi: multiplicative character of F_{q^m} (only its mu_n-restriction enters);
    psi: additive character of the base F_q; c0: nonzero code in F_{q^m}.
    """
    F = tower.field(m)
    assert chi.kind == "mul" and chi.field is F
    assert psi.kind == "add" and psi.field is tower.field(1)
    Q1 = F.order - 1
    assert Q1 % n == 0 and c0 != 0
    e = Q1 // n
    b_up = tower.embed(psi.param, 1, m)
    # psi(Tr_{F_{q^m}/F_q}(x)) = e(Tr_{F_{q^m}/F_p}(b_up * x) / p) by trace transitivity
    tr = np.array([F.trace_to_prime(F.mul(b_up, x)) for x in range(F.order)], dtype=np.int64)
    w_p = np.exp(2j * np.pi * np.arange(F.p) / F.p)
    w_m = np.exp(2j * np.pi * ((chi.param * np.arange(Q1)) % Q1) / Q1)
    t0 = int(F.log[c0])
    total = 0j
    for t in range(Q1):
        x = int(F.exp[t])
        total += w_m[(e * (t - t0)) % Q1] * w_p[tr[x]]
    return -total


def quadratic_symbol(field: FiniteField, x: int) -> int:
    """+1 on nonzero squares, -1 on nonsquares; x must be nonzero."""
    assert x != 0
    return 1 if int(field.log[x]) % 2 == 0 else -1


def quadratic_gauss_sum(field: FiniteField, psi: Character) -> complex:
    """tau(kappa, psi) = sum over units of (x|F_q) psi(x)."""
    assert psi.kind == "add" and psi.field is field and not psi.is_trivial
    total = 0j
    for x in field.units():
        total += quadratic_symbol(field, x) * psi(x)
    return total


def langlands_constant(field: FiniteField, psi: Character) -> complex:
    """tau(kappa, psi) * q^(-1/2); a fourth root of unity times a sign."""
    q = field.order
    lam = quadratic_gauss_sum(field, psi) / cmath.sqrt(q)
    kappa_m1 = quadratic_symbol(field, field.neg(1))
    assert abs(lam * lam - kappa_m1) < 1e-9
    return lam


@lru_cache(maxsize=None)
def _standard_tower(p: int, r: int) -> FieldTower:
    return FieldTower(p, r, levels=(1, 2))


def standard_tower(p: int, r: int = 1) -> FieldTower:
    # normalized so the defaulted and explicit spellings share one instance
    return _standard_tower(p, r)
