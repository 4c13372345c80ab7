"""Exact multivariate polynomials over a small finite field.

Dense enough for identity checking at desk scale: terms are a dict from
exponent tuples to nonzero coefficient codes.  No monomial orders, no
division; just the ring operations plus substitution.
"""

from __future__ import annotations

from .ff import FiniteField


class MultiPoly:
    __slots__ = ("field", "nvars", "terms")

    def __init__(self, field: FiniteField, nvars: int, terms: dict[tuple[int, ...], int] | None = None):
        self.field = field
        self.nvars = nvars
        clean: dict[tuple[int, ...], int] = {}
        for mono, c in (terms or {}).items():
            assert len(mono) == nvars
            if c:
                clean[mono] = c
        self.terms = clean

    # -- constructors --

    @staticmethod
    def const(field: FiniteField, nvars: int, c: int) -> "MultiPoly":
        return MultiPoly(field, nvars, {(0,) * nvars: c})

    @staticmethod
    def var(field: FiniteField, nvars: int, i: int) -> "MultiPoly":
        mono = tuple(1 if j == i else 0 for j in range(nvars))
        return MultiPoly(field, nvars, {mono: 1})

    @staticmethod
    def variables(field: FiniteField, names: int) -> list["MultiPoly"]:
        return [MultiPoly.var(field, names, i) for i in range(names)]

    # -- inspection --

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiPoly)
            and self.field is other.field
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((id(self.field), tuple(sorted(self.terms.items()))))

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mono, c in sorted(self.terms.items()):
            vs = "*".join(f"x{i}^{e}" for i, e in enumerate(mono) if e)
            bits.append(f"{c}{'*' + vs if vs else ''}")
        return " + ".join(bits)

    # -- ring operations --

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        assert self.field is other.field and self.nvars == other.nvars
        f = self.field
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = f.add(out.get(mono, 0), c)
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return MultiPoly(f, self.nvars, out)

    def __neg__(self) -> "MultiPoly":
        f = self.field
        return MultiPoly(f, self.nvars, {m: f.neg(c) for m, c in self.terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        assert self.field is other.field and self.nvars == other.nvars
        f = self.field
        out: dict[tuple[int, ...], int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                s = f.add(out.get(mono, 0), f.mul(c1, c2))
                if s:
                    out[mono] = s
                else:
                    out.pop(mono, None)
        return MultiPoly(f, self.nvars, out)

    def scale(self, c: int) -> "MultiPoly":
        f = self.field
        if c == 0:
            return MultiPoly(f, self.nvars, {})
        return MultiPoly(f, self.nvars, {m: f.mul(cc, c) for m, cc in self.terms.items()})

    def frob_pow(self, e: int) -> "MultiPoly":
        """x^e for e a power of the characteristic: exact termwise."""
        f = self.field
        return MultiPoly(
            f,
            self.nvars,
            {tuple(a * e for a in m): f.pow(c, e) for m, c in self.terms.items()},
        )

    def partial(self, i: int) -> "MultiPoly":
        """Formal derivative in variable i; exponents act through the prime subfield."""
        f = self.field
        out: dict[tuple[int, ...], int] = {}
        for mono, c in self.terms.items():
            e = mono[i]
            cc = f.mul(c, e % f.p)
            if not cc:
                continue
            m2 = list(mono)
            m2[i] = e - 1
            out[tuple(m2)] = f.add(out.get(tuple(m2), 0), cc)
        return MultiPoly(f, self.nvars, out)

    def __pow__(self, n: int) -> "MultiPoly":
        assert n >= 0
        f = self.field
        p = f.p
        result = MultiPoly.const(f, self.nvars, 1)
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

    def subs(self, values: list["MultiPoly"]) -> "MultiPoly":
        """Substitute values[i] for variable i; values share one ambient ring."""
        assert len(values) == self.nvars
        f = values[0].field
        nv = values[0].nvars
        out = MultiPoly(f, nv, {})
        for mono, c in self.terms.items():
            term = MultiPoly.const(f, nv, c)
            for i, e in enumerate(mono):
                if e:
                    term = term * values[i] ** e
            out = out + term
        return out

    def eval_codes(self, codes: list[int]) -> int:
        """Evaluate at field elements given by code, in the coefficient field."""
        f = self.field
        acc = 0
        for mono, c in self.terms.items():
            v = c
            for i, e in enumerate(mono):
                if e:
                    v = f.mul(v, f.pow(codes[i], e)) if codes[i] else 0
                    if not v:
                        break
            acc = f.add(acc, v)
        return acc
