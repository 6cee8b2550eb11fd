"""Exact sparse polynomials over the rationals in one to three variables.

Coefficients are ``gmpy2.mpq`` values.  A polynomial is stored as a mapping
from exponent tuples to nonzero coefficients and never mutated after
construction, so instances are hashable and safe to share.

Monomials are ordered graded-lexicographically (total degree first, then
lexicographic with ``x > y > z``).  Serialization lists terms leading term
first under that order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from gmpy2 import mpq

Scalar = Union[int, Fraction, "mpq", str]
Exponent = tuple[int, ...]

VARIABLE_NAMES = ("x", "y", "z")


def Q(value: Scalar, den: int | None = None) -> mpq:
    """Coerce ``value`` (int, Fraction, mpq, float or ``"num/den"``) to an exact rational."""
    if den is not None:
        return mpq(value, den)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return mpq(value.strip())
    return mpq(value)


def qstr(value: mpq) -> str:
    """Reduced ``"num/den"`` string (denominator always present)."""
    value = Q(value)
    return f"{value.numerator}/{value.denominator}"


def grlex_key(exp: Exponent) -> tuple:
    return (sum(exp), exp)


class SparsePoly:
    __slots__ = ("arity", "_terms", "_hash")

    def __init__(self, arity: int, terms: Mapping[Exponent, Scalar] | None = None):
        if arity not in (1, 2, 3):
            raise ValueError(f"unsupported arity {arity}")
        self.arity = arity
        clean: dict[Exponent, mpq] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != arity or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for arity {arity}")
            c = Q(coeff)
            if c:
                clean[exp] = clean.get(exp, mpq(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, arity: int, terms: dict[Exponent, mpq]) -> SparsePoly:
        # trusted constructor: terms already canonical
        obj = cls.__new__(cls)
        obj.arity = arity
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, value: Scalar, arity: int = 2) -> SparsePoly:
        return cls(arity, {(0,) * arity: value})

    @classmethod
    def var(cls, index: int, arity: int = 2) -> SparsePoly:
        exp = [0] * arity
        exp[index] = 1
        return cls(arity, {tuple(exp): 1})

    @classmethod
    def linear(cls, coeffs: Sequence[Scalar], const: Scalar = 0) -> SparsePoly:
        """``coeffs[0]*x + coeffs[1]*y + ... + const``."""
        arity = len(coeffs)
        terms: dict[Exponent, Scalar] = {(0,) * arity: const}
        for i, c in enumerate(coeffs):
            exp = [0] * arity
            exp[i] = 1
            terms[tuple(exp)] = c
        return cls(arity, terms)

    # -- basic queries -------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, mpq]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=-1)

    def coeff(self, exp: Exponent) -> mpq:
        return self._terms.get(tuple(exp), mpq(0))

    def sorted_terms(self) -> list[tuple[Exponent, mpq]]:
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=True)

    def leading_term(self) -> tuple[Exponent, mpq]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return self.sorted_terms()[0]

    def __eq__(self, other) -> bool:
        if isinstance(other, SparsePoly):
            return self.arity == other.arity and self._terms == other._terms
        if isinstance(other, (int, Fraction, type(mpq(0)))):
            return self == SparsePoly.const(other, self.arity)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.arity, frozenset(self._terms.items())))
        return self._hash

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other) -> SparsePoly:
        if isinstance(other, SparsePoly):
            if other.arity != self.arity:
                raise ValueError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other
        return SparsePoly.const(other, self.arity)

    def __add__(self, other) -> SparsePoly:
        other = self._coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            s = out.get(exp)
            if s is None:
                out[exp] = c
            else:
                s = s + c
                if s:
                    out[exp] = s
                else:
                    del out[exp]
        return SparsePoly._raw(self.arity, out)

    __radd__ = __add__

    def __neg__(self) -> SparsePoly:
        return SparsePoly._raw(self.arity, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> SparsePoly:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> SparsePoly:
        return self._coerce(other) - self

    def __mul__(self, other) -> SparsePoly:
        if not isinstance(other, SparsePoly):
            k = Q(other)
            if not k:
                return SparsePoly._raw(self.arity, {})
            return SparsePoly._raw(self.arity, {e: c * k for e, c in self._terms.items()})
        other = self._coerce(other)
        out: dict[Exponent, mpq] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return SparsePoly._raw(self.arity, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> SparsePoly:
        if n < 0:
            raise ValueError("negative power")
        result = SparsePoly.const(1, self.arity)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- evaluation ----------------------------------------------------
    def __call__(self, *point: Scalar) -> mpq:
        return self.eval(point)

    def eval(self, point: Sequence[Scalar]) -> mpq:
        """Exact value at ``point``; powers of each coordinate are cached."""
        if len(point) != self.arity:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.arity}")
        pt = [Q(v) for v in point]
        powers: list[dict[int, mpq]] = [{0: mpq(1), 1: v} for v in pt]

        def pw(i: int, k: int) -> mpq:
            cache = powers[i]
            if k not in cache:
                cache[k] = pt[i] ** k
            return cache[k]

        total = mpq(0)
        for exp, c in self._terms.items():
            term = c
            for i, k in enumerate(exp):
                if k:
                    term = term * pw(i, k)
            total += term
        return total

    def eval_float(self, *coords):
        """Evaluate on floats or numpy arrays (no exactness guarantee)."""
        total = 0.0
        for exp, c in self._terms.items():
            term = float(c)
            for v, k in zip(coords, exp):
                if k:
                    term = term * v**k
            total = total + term
        return total

    # -- substitution -------------------------------------------------
    def compose(self, *subs: SparsePoly) -> SparsePoly:
        """``self(subs[0], subs[1], ...)`` exactly.

        Powers of each substituted polynomial are memoized; terms are grouped
        by the exponent of the first variable so each group is finished with
        one multiplication by a cached power.
        """
        if len(subs) != self.arity:
            raise ValueError(f"need {self.arity} substitutions, got {len(subs)}")
        target = subs[0].arity
        if any(s.arity != target for s in subs):
            raise ValueError("substituted polynomials must share an arity")
        cache: list[dict[int, SparsePoly]] = [{0: SparsePoly.const(1, target), 1: s} for s in subs]

        def pw(i: int, k: int) -> SparsePoly:
            c = cache[i]
            if k not in c:
                half = pw(i, k // 2)
                c[k] = half * half if k % 2 == 0 else half * half * subs[i]
            return c[k]

        groups: dict[int, dict[Exponent, mpq]] = {}
        for exp, c in self._terms.items():
            groups.setdefault(exp[0], {})[exp[1:]] = c
        result = SparsePoly(target)
        for k0, rest in groups.items():
            inner = SparsePoly(target)
            for exp, c in rest.items():
                term = SparsePoly.const(c, target)
                for j, k in enumerate(exp, start=1):
                    if k:
                        term = term * pw(j, k)
                inner = inner + term
            result = result + (inner * pw(0, k0) if k0 else inner)
        return result

    def slice_at_x(self, r: Scalar) -> UnivariateSlice:
        """Restrict a bivariate polynomial to the vertical line ``x = r``."""
        if self.arity != 2:
            raise ValueError("slice_at_x needs a bivariate polynomial")
        r = Q(r)
        coeffs: dict[int, mpq] = {}
        for (i, j), c in self._terms.items():
            coeffs[j] = coeffs.get(j, 0) + c * r**i
        return UnivariateSlice(SparsePoly(1, {(j,): c for j, c in coeffs.items()}), r)

    # -- printing / serialization -------------------------------------------
    def __repr__(self) -> str:
        return f"SparsePoly({self.arity}, {self!s})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        names = VARIABLE_NAMES if self.arity > 1 else ("t",)
        parts = []
        for exp, c in self.sorted_terms():
            mono = "*".join(
                (n if k == 1 else f"{n}^{k}") for n, k in zip(names, exp) if k
            )
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{mag}*{mono}"
            else:
                body = str(mag)
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def to_latex(self) -> str:
        if not self._terms:
            return "0"
        names = VARIABLE_NAMES if self.arity > 1 else ("t",)
        out = ""
        for idx, (exp, c) in enumerate(self.sorted_terms()):
            mono = "".join(n if k == 1 else f"{n}^{{{k}}}" for n, k in zip(names, exp) if k)
            mag = abs(c)
            if mag.denominator == 1:
                num = str(mag.numerator)
            else:
                num = rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
            if mono and mag == 1:
                num = ""
            sign = "-" if c < 0 else ("+" if idx else "")
            out += (f" {sign} " if idx else sign) + num + mono
        return out.strip()

    def to_json(self) -> list:
        return [[list(exp), qstr(c)] for exp, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, data: Iterable, arity: int | None = None) -> SparsePoly:
        data = list(data)
        if arity is None:
            if not data:
                raise ValueError("cannot infer arity of an empty polynomial")
            arity = len(data[0][0])
        return cls(arity, {tuple(exp): Q(c) for exp, c in data})


def x(arity: int = 2) -> SparsePoly:
    return SparsePoly.var(0, arity)


def y(arity: int = 2) -> SparsePoly:
    return SparsePoly.var(1, arity)


def z(arity: int = 3) -> SparsePoly:
    return SparsePoly.var(2, arity)


class UnivariateSlice:
    """A bivariate polynomial frozen at ``x = origin``, as a polynomial in ``t``."""

    __slots__ = ("poly", "origin", "_dense")

    def __init__(self, poly: SparsePoly, origin: Scalar):
        if poly.arity != 1:
            raise ValueError("slice must be univariate")
        self.poly = poly
        self.origin = Q(origin)
        self._dense = dense(poly)

    @property
    def coeffs(self) -> list[mpq]:
        """Dense coefficients, constant term first."""
        return list(self._dense)

    def degree(self) -> int:
        return len(self._dense) - 1

    def leading_coeff(self) -> mpq:
        return self._dense[-1] if self._dense else mpq(0)

    def __call__(self, t: Scalar) -> mpq:
        return horner(self._dense, Q(t))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, UnivariateSlice)
            and self.poly == other.poly
            and self.origin == other.origin
        )

    def __repr__(self) -> str:
        return f"UnivariateSlice(x={self.origin}: {self.poly})"


def dense(p: SparsePoly) -> list[mpq]:
    """Dense coefficient list (constant first) of a univariate polynomial."""
    if p.arity != 1:
        raise ValueError("dense() needs a univariate polynomial")
    deg = p.degree()
    out = [mpq(0)] * (deg + 1)
    for (k,), c in p.items():
        out[k] = c
    return out


def horner(coeffs: Sequence[mpq], t: mpq) -> mpq:
    acc = mpq(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc
