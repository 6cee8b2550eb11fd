"""Hypothesis strategies shared across test modules."""

from fractions import Fraction

from gmpy2 import mpq
from hypothesis import strategies as st

from polyfold.poly import SparsePoly

small_ints = st.integers(-6, 6)


@st.composite
def rationals(draw, bound: int = 20, den: int = 12):
    q = draw(st.fractions(min_value=-bound, max_value=bound, max_denominator=den))
    return mpq(q.numerator, q.denominator)


@st.composite
def polys(draw, arity: int = 2, max_terms: int = 5, max_deg: int = 3):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        exp = tuple(draw(st.integers(0, max_deg)) for _ in range(arity))
        terms[exp] = draw(st.fractions(min_value=-9, max_value=9, max_denominator=4))
    return SparsePoly(arity, {e: mpq(c.numerator, c.denominator) for e, c in terms.items()})


def as_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))
