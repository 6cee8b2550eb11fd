import pytest
import sympy as sp
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from polyfold.poly import Q, SparsePoly, qstr, x, y
from strategies import polys, rationals

X, Y = x(), y()
SX, SY = sp.symbols("x y")


def to_sympy(p: SparsePoly) -> sp.Expr:
    syms = sp.symbols("x y z")[: p.arity]
    return sp.Add(*[
        sp.Rational(int(c.numerator), int(c.denominator)) * sp.Mul(*[s**e for s, e in zip(syms, exp)])
        for exp, c in p.items()
    ])


def from_sympy(expr, arity: int = 2) -> SparsePoly:
    syms = sp.symbols("x y z")[:arity]
    terms = sp.Poly(sp.expand(expr), *syms).terms()
    return SparsePoly(arity, {e: mpq(int(c.p), int(c.q)) for e, c in terms})


# ---------------------------------------------------------------------------
# examples, frozen from a sympy expansion


def test_add_examples():
    assert (X + Y) + (X - Y) == 2 * X
    p = X**2 + 3 * Y
    assert p + SparsePoly.const(0) == p
    assert (X**2 + 2 * X * Y) + (X * Y + 3) == from_sympy(SX**2 + 3 * SX * SY + 3)


def test_add_drops_cancelled_terms():
    p = (X + Y) + (X - Y)
    assert list(p.terms) == [(1, 0)]


def test_mul_examples():
    assert (X + Y) * (X - Y) == from_sympy(SX**2 - SY**2)
    p = X * Y + 7
    assert p * 1 == p
    assert (p * 0).is_zero


def test_compose_examples():
    assert Y.compose(X, Y**2) == Y**2
    assert (X + Y).compose(X**2, Y**2) == X**2 + Y**2
    assert (X * Y).compose(X + 1, Y - 1) == from_sympy(SX * SY - SX + SY - 1)


def test_eval_examples():
    h = Y * (1 + X * (X - 2) * (Y - 1)) ** 2
    assert h(1, 2) == 0
    assert h(1, 1) == 1
    assert h(3, 1) == 1


def test_slice_examples():
    h = Y * (1 + X * (X - 2) * (Y - 1)) ** 2
    # t(2 - t)^2 = 4t - 4t^2 + t^3
    assert h.slice_at_x(1).coeffs == [0, 4, -4, 1]
    assert (X**2 + Y).slice_at_x(0).coeffs == [0, 1]
    s = X.slice_at_x(5)
    assert s.coeffs == [5] and s.degree() == 0


def test_arity_mismatch_is_rejected():
    with pytest.raises(ValueError, match="arity"):
        X + SparsePoly.var(0, 3)
    with pytest.raises(ValueError, match="arity"):
        X * SparsePoly.var(2, 3)


def test_eval_point_arity_checked():
    with pytest.raises(ValueError):
        X.eval((1, 2, 3))


def test_q_coercions():
    assert Q("3/6") == mpq(1, 2)
    assert Q(2, 4) == mpq(1, 2)
    assert qstr(mpq(4)) == "4/1"


def test_display_forms():
    p = (X + Y) ** 2
    assert str(p) == "x^2 + 2*x*y + y^2"
    assert p.to_latex() == "x^{2} + 2xy + y^{2}"


# ---------------------------------------------------------------------------
# properties


@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + q == q + p
    assert p * q == q * p
    assert p - p == SparsePoly.const(0)


@given(polys(), polys())
def test_product_matches_sympy(p, q):
    assert p * q == from_sympy(to_sympy(p) * to_sympy(q))


@given(polys(), polys())
def test_degree_additive(p, q):
    if p.is_zero or q.is_zero:
        assert (p * q).is_zero
    else:
        assert (p * q).degree() == p.degree() + q.degree()


@given(polys(max_deg=2), polys(max_deg=2), polys(max_deg=2), rationals(), rationals())
def test_compose_commutes_with_eval(p, u, v, a, b):
    assert p.compose(u, v).eval((a, b)) == p.eval((u.eval((a, b)), v.eval((a, b))))


@given(polys(max_deg=2), polys(max_deg=2), polys(max_deg=2))
def test_compose_degree_bound(p, u, v):
    c = p.compose(u, v)
    if not c.is_zero:
        assert c.degree() <= p.degree() * max(u.degree(), v.degree(), 1)


@given(polys(), rationals(), rationals())
def test_eval_matches_naive_sum(p, a, b):
    naive = sum((c * a**i * b**j for (i, j), c in p.items()), mpq(0))
    assert p.eval((a, b)) == naive


@given(polys(), rationals(), rationals())
def test_slice_agrees_with_eval(p, r, t):
    assert p.slice_at_x(r)(t) == p.eval((r, t))


@given(polys(arity=3))
def test_json_round_trip(p):
    assert SparsePoly.from_json(p.to_json(), 3) == p


@given(polys())
def test_float_eval_close_to_exact(p):
    exact = float(p.eval((mpq(1, 3), mpq(-2))))
    assert p.eval_float(1 / 3, -2.0) == pytest.approx(exact, rel=1e-9, abs=1e-9)


@given(st.integers(0, 6), polys(max_terms=3, max_deg=2))
def test_power_is_repeated_product(n, p):
    expected = SparsePoly.const(1)
    for _ in range(n):
        expected = expected * p
    assert p**n == expected
