import numpy as np
import pytest
import sympy as sp
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfold.folding import FoldStage
from polyfold.geometry import VPolygon, normalize_step2
from polyfold.pipeline import (
    CATALOG,
    build_halfplane_map,
    build_interior_map,
    build_quadrant_map,
    build_v_polygon_map,
    expand,
    expanded_json,
    fold_stages,
    open_halfplane_map,
    to_latex,
)
from polyfold.poly import SparsePoly, x, y
from polyfold.stages import ExpansionRefused, StagedMap
from polyfold.verify import SamplePlan, check_containment, cross_check
from strategies import rationals

X, Y = x(), y()
SX, SY = sp.symbols("x y")
EXPECTED_STAGES = {
    "halfplane": 1,
    "tilted-halfplane": 2,
    "quadrant": 1,
    "angle": 2,
    "tri3": 9,
    "quad4": 16,
    "pent5": 23,
}


@pytest.fixture(scope="module")
def maps():
    return {name: build_v_polygon_map(p) for name, p in CATALOG.items()}


def sympy_poly(p: SparsePoly) -> sp.Expr:
    return sp.Add(*[
        sp.Rational(int(c.numerator), int(c.denominator)) * SX ** e[0] * SY ** e[1]
        for e, c in p.items()
    ])


def line_through(a, b) -> sp.Expr:
    """Primitive integer functional vanishing on the line ab, positive on its left."""
    (ax, ay), (bx, by) = [(sp.Rational(str(u)), sp.Rational(str(v))) for u, v in (a, b)]
    expr = (bx - ax) * (SY - ay) - (by - ay) * (SX - ax)
    _, prim = sp.Poly(expr, SX, SY).primitive()
    return prim.as_expr()


# ---------------------------------------------------------------------------
# base cases


def test_halfplane_examples():
    m = build_halfplane_map()
    assert m.eval((3, 2)) == (3, 4)
    assert m.eval((0, -1)) == (0, 1)
    assert expand(m) == (X, Y**2)


def test_quadrant_examples():
    m = build_quadrant_map()
    assert m.eval((-2, 3)) == (4, 9)
    assert m.eval((0, 0)) == (0, 0)
    assert expand(m) == (X**2, Y**2)


def test_open_halfplane_example():
    m = open_halfplane_map()
    assert m.eval((0, 5)) == (-5, 1)


@given(rationals(50, 30), rationals(50, 30))
def test_open_halfplane_second_coordinate_positive(a, b):
    assert open_halfplane_map().eval((a, b))[1] > 0


def test_n1_dispatch_matches_halfplane_map():
    m = build_v_polygon_map(CATALOG["halfplane"])
    assert m.stages == build_halfplane_map().stages


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_stage_counts(maps, name):
    m = maps[name]
    assert len(m) == EXPECTED_STAGES[name]
    n = m.meta["n_edges"]
    if n > 2:
        assert len(m) == 2 + 7 * (n - 2)
        assert len(fold_stages(m)) == 3 * (n - 2)


def test_parallel_polygon_is_rejected():
    with pytest.raises(ValueError):
        build_v_polygon_map(VPolygon(((0, 0), (1, 0)), (0, 1), (0, 1)))


# ---------------------------------------------------------------------------
# the n = 3 construction against an independent symbolic oracle


def test_tri3_first_fold_matches_symbolic_definition(maps):
    m = maps["tri3"]
    _, p0 = normalize_step2(CATALOG["tri3"])
    a = sp.Rational(str(p0.vertices[-1][0]))
    # edges of P1 = [v, p_1, ..., p_{n-2}, w] in the normalized frame
    p1 = p0.drop_last_vertex()
    far_in = (p1.vertices[0][0] + p1.dir_in[0], p1.vertices[0][1] + p1.dir_in[1])
    far_out = (p1.vertices[-1][0] + p1.dir_out[0], p1.vertices[-1][1] + p1.dir_out[1])
    pts = [far_in, *p1.vertices, far_out]
    ells = [line_through(u, v) for u, v in zip(pts, pts[1:])]
    ell = sp.Mul(*ells)
    h = sp.expand(SY * (1 + ell * SX * (SX - a)) ** 2)
    f1 = m.stages[2]
    assert isinstance(f1, FoldStage)
    assert sp.expand(sympy_poly(f1.spec.h) - h) == 0


def test_tri3_fold_intervals(maps):
    folds = [st for _, st in fold_stages(maps["tri3"])]
    f1, f2, f3 = (st.spec for st in folds)
    assert f1.c == 0 and f1.d > 0
    assert f2.c == 0 and f2.d == float("inf") and f2.psi == -X
    assert f3.c == -1 and f3.d == float("inf")
    assert len(f3.family_prime) == 2 and -X in f3.family and -X not in f3.family_prime


def test_plus_x_variant_flips_second_fold():
    m = build_v_polygon_map(CATALOG["tri3"], paper_step4_sign=True)
    f2 = [st for _, st in fold_stages(m)][1]
    assert f2.spec.psi == X and not f2.spec.default_psi


def test_tri3_prefix_expansion_matches_symbolic_composition(maps):
    m = maps["tri3"].prefix(3)
    polys = expand(m)
    u, v = SX**2, SY**2
    tau = m.stages[1].tau
    (a, b), (c, d) = [[sp.Rational(str(e)) for e in row] for row in tau.matrix]
    e, f = [sp.Rational(str(o)) for o in tau.offset]
    u, v = a * u + b * v + e, c * u + d * v + f
    h = sympy_poly(m.stages[2].spec.h)
    hv = h.subs({SX: u, SY: v}, simultaneous=True)
    assert sp.expand(sympy_poly(polys[0]) - u) == 0
    assert sp.expand(sympy_poly(polys[1]) - hv) == 0


# ---------------------------------------------------------------------------
# containment, small scale


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_stagewise_containment_small(maps, name):
    res = check_containment(maps[name], None, SamplePlan(seed=3, count=200), "stagewise")
    assert res.passed, res.to_json()


def test_chained_containment_tri3(maps):
    res = check_containment(maps["tri3"], None, SamplePlan(seed=5, count=300), "chained")
    assert res.passed, res.to_json()


def test_chained_containment_quad4_small(maps):
    res = check_containment(maps["quad4"], None, SamplePlan(seed=5, count=20, denominator_bound=10), "chained")
    assert res.passed, res.to_json()


# ---------------------------------------------------------------------------
# interior maps


def test_interior_quadrant_example():
    m = build_interior_map(CATALOG["quadrant"])
    assert m.domain_arity == 3
    # the last stage is the lift (x, y, t) -> (x^2 + t, y^2 + t)
    lift = m.stages[-1]
    assert lift.eval((mpq(1), mpq(1), mpq(1, 2))) == (mpq(3, 2), mpq(3, 2))


@given(rationals(), rationals(), rationals())
@settings(max_examples=40)
def test_interior_quadrant_strict(a, b, c):
    m = build_interior_map(CATALOG["quadrant"])
    u, v = m.eval((a, b, c))
    assert u > 0 and v > 0


def test_interior_needs_two_unbounded_edge_lines():
    with pytest.raises(ValueError):
        build_interior_map(CATALOG["halfplane"])


@pytest.mark.parametrize("name", ["quadrant", "angle", "tri3"])
def test_interior_chained_containment_small(name):
    m = build_interior_map(CATALOG[name])
    res = check_containment(m, None, SamplePlan(seed=1, count=60), "chained")
    assert res.passed, res.to_json()


# ---------------------------------------------------------------------------
# expansion and serialization


def test_expand_refuses_above_cap(maps):
    with pytest.raises(ExpansionRefused) as err:
        expand(maps["tri3"], 64)
    assert err.value.predicted == 1134
    assert "1134" in str(err.value)


@pytest.mark.parametrize("name", ["halfplane", "tilted-halfplane", "quadrant", "angle"])
def test_expansion_degree_budget_and_cross_check(maps, name):
    m = maps[name]
    polys = expand(m)
    assert max(p.degree() for p in polys) <= m.degree_product()
    assert cross_check(m, polys, SamplePlan(seed=2, count=100)).passed


def test_expanded_json_and_latex():
    data = expanded_json(build_quadrant_map())
    assert data["degree"] == 2 and data["predicted_degree"] == 2
    assert to_latex(expand(build_quadrant_map())) == r"(x,y) \mapsto \left(x^{2},\ y^{2}\right)"


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_json_round_trip(maps, name):
    m = maps[name]
    back = StagedMap.from_json(m.to_json())
    assert back == m
    assert back.to_json() == m.to_json()


def test_interior_json_round_trip():
    m = build_interior_map(CATALOG["tri3"])
    assert StagedMap.from_json(m.to_json()) == m


@given(st.integers(0, 2**20))
@settings(max_examples=50)
def test_float_path_tracks_exact_path(seed):
    # full degree 1134 overflows doubles; the first two folds stay in range
    m = build_v_polygon_map(CATALOG["tri3"]).prefix(5)
    rng = np.random.default_rng(seed)
    a, b = (mpq(int(k), 8) for k in rng.integers(-16, 17, size=2))
    exact = m.eval((a, b))
    fx, fy = m.eval_float(np.array([float(a)]), np.array([float(b)]))
    assert fx[0] == pytest.approx(float(exact[0]), rel=1e-6, abs=1e-6)
    assert fy[0] == pytest.approx(float(exact[1]), rel=1e-6, abs=1e-6)
