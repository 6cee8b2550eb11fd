import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfold.geometry import AffineMap2, PolygonalSet, Region, VPolygon, is_curtain_certified
from polyfold.folding import build_fold_map
from polyfold.pipeline import (
    CATALOG,
    QUADRANT,
    UPPER_HALFPLANE,
    build_halfplane_map,
    build_interior_map,
    build_quadrant_map,
    build_v_polygon_map,
    closed,
    expand,
)
from polyfold.poly import SparsePoly
from polyfold.stages import AffineStage, StagedMap
from polyfold.verify import (
    SamplePlan,
    certify_fold_stage,
    check_containment,
    check_coverage,
    cross_check,
    eval_rounded,
    parse_window,
    polygon_window,
    pull_back,
    random_curtain,
    rationalize,
    round_dyadic,
    sample_set,
)


def identity_map(target: Region) -> StagedMap:
    return StagedMap(2, (AffineStage(AffineMap2.identity(), "id"),), (target,))


# ---------------------------------------------------------------------------
# sample plans


def test_plans_are_deterministic():
    for scheme in ("uniform", "grid", "heavy_tailed"):
        plan = SamplePlan(seed=42, count=50, scheme=scheme)
        assert plan.rational_points(2) == plan.rational_points(2)
        a = plan.float_points(3)
        b = plan.float_points(3)
        assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_plan_streams_differ():
    plan = SamplePlan(seed=1, count=20)
    assert plan.rational_points(2, stream=0) != plan.rational_points(2, stream=1)


def test_uniform_rationals_respect_denominator_bound():
    pts = SamplePlan(seed=9, count=200, denominator_bound=7).rational_points(2)
    assert all(v.denominator <= 7 and abs(v) <= 7 for p in pts for v in p)


def test_plan_rejects_unknown_scheme():
    with pytest.raises(ValueError):
        SamplePlan(scheme="sobol")


def test_heavy_tailed_reaches_far_out():
    u, v = SamplePlan(seed=0, count=10_000, scheme="heavy_tailed").float_points(2)
    r = np.hypot(u, v)
    assert r.max() > 1e3 and np.median(r) < 2


@given(st.fractions(min_value=-10**6, max_value=10**6))
def test_round_dyadic_keeps_leading_bits(f):
    v = mpq(f.numerator, f.denominator)
    r = round_dyadic(v, 64)
    assert abs(r - v) <= abs(v) * mpq(1, 2**62)


def test_rationalize_and_windows():
    assert rationalize(0.3333333, 10) == mpq(1, 3)
    assert parse_window("-10,10,0,10") == (-10, 10, 0, 10)
    with pytest.raises(ValueError):
        parse_window("1,0,0,1")
    assert polygon_window([(0, 1), (1, 0)]) == (-5, 6, -5, 6)


# ---------------------------------------------------------------------------
# containment


def test_halfplane_containment_passes():
    res = check_containment(build_halfplane_map(), closed(UPPER_HALFPLANE), SamplePlan(count=500))
    assert res.passed and res.checked == 500


def test_identity_vs_quadrant_reports_witness():
    m = identity_map(closed(QUADRANT, "quadrant"))
    res = check_containment(m, None, points=[(-1, 0)])
    assert not res.passed
    assert res.counterexample.point == (-1, 0)
    assert res.counterexample.image == (-1, 0)
    assert res.counterexample.stage == 0


def test_stagewise_reports_failing_stage():
    m = build_v_polygon_map(CATALOG["quad4"], paper_step4_sign=True)
    res = check_containment(m, None, SamplePlan(seed=0, count=1000), "stagewise")
    assert not res.passed
    assert res.counterexample.stage is not None
    data = res.to_json()
    assert data["counterexample"]["stage"] == res.counterexample.stage


def test_sample_set_points_are_members():
    s = PolygonalSet.from_polygon(CATALOG["pent5"], edge_included=[False] * 5)
    pts = sample_set(s, np.random.default_rng(0), 300, 100)
    assert len(pts) == 300 and all(s.contains(p) for p in pts)


# ---------------------------------------------------------------------------
# coverage


def test_identity_coverage_counts_only_target_cells():
    m = identity_map(closed(QUADRANT))
    window = (-10, 10, 0, 10)
    plan = SamplePlan(seed=0, count=20_000, scheme="heavy_tailed", scale=5)
    rep = check_coverage(m, None, window, 20, plan, refine=False)
    # cells with x < 0 are not target cells
    assert rep.target_cells == 200
    assert rep.hit_fraction > 0.9


def test_quadrant_map_leaves_negative_x_cells_unhit():
    m = build_quadrant_map()
    target = closed(UPPER_HALFPLANE)
    plan = SamplePlan(seed=0, count=50_000, scheme="heavy_tailed")
    rep = check_coverage(m, target, (-10, 10, 0, 10), 20, plan)
    assert rep.target_cells == 400
    assert all(c[0] < 0 for c in rep.misses)
    assert len(rep.misses) == 200
    assert rep.hit_fraction == 0.5


def test_refinement_fills_cells_missed_by_random_phase():
    m = build_halfplane_map()
    plan = SamplePlan(seed=0, count=2_000, scheme="heavy_tailed")
    raw = check_coverage(m, None, (-10, 10, 0, 10), 40, plan, refine=False)
    full = check_coverage(m, None, (-10, 10, 0, 10), 40, plan, threshold=0.99)
    assert raw.refined_hits == 0 and raw.random_fraction < 0.9
    assert full.random_hits == raw.random_hits
    assert full.hit_fraction == 1.0 and full.passed


def test_plus_x_sign_coverage_regression_small():
    window = polygon_window(CATALOG["quad4"].vertices)
    plan = SamplePlan(seed=0, count=100_000, scheme="heavy_tailed")
    good = check_coverage(build_v_polygon_map(CATALOG["quad4"]), None, window, 40, plan, threshold=0.98)
    bad = check_coverage(build_v_polygon_map(CATALOG["quad4"], True), None, window, 40, plan, threshold=0.98)
    assert good.passed
    assert bad.hit_fraction <= 0.93


def test_coverage_report_json_and_csv():
    m = build_quadrant_map()
    rep = check_coverage(m, closed(UPPER_HALFPLANE), (-2, 2, 0, 2), 4, SamplePlan(count=1000, scheme="heavy_tailed"))
    data = rep.to_json()
    assert data["target_cells"] == 16 and data["misses"] == 8
    lines = rep.misses_csv().splitlines()
    assert lines[0] == "x,y,near_boundary"
    assert len(lines) == 9
    assert lines[1].startswith("-1.5,")


def test_coverage_is_deterministic():
    m = build_v_polygon_map(CATALOG["tri3"])
    plan = SamplePlan(seed=4, count=20_000, scheme="heavy_tailed")
    window = polygon_window(CATALOG["tri3"].vertices)
    a = check_coverage(m, None, window, 30, plan)
    b = check_coverage(m, None, window, 30, plan)
    assert a.to_json() == b.to_json() and a.misses == b.misses


# ---------------------------------------------------------------------------
# preimages


@pytest.mark.parametrize("name", ["tilted-halfplane", "angle", "tri3", "quad4"])
def test_pull_back_lands_on_target_point(name):
    m = build_v_polygon_map(CATALOG[name])
    rng = np.random.default_rng(0)
    s = m.target.parts[0]
    for z in sample_set(s, rng, 5, 20):
        # deep chains branch at every fold; give the search room
        pre = pull_back(m, z, budget=512)
        assert pre is not None
        img = eval_rounded(m, pre)
        assert abs(img[0] - z[0]) < mpq(1, 10**6) and abs(img[1] - z[1]) < mpq(1, 10**6)


def test_pull_back_outside_image_fails():
    assert pull_back(build_quadrant_map(), (mpq(-1), mpq(1))) is None


def test_pull_back_interior_map():
    m = build_interior_map(CATALOG["angle"])
    z = (mpq(2), mpq(5, 2))
    pre = pull_back(m, z)
    assert pre is not None and len(pre) == 3
    img = m.eval(pre)
    assert abs(img[0] - z[0]) < mpq(1, 10**6) and abs(img[1] - z[1]) < mpq(1, 10**6)


# ---------------------------------------------------------------------------
# fold certificates


def test_certify_fold_stage_cases():
    s = PolygonalSet.from_polygon(VPolygon.halfplane((0, 1), (1, 0)))
    _, stage = build_fold_map(s, 0, 2)
    fibers = [mpq(-1), mpq(1, 2), mpq(1), mpq(3, 2), mpq(3)]
    ok, certs = certify_fold_stage(stage, fibers=fibers)
    assert ok
    assert [c.case for c in certs] == ["case1", "case2", "case2", "case2", "case1"]
    for c in certs:
        if c.case == "case2":
            gamma = stage.spec.gamma_slice(c.r)
            assert sum(a * c.s_r**k for k, a in enumerate(gamma)) == 1


def test_certify_rejects_fiber_outside_projection():
    s = PolygonalSet.from_polygon(QUADRANT)
    _, stage = build_fold_map(s, 1, 2)
    with pytest.raises(ValueError, match="outside the projection"):
        certify_fold_stage(stage, fibers=[mpq(-1)])


@pytest.mark.parametrize("name", ["tri3", "quad4"])
def test_pipeline_folds_certify(name):
    m = build_v_polygon_map(CATALOG[name])
    for st_ in m.stages:
        if st_.kind == "fold":
            ok, certs = certify_fold_stage(st_, plan=SamplePlan(seed=1, count=8), grid_size=100)
            assert ok, [c.to_json() for c in certs if not c.valid]


@given(st.integers(0, 2**32))
@settings(max_examples=30)
def test_random_curtains_are_certified(seed):
    s = random_curtain(np.random.default_rng(seed))
    assert is_curtain_certified(s)
    assert s.polygon is not None and s.polygon.n_edges >= 2


# ---------------------------------------------------------------------------
# cross checks


def test_cross_check_halfplane():
    m = build_halfplane_map()
    assert cross_check(m, expand(m), SamplePlan(count=100)).passed


def test_cross_check_detects_corrupted_expansion():
    m = build_v_polygon_map(CATALOG["angle"])
    u, v = expand(m)
    exp, c = next(iter(v.items()))
    bad = SparsePoly(2, {**v.terms, exp: c + mpq(1, 1000)})
    res = cross_check(m, (u, bad), SamplePlan(count=50))
    assert not res.passed
    assert res.witness["staged"] != res.witness["expanded"]
    assert res.witness["staged"][0] == res.witness["expanded"][0]


def test_cross_check_tri3_prefix():
    m = build_v_polygon_map(CATALOG["tri3"]).prefix(3)
    assert cross_check(m, expand(m), SamplePlan(seed=6, count=1000, denominator_bound=50)).passed
