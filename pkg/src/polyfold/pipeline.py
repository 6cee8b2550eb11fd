"""Inductive construction of polynomial maps onto V-polygons and their interiors.

A polygon with ``n > 2`` edges is handled by first mapping onto the polygon
with its last vertex dropped, then applying three folds separated by affine
relocations:

    f1   fold over ]0, a_{n-1}[ : fills the strip above the last bounded edge
    tau1 move p_{n-1} to the origin with w along the positive x-axis
    f2   fold over ]0, +inf[    : reaches everything except the vertex p_{n-1}
    tau2 put p_{n-1} at the origin, its bounded edge on the negative x-axis
         and w on the positive y-axis
    f3   fold over ]-1, +inf[   : covers the missing vertex
    then undo tau2, and undo tau1 together with the initial placement.
"""

from __future__ import annotations

from gmpy2 import mpq

from .folding import FoldStage, build_fold_map
from .geometry import (
    AffineMap2,
    PolygonalSet,
    Region,
    VPolygon,
    angle_placement,
    axes_placement,
    compute_apex,
    halfplane_placement,
    normalize_step2,
    relocate_tau1,
    relocate_tau2,
    validate,
    vertical_strip,
)
from .poly import SparsePoly, x as X, y as Y
from .stages import AffineStage, LiftStage, PolyStage, StagedMap

UPPER_HALFPLANE = VPolygon.halfplane((0, 0), (1, 0))
QUADRANT = VPolygon(((0, 0),), (0, 1), (1, 0))

CATALOG: dict[str, VPolygon] = {
    "halfplane": UPPER_HALFPLANE,
    "tilted-halfplane": VPolygon.halfplane((1, 0), (-2, 1)),
    "quadrant": QUADRANT,
    "angle": VPolygon(((1, 1),), (-1, 2), (3, 1)),
    "tri3": VPolygon(((0, 1), (1, 0)), (-1, 2), (2, 1)),
    "quad4": VPolygon(((-2, 3), (0, 1), (2, 0)), (-1, 2), (1, 1)),
    "pent5": VPolygon(((-3, 5), (-2, 2), (0, 0), (3, -1)), (-1, 4), (1, 1)),
}


def closed(p: VPolygon, label: str = "") -> Region:
    return Region.of(PolygonalSet.from_polygon(p, label=label), label=label)


def without_last_vertex(p: VPolygon, label: str = "") -> PolygonalSet:
    flags = [True] * len(p.corners)
    flags[-1] = False
    return PolygonalSet.from_polygon(p, vertex_included=flags, label=label)


def build_halfplane_map() -> StagedMap:
    stage = PolyStage("halfplane", (X(), Y() ** 2))
    return StagedMap(2, (stage,), (closed(UPPER_HALFPLANE, "{y >= 0}"),), {"n_edges": 1})


def build_quadrant_map() -> StagedMap:
    stage = PolyStage("quadrant", (X() ** 2, Y() ** 2))
    return StagedMap(2, (stage,), (closed(QUADRANT, "{x >= 0, y >= 0}"),), {"n_edges": 2})


def open_halfplane_map() -> StagedMap:
    """``(y(xy - 1), (xy - 1)^2 + x^2)``, onto ``R x (0, +inf)``.

    The second coordinate vanishes only if ``x = 0`` and ``xy = 1`` at once.
    """
    x, y = X(), Y()
    u = x * y - 1
    stage = PolyStage("open_halfplane", (y * u, u * u + x * x))
    target = PolygonalSet.from_polygon(UPPER_HALFPLANE, edge_included=(False,), label="{y > 0}")
    return StagedMap(2, (stage,), (Region.of(target, label="{y > 0}"),), {"n_edges": 1})


def _with_placement(base: StagedMap, tau: AffineMap2, p: VPolygon) -> StagedMap:
    if tau.is_identity():
        return StagedMap(2, base.stages, (closed(p, "P"),), dict(base.meta))
    return StagedMap(
        2,
        base.stages + (AffineStage(tau, "placement"),),
        base.expected_after + (closed(p, "P"),),
        dict(base.meta),
    )


def build_v_polygon_map(p: VPolygon, paper_step4_sign: bool = False) -> StagedMap:
    """Staged polynomial map from the plane onto the closed V-polygon ``p``.

    ``paper_step4_sign`` builds the second fold with ``psi = +x`` instead of
    ``psi = -x``; that variant misses part of the polygon and exists only to
    demonstrate it.
    """
    p = validate(p)
    n = p.n_edges
    if n == 1:
        return _with_placement(build_halfplane_map(), halfplane_placement(p), p)
    if n == 2:
        return _with_placement(build_quadrant_map(), angle_placement(p), p)

    tau0, p0 = normalize_step2(p)
    a_last = p0.vertices[-1][0]
    p1 = p0.drop_last_vertex()
    inner = build_v_polygon_map(p1, paper_step4_sign)

    s1 = PolygonalSet.from_polygon(p1, label="P1")
    _, f1 = build_fold_map(s1, 0, a_last, label="f1")
    q_region = Region.of(s1, vertical_strip(0, a_last, label="T"), label="P1 u T")

    q = compute_apex(p0)
    tau1, pp, qp = relocate_tau1(p0, q)
    pp2 = validate(VPolygon(pp.vertices, pp.dir_in, qp))
    flags = [True] * len(pp2.corners)
    flags[-1] = False
    s2 = PolygonalSet.from_polygon(
        pp2,
        edge_included=[True] * (pp2.n_edges - 1) + [False],
        vertex_included=flags,
        label="P'2 minus ray p'u'",
    )
    psi2 = X() if paper_step4_sign else None
    _, f2 = build_fold_map(s2, 0, float("inf"), psi=psi2, label="f2")

    tau2, ppp = relocate_tau2(pp)
    s3 = without_last_vertex(ppp, "P'' minus vertex")
    _, f3 = build_fold_map(s3, ppp.vertices[-2][0], float("inf"), label="f3")
    assert len(f3.spec.family_prime) == n - 1

    undo = tau1.inverse().then(tau0.inverse())
    stages = inner.stages + (
        f1,
        AffineStage(tau1, "tau1"),
        f2,
        AffineStage(tau2, "tau2"),
        f3,
        AffineStage(tau2.inverse(), "tau2^-1"),
        AffineStage(undo, "tau1^-1 tau0^-1"),
    )
    expected = inner.expected_after + (
        q_region,
        q_region.transformed(tau1),
        Region.of(without_last_vertex(pp, "P' minus vertex"), label="P' minus vertex"),
        Region.of(s3, label="P'' minus vertex"),
        closed(ppp, "P''"),
        closed(pp, "P'"),
        closed(p, "P"),
    )
    meta = {"n_edges": n, "paper_step4_sign": paper_step4_sign}
    return StagedMap(2, stages, expected, meta)


def build_interior_map(p: VPolygon, paper_step4_sign: bool = False) -> StagedMap:
    """Staged map ``R^3 -> R^2`` onto the interior of ``p``.

    The last two coordinates go through the open half-plane map, giving a
    point ``(x, y, t)`` with ``t > 0``; then ``(x, y, t) -> f0(x, y) + t(1, 1)``
    where ``f0`` maps onto ``p`` placed with its unbounded edges on the axes.
    """
    p = validate(p)
    if p.n_edges < 2:
        raise ValueError("interior map needs a polygon with two unbounded edges")
    tau = axes_placement(p)
    placed = p.transformed(tau)
    f0 = build_v_polygon_map(placed, paper_step4_sign)

    x, y, z = (SparsePoly.var(i, 3) for i in range(3))
    u = y * z - 1
    factor = PolyStage("open_halfplane_factor", (x, z * u, u * u + y * y))
    positive_t = PolygonalSet.from_polygon(UPPER_HALFPLANE, edge_included=(False,), label="t > 0")
    stages = [factor, LiftStage(f0, (mpq(1), mpq(1)))]
    expected = [
        Region.of(positive_t, coords=(1, 2), label="t > 0"),
        Region.of(PolygonalSet.interior(placed, "Int P placed"), label="Int P placed"),
    ]
    if not tau.is_identity():
        stages.append(AffineStage(tau.inverse(), "placement^-1"))
        expected.append(Region.of(PolygonalSet.interior(p, "Int P"), label="Int P"))
    return StagedMap(3, tuple(stages), tuple(expected), {"n_edges": p.n_edges, "interior": True})


def fold_stages(m: StagedMap) -> list[tuple[int, FoldStage]]:
    """Fold stages of a map, including those inside lift stages."""
    out = []
    for i, st in enumerate(m.stages):
        if isinstance(st, FoldStage):
            out.append((i, st))
        elif isinstance(st, LiftStage):
            out.extend(fold_stages(st.inner))
    return out


def expand(m: StagedMap, degree_cap: int = 64) -> tuple[SparsePoly, ...]:
    """Fully composed coordinates; raises ``ExpansionRefused`` above the cap."""
    return m.expand(degree_cap)


def expanded_json(m: StagedMap, degree_cap: int = 64) -> dict:
    polys = expand(m, degree_cap)
    return {
        "domain_arity": m.domain_arity,
        "predicted_degree": m.predicted_degree(),
        "degree": max(p.degree() for p in polys),
        "expanded": [p.to_json() for p in polys],
    }


def to_latex(polys: tuple[SparsePoly, ...]) -> str:
    names = "xyz"[: polys[0].arity]
    args = ",".join(names)
    body = ",\\ ".join(p.to_latex() for p in polys)
    return f"({args}) \\mapsto \\left({body}\\right)"
