"""Unbounded convex polygons, polygonal sets with deleted faces, affine maps.

A V-polygon ``[v, p_1, ..., p_{n-1}, w]`` is stored by its vertices and the
two directions of its unbounded edges: the ray ``p_1 + s*v`` and the ray
``p_{n-1} + s*w`` (``s >= 0``).  Validated polygons are always oriented so
the region lies to the left when the boundary is walked from the far end of
the ``v`` ray, through the vertices, out along ``w``.

A half-plane is the degenerate variant with one base point and
``dir_in == -dir_out`` (a "vertex" that does not turn).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from gmpy2 import mpq

from .poly import Q, SparsePoly, qstr

Point = tuple[mpq, mpq]


class PolygonError(ValueError):
    """Invalid polygon input; ``code`` is a stable machine-readable reason."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


def pt(x, y) -> Point:
    return (Q(x), Q(y))


def cross(u: Sequence, v: Sequence) -> mpq:
    return u[0] * v[1] - u[1] * v[0]


def sub(p: Sequence, q: Sequence) -> Point:
    return (p[0] - q[0], p[1] - q[1])


def add(p: Sequence, q: Sequence) -> Point:
    return (p[0] + q[0], p[1] + q[1])


def scale(k, p: Sequence) -> Point:
    return (k * p[0], k * p[1])


def point_json(p: Sequence) -> list[str]:
    return [qstr(p[0]), qstr(p[1])]


def point_from_json(data: Sequence) -> Point:
    return (Q(data[0]), Q(data[1]))


# ---------------------------------------------------------------------------
# line functionals


@dataclass(frozen=True)
class LineFunctional:
    """``l(x, y) = a*x + b*y + c``."""

    a: mpq
    b: mpq
    c: mpq

    def __post_init__(self):
        object.__setattr__(self, "a", Q(self.a))
        object.__setattr__(self, "b", Q(self.b))
        object.__setattr__(self, "c", Q(self.c))
        if not self.a and not self.b:
            raise ValueError("line functional needs (a, b) != (0, 0)")

    @classmethod
    def through(cls, point: Sequence, direction: Sequence) -> LineFunctional:
        """Functional vanishing on the line through ``point`` along ``direction``,
        positive on its left, scaled to coprime integer coefficients."""
        dx, dy = Q(direction[0]), Q(direction[1])
        px, py = Q(point[0]), Q(point[1])
        return cls(-dy, dx, dy * px - dx * py).primitive()

    def primitive(self) -> LineFunctional:
        vals = (self.a, self.b, self.c)
        den = math.lcm(*(int(v.denominator) for v in vals))
        nums = [int(v * den) for v in vals]
        g = math.gcd(*nums)
        return LineFunctional(*(mpq(n, g) for n in nums))

    def __call__(self, p: Sequence) -> mpq:
        return self.a * p[0] + self.b * p[1] + self.c

    def sign(self, p: Sequence) -> int:
        """Sign of the value at a rational point, without normalizing fractions."""
        x, y = Q(p[0]), Q(p[1])
        a, b, c = self.a, self.b, self.c
        xn, xd, yn, yd = x.numerator, x.denominator, y.numerator, y.denominator
        if a.denominator == b.denominator == c.denominator == 1:
            v = a.numerator * xn * yd + b.numerator * yn * xd + c.numerator * xd * yd
        else:
            v = self(p)
        return (v > 0) - (v < 0)

    def eval_float(self, x, y):
        return float(self.a) * x + float(self.b) * y + float(self.c)

    @property
    def is_vertical(self) -> bool:
        return self.b == 0

    def as_poly(self) -> SparsePoly:
        return SparsePoly.linear((self.a, self.b), self.c)

    def pullback(self, tau: AffineMap2) -> LineFunctional:
        """``l o tau`` (vanishes on ``tau^-1`` of this line)."""
        (m00, m01), (m10, m11) = tau.matrix
        e, f = tau.offset
        return LineFunctional(
            self.a * m00 + self.b * m10,
            self.a * m01 + self.b * m11,
            self.a * e + self.b * f + self.c,
        )

    def pushforward(self, tau: AffineMap2) -> LineFunctional:
        """Functional ``l'`` with ``l'(tau(p))`` a positive multiple of ``l(p)``."""
        return self.pullback(tau.inverse()).primitive()

    def __str__(self) -> str:
        return str(self.as_poly())

    def to_json(self) -> list[str]:
        return [qstr(self.a), qstr(self.b), qstr(self.c)]

    @classmethod
    def from_json(cls, data: Sequence) -> LineFunctional:
        return cls(*(Q(v) for v in data))


# ---------------------------------------------------------------------------
# affine maps


@dataclass(frozen=True)
class AffineMap2:
    """``p -> M p + offset`` with an invertible rational 2x2 matrix ``M``."""

    matrix: tuple[tuple[mpq, mpq], tuple[mpq, mpq]]
    offset: Point = (mpq(0), mpq(0))

    def __post_init__(self):
        m = tuple(tuple(Q(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", (Q(self.offset[0]), Q(self.offset[1])))
        if self.det == 0:
            raise ValueError("affine map is singular")

    @classmethod
    def identity(cls) -> AffineMap2:
        return cls(((1, 0), (0, 1)))

    @classmethod
    def from_frame(cls, origin: Sequence, e1: Sequence, e2: Sequence) -> AffineMap2:
        """Map sending ``origin -> (0,0)``, ``e1 -> (1,0)``, ``e2 -> (0,1)``
        (``e1``, ``e2`` are vectors)."""
        frame = cls(((e1[0], e2[0]), (e1[1], e2[1])), origin)  # sends (1,0)->origin+e1
        return frame.inverse()

    @property
    def det(self) -> mpq:
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    def __call__(self, p: Sequence) -> Point:
        (a, b), (c, d) = self.matrix
        return (a * p[0] + b * p[1] + self.offset[0], c * p[0] + d * p[1] + self.offset[1])

    def linear(self, v: Sequence) -> Point:
        (a, b), (c, d) = self.matrix
        return (a * v[0] + b * v[1], c * v[0] + d * v[1])

    def apply_float(self, x, y):
        (a, b), (c, d) = self.matrix
        e, f = self.offset
        return (
            float(a) * x + float(b) * y + float(e),
            float(c) * x + float(d) * y + float(f),
        )

    def inverse(self) -> AffineMap2:
        (a, b), (c, d) = self.matrix
        det = self.det
        inv = ((d / det, -b / det), (-c / det, a / det))
        e, f = self.offset
        return AffineMap2(inv, (-(inv[0][0] * e + inv[0][1] * f), -(inv[1][0] * e + inv[1][1] * f)))

    def then(self, other: AffineMap2) -> AffineMap2:
        """``other o self`` (apply self first)."""
        (a, b), (c, d) = other.matrix
        (p, q), (r, s) = self.matrix
        m = ((a * p + b * r, a * q + b * s), (c * p + d * r, c * q + d * s))
        return AffineMap2(m, other(self.offset))

    def is_identity(self) -> bool:
        return self == AffineMap2.identity()

    def as_polys(self, arity: int = 2) -> tuple[SparsePoly, SparsePoly]:
        (a, b), (c, d) = self.matrix
        pad = (0,) * (arity - 2)
        return (
            SparsePoly.linear((a, b) + pad, self.offset[0]),
            SparsePoly.linear((c, d) + pad, self.offset[1]),
        )

    def to_json(self) -> dict:
        return {
            "matrix": [[qstr(v) for v in row] for row in self.matrix],
            "offset": point_json(self.offset),
        }

    @classmethod
    def from_json(cls, data: dict) -> AffineMap2:
        return cls(
            tuple(tuple(Q(v) for v in row) for row in data["matrix"]),
            point_from_json(data["offset"]),
        )


# ---------------------------------------------------------------------------
# V-polygons


@dataclass(frozen=True)
class VPolygon:
    vertices: tuple[Point, ...]
    dir_in: Point
    dir_out: Point

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(pt(*p) for p in self.vertices))
        object.__setattr__(self, "dir_in", pt(*self.dir_in))
        object.__setattr__(self, "dir_out", pt(*self.dir_out))

    @classmethod
    def halfplane(cls, base: Sequence, direction: Sequence) -> VPolygon:
        """Closed half-plane to the left of the line through ``base`` along ``direction``."""
        d = pt(*direction)
        return cls((pt(*base),), (-d[0], -d[1]), d)

    @property
    def is_halfplane(self) -> bool:
        v, w = self.dir_in, self.dir_out
        return len(self.vertices) == 1 and cross(v, w) == 0 and v[0] * w[0] + v[1] * w[1] < 0

    @property
    def n_edges(self) -> int:
        return 1 if self.is_halfplane else len(self.vertices) + 1

    @property
    def corners(self) -> tuple[Point, ...]:
        """Genuine vertices (empty for a half-plane)."""
        return () if self.is_halfplane else self.vertices

    def travel_directions(self) -> list[Point]:
        """Boundary walking directions: ``-v``, the bounded edges, ``w``."""
        v, w = self.dir_in, self.dir_out
        if self.is_halfplane:
            return [w]
        segs = [sub(b, a) for a, b in zip(self.vertices, self.vertices[1:])]
        return [(-v[0], -v[1])] + segs + [w]

    def edges(self) -> list[tuple[Point, Point]]:
        """``(point on edge, walking direction)`` for each edge, in boundary order."""
        if self.is_halfplane:
            return [(self.vertices[0], self.dir_out)]
        dirs = self.travel_directions()
        anchors = [self.vertices[0]] + list(self.vertices[:-1]) + [self.vertices[-1]]
        return list(zip(anchors, dirs))

    def functionals(self) -> list[LineFunctional]:
        return [LineFunctional.through(p, d) for p, d in self.edges()]

    def transformed(self, tau: AffineMap2) -> VPolygon:
        verts = tuple(tau(p) for p in self.vertices)
        out = VPolygon(verts, tau.linear(self.dir_in), tau.linear(self.dir_out))
        if tau.det < 0 and not out.is_halfplane:
            out = out.reversed()
        elif tau.det < 0:
            out = VPolygon.halfplane(verts[0], (-out.dir_out[0], -out.dir_out[1]))
        return out

    def reversed(self) -> VPolygon:
        return VPolygon(tuple(reversed(self.vertices)), self.dir_out, self.dir_in)

    def drop_last_vertex(self) -> VPolygon:
        """``[v, p_1, ..., p_{n-2}, w]``: one edge less, ``w`` now leaves ``p_{n-2}``."""
        return VPolygon(self.vertices[:-1], self.dir_in, self.dir_out)

    def contains(self, p: Sequence) -> bool:
        return all(f(p) >= 0 for f in self.functionals())

    def x_projection(self) -> tuple[mpq | float, mpq | float]:
        """Closed projection interval onto the x-axis (bounds may be infinite)."""
        xs = [p[0] for p in self.vertices]
        if self.is_halfplane:
            d = self.dir_out
            if d[0] != 0:
                return -math.inf, math.inf
            # vertical boundary: the region is left of d
            return (-math.inf, xs[0]) if d[1] > 0 else (xs[0], math.inf)
        lo = min(xs) if self.dir_in[0] >= 0 and self.dir_out[0] >= 0 else -math.inf
        hi = max(xs) if self.dir_in[0] <= 0 and self.dir_out[0] <= 0 else math.inf
        return lo, hi

    def to_json(self) -> dict:
        return {
            "vertices": [point_json(p) for p in self.vertices],
            "dir_in": point_json(self.dir_in),
            "dir_out": point_json(self.dir_out),
        }

    @classmethod
    def from_json(cls, data: dict) -> VPolygon:
        try:
            return cls(
                tuple(point_from_json(p) for p in data["vertices"]),
                point_from_json(data["dir_in"]),
                point_from_json(data["dir_out"]),
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise PolygonError("malformed_polygon", str(exc)) from exc


def validate(p: VPolygon) -> VPolygon:
    """Check convexity and non-parallel unbounded edges; return the polygon oriented
    counterclockwise (region on the left of the boundary walk)."""
    v, w = p.dir_in, p.dir_out
    if not p.vertices:
        raise PolygonError("no_vertices", "a V-polygon needs at least one vertex or base point")
    if v == (0, 0) or w == (0, 0):
        raise PolygonError("zero_direction", "unbounded edge directions must be nonzero")
    if p.is_halfplane:
        return p
    if cross(v, w) == 0:
        raise PolygonError(
            "parallel_unbounded_edges",
            "unbounded edges are parallel (excluded by theorem hypothesis)",
        )
    for a, b in zip(p.vertices, p.vertices[1:]):
        if a == b:
            raise PolygonError("repeated_vertex", f"vertex {point_json(a)} repeated")
    dirs = p.travel_directions()
    turns = [cross(a, b) for a, b in zip(dirs, dirs[1:])]
    if any(t == 0 for t in turns):
        raise PolygonError("collinear_vertices", "consecutive edges are collinear")
    if all(t < 0 for t in turns):
        p = p.reversed()
        dirs = p.travel_directions()
    elif not all(t > 0 for t in turns):
        raise PolygonError("non_convex", "boundary turns both ways (reflex vertex)")
    if any(cross(dirs[0], d) <= 0 for d in dirs[1:]):
        raise PolygonError("non_convex", "boundary winds through more than a half turn")
    return p


# ---------------------------------------------------------------------------
# polygonal sets with deleted faces, and unions of them


@dataclass(frozen=True)
class PolygonalSet:
    """``{l_i >= 0 (or > 0 if strict)} minus excluded_points``.

    When built from a polygon, ``strict[i]`` means edge ``i`` (closed, with
    its endpoints) is deleted, and ``excluded_points`` are deleted vertices.
    """

    functionals: tuple[LineFunctional, ...]
    strict: tuple[bool, ...]
    excluded_points: tuple[Point, ...] = ()
    polygon: VPolygon | None = None
    label: str = ""

    def __post_init__(self):
        if len(self.functionals) != len(self.strict):
            raise ValueError("one strictness flag per functional")

    @classmethod
    def from_polygon(
        cls,
        polygon: VPolygon,
        edge_included: Sequence[bool] | None = None,
        vertex_included: Sequence[bool] | None = None,
        label: str = "",
    ) -> PolygonalSet:
        fs = tuple(polygon.functionals())
        edge_included = tuple(edge_included) if edge_included is not None else (True,) * len(fs)
        corners = polygon.corners
        vertex_included = (
            tuple(vertex_included) if vertex_included is not None else (True,) * len(corners)
        )
        if len(edge_included) != len(fs) or len(vertex_included) != len(corners):
            raise ValueError("face flag counts do not match the polygon")
        excluded = tuple(p for p, keep in zip(corners, vertex_included) if not keep)
        return cls(fs, tuple(not e for e in edge_included), excluded, polygon, label)

    @classmethod
    def interior(cls, polygon: VPolygon, label: str = "") -> PolygonalSet:
        n = polygon.n_edges
        return cls.from_polygon(polygon, (False,) * n, (False,) * len(polygon.corners), label)

    @property
    def edge_included(self) -> tuple[bool, ...]:
        return tuple(not s for s in self.strict)

    @property
    def vertex_included(self) -> tuple[bool, ...]:
        if self.polygon is None:
            return ()
        return tuple(p not in self.excluded_points for p in self.polygon.corners)

    def contains(self, p: Sequence) -> bool:
        for f, s in zip(self.functionals, self.strict):
            sg = f.sign(p)
            if sg < 0 or (s and sg == 0):
                return False
        return not any(p[0] == e[0] and p[1] == e[1] for e in self.excluded_points)

    __contains__ = contains

    def contains_float(self, x, y, tol: float = 0.0):
        """Vectorized float membership (pre-filter only; ignores deleted points)."""
        import numpy as np

        ok = np.ones(np.shape(x), dtype=bool)
        for f, s in zip(self.functionals, self.strict):
            val = f.eval_float(x, y)
            ok &= (val > tol) if s else (val >= -tol)
        return ok

    def transformed(self, tau: AffineMap2) -> PolygonalSet:
        return PolygonalSet(
            tuple(f.pushforward(tau) for f in self.functionals),
            self.strict,
            tuple(tau(p) for p in self.excluded_points),
            self.polygon.transformed(tau) if self.polygon is not None else None,
            self.label,
        )

    def to_json(self) -> dict:
        out = {
            "functionals": [f.to_json() for f in self.functionals],
            "strict": list(self.strict),
            "excluded_points": [point_json(p) for p in self.excluded_points],
        }
        if self.polygon is not None:
            out["polygon"] = self.polygon.to_json()
        if self.label:
            out["label"] = self.label
        return out

    @classmethod
    def from_json(cls, data: dict) -> PolygonalSet:
        poly = data.get("polygon")
        return cls(
            tuple(LineFunctional.from_json(f) for f in data["functionals"]),
            tuple(bool(s) for s in data["strict"]),
            tuple(point_from_json(p) for p in data.get("excluded_points", [])),
            VPolygon.from_json(poly) if poly is not None else None,
            data.get("label", ""),
        )


def vertical_strip(lo, hi, lo_closed: bool = False, hi_closed: bool = False, label: str = "") -> PolygonalSet:
    """``<lo, hi> x [0, +inf)``; ``lo``/``hi`` may be infinite."""
    fs, strict = [], []
    if lo != -math.inf:
        fs.append(LineFunctional(1, 0, -Q(lo)))
        strict.append(not lo_closed)
    if hi != math.inf:
        fs.append(LineFunctional(-1, 0, Q(hi)))
        strict.append(not hi_closed)
    fs.append(LineFunctional(0, 1, 0))
    strict.append(False)
    return PolygonalSet(tuple(fs), tuple(strict), label=label)


@dataclass(frozen=True)
class Region:
    """Union of polygonal sets, read off the coordinates ``coords`` of a point."""

    parts: tuple[PolygonalSet, ...]
    coords: tuple[int, int] = (0, 1)
    label: str = ""

    @classmethod
    def of(cls, *parts: PolygonalSet, label: str = "", coords=(0, 1)) -> Region:
        return cls(tuple(parts), tuple(coords), label)

    def contains(self, p: Sequence) -> bool:
        q = (p[self.coords[0]], p[self.coords[1]])
        return any(part.contains(q) for part in self.parts)

    __contains__ = contains

    def contains_float(self, x, y, tol: float = 0.0):
        import numpy as np

        ok = np.zeros(np.shape(x), dtype=bool)
        for part in self.parts:
            ok |= part.contains_float(x, y, tol)
        return ok

    def transformed(self, tau: AffineMap2) -> Region:
        return Region(tuple(p.transformed(tau) for p in self.parts), self.coords, self.label)

    def to_json(self) -> dict:
        out = {"parts": [p.to_json() for p in self.parts], "coords": list(self.coords)}
        if self.label:
            out["label"] = self.label
        return out

    @classmethod
    def from_json(cls, data: dict) -> Region:
        return cls(
            tuple(PolygonalSet.from_json(p) for p in data["parts"]),
            tuple(data.get("coords", (0, 1))),
            data.get("label", ""),
        )


# ---------------------------------------------------------------------------
# curtains


def in_upper_halfplane(p: VPolygon) -> bool:
    return (
        all(q[1] >= 0 for q in p.vertices)
        and p.dir_in[1] >= 0
        and p.dir_out[1] >= 0
    )


def is_curtain_certified(s: PolygonalSet | VPolygon) -> bool:
    """Sufficient curtain test: inside ``{y >= 0}`` with ``alpha_1 <= 0 <= alpha_2``.

    Holds for any subset obtained by deleting faces, so only the underlying
    polygon is inspected.
    """
    poly = s.polygon if isinstance(s, PolygonalSet) else s
    if poly is None:
        return False
    return in_upper_halfplane(poly) and poly.dir_in[0] <= 0 <= poly.dir_out[0]


# ---------------------------------------------------------------------------
# placements used by the inductive construction


def normalize_step2(p: VPolygon) -> tuple[AffineMap2, VPolygon]:
    """Place a polygon with at least three edges so that ``p_{n-2}`` is the
    origin, ``p_{n-1} = (1, 0)``, every boundary walking direction has
    positive x-component, and the region lies in ``{y >= 0}``.

    The second frame vector ``v + w`` lies strictly outside the cone of
    walking directions, which is what makes all their x-components positive.
    """
    p = validate(p)
    if p.n_edges <= 2:
        raise ValueError("normalize_step2 needs a polygon with at least three edges")
    base, nxt = p.vertices[-2], p.vertices[-1]
    e = sub(nxt, base)
    m = add(p.dir_in, p.dir_out)
    tau = AffineMap2.from_frame(base, e, m)
    out = p.transformed(tau)
    check_step2(out)
    return tau, out


def check_step2(p: VPolygon) -> None:
    xs = [q[0] for q in p.vertices]
    ok = (
        all(a < b for a, b in zip(xs, xs[1:]))
        and p.vertices[-2] == (0, 0)
        and p.vertices[-1][1] == 0
        and p.vertices[-1][0] > 0
        and p.dir_in[0] < 0 < p.dir_out[0]
        and p.dir_in[1] > 0
        and p.dir_out[1] > 0
        and in_upper_halfplane(p)
        and not any(f.is_vertical for f in p.functionals())
    )
    if not ok:
        raise AssertionError(f"normalized placement postcondition failed for {p}")


def compute_apex(p: VPolygon) -> Point:
    """Point of the ray ``p_{n-2} + s*w`` above ``p_{n-1}``."""
    a = p.vertices[-1][0]
    alpha, beta = p.dir_out
    if alpha == 0:
        raise ValueError("apex undefined for a vertical outgoing direction")
    base = p.vertices[-2]
    return (a, base[1] + (a - base[0]) / alpha * beta)


def relocate_tau1(p: VPolygon, q: Point) -> tuple[AffineMap2, VPolygon, Point]:
    """Move ``p_{n-1}`` to the origin with ``w`` along the positive x-axis so
    the apex ``q`` gets two positive coordinates and ``v`` points left.

    The second frame vector ``v + (0, beta_1)`` sits strictly between the
    upward vertical and ``v``, so it is parallel to no edge of the polygon
    truncated by the ray from ``p_{n-1}`` through ``q``.
    """
    corner = p.vertices[-1]
    v = p.dir_in
    e2 = (v[0], 2 * v[1])
    tau = AffineMap2.from_frame(corner, p.dir_out, e2)
    out = p.transformed(tau)
    q1 = tau(q)
    ok = (
        out.vertices[-1] == (0, 0)
        and out.dir_out[1] == 0
        and out.dir_out[0] > 0
        and q1[0] > 0
        and q1[1] > 0
        and out.dir_in[0] < 0
        and in_upper_halfplane(out)
    )
    if not ok:
        raise AssertionError(f"tau_1 postcondition failed for {p}")
    return tau, out, q1


def relocate_tau2(p: VPolygon) -> tuple[AffineMap2, VPolygon]:
    """Send ``p'_{n-1}`` to the origin, the edge towards ``p'_{n-2}`` onto the
    negative x-axis (``p''_{n-2} = (-1, 0)``) and ``w'`` onto the positive
    y-axis, so the polygon sits in ``{x <= 0, y >= 0}``."""
    corner, prev = p.vertices[-1], p.vertices[-2]
    back = sub(prev, corner)
    # frame(e1=-back, e2=w) sends back -> (-1, 0) and w -> (0, 1)
    tau = AffineMap2.from_frame(corner, (-back[0], -back[1]), p.dir_out)
    out = p.transformed(tau)
    fs = out.functionals()
    ok = (
        out.vertices[-1] == (0, 0)
        and out.vertices[-2] == (-1, 0)
        and out.dir_out[0] == 0
        and out.dir_out[1] > 0
        and all(q[0] <= 0 and q[1] >= 0 for q in out.vertices)
        and out.dir_in[0] <= 0
        and out.dir_in[1] >= 0
        and fs[-2] == LineFunctional(0, 1, 0)
        and fs[-1] == LineFunctional(-1, 0, 0)
        and [f.is_vertical for f in fs].count(True) == 1
    )
    if not ok:
        raise AssertionError(f"tau_2 postcondition failed for {p}")
    return tau, out


def halfplane_placement(p: VPolygon) -> AffineMap2:
    """Affine map taking ``{y >= 0}`` onto the half-plane ``p``."""
    base, d = p.vertices[0], p.dir_out
    normal = (-d[1], d[0])
    return AffineMap2(((d[0], normal[0]), (d[1], normal[1])), base)


def angle_placement(p: VPolygon) -> AffineMap2:
    """Affine map taking the closed first quadrant onto the angle ``p``."""
    (vertex,) = p.vertices
    w, v = p.dir_out, p.dir_in
    return AffineMap2(((w[0], v[0]), (w[1], v[1])), vertex)


def axes_placement(p: VPolygon) -> AffineMap2:
    """Affine map putting the unbounded edge lines of ``p`` on ``x = 0`` and
    ``y = 0`` with the polygon in the first quadrant."""
    lin = AffineMap2.from_frame((0, 0), p.dir_out, p.dir_in)
    first, last = lin(p.vertices[0]), lin(p.vertices[-1])
    return AffineMap2(lin.matrix, (-first[0], -last[1]))


def bounding_box(points: Iterable[Sequence]) -> tuple[mpq, mpq, mpq, mpq]:
    pts = list(points)
    xs = [q[0] for q in pts]
    ys = [q[1] for q in pts]
    return min(xs), max(xs), min(ys), max(ys)
