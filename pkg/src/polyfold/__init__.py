"""Polynomial maps whose images are unbounded convex polygons.

Exact rational polynomials, V-polygon geometry, folding maps, the inductive
pipeline building a staged map onto a given polygon (or its interior), and
sampling oracles that check containment and coverage.
"""

from .geometry import AffineMap2, LineFunctional, PolygonError, PolygonalSet, Region, VPolygon, validate
from .pipeline import (
    CATALOG,
    build_halfplane_map,
    build_interior_map,
    build_quadrant_map,
    build_v_polygon_map,
    expand,
    open_halfplane_map,
)
from .poly import Q, SparsePoly
from .stages import ExpansionRefused, StagedMap

__all__ = [
    "AffineMap2",
    "CATALOG",
    "ExpansionRefused",
    "LineFunctional",
    "PolygonError",
    "PolygonalSet",
    "Q",
    "Region",
    "SparsePoly",
    "StagedMap",
    "VPolygon",
    "build_halfplane_map",
    "build_interior_map",
    "build_quadrant_map",
    "build_v_polygon_map",
    "expand",
    "open_halfplane_map",
    "validate",
]
