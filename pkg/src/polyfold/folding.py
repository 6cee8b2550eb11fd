"""Folding maps ``(x, y) -> (x, y * (1 + psi(x) * phi(x, y))**2)``.

Given a curtain ``S`` (a subset of the upper half-plane whose vertical fibers
are rays) with defining family ``G`` and an interval ``]c, d[``, the fold
fixes every fiber of ``S`` outside the interval and stretches every fiber
inside it onto the full ray ``[0, +inf)``.  ``phi`` is the product of the
members of ``G`` not divisible by any ``x - r`` with ``r`` in ``]c, d[``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from . import univariate as uv
from .geometry import PolygonalSet, Region, is_curtain_certified, vertical_strip
from .poly import Q, SparsePoly, horner, qstr, x as X, y as Y
from .stages import Stage

INF = math.inf

BRACKET_WIDTH = mpq(1, 2**40)
FIBER_SAMPLES = 1000
FIBER_SPAN_LOG2 = (-30, 10)


class FoldError(ValueError):
    """A fold cannot be built on the given set (the diagnostic says why)."""


class FoldContractError(AssertionError):
    """A fiber breaks the hypotheses the fold relies on."""


def _bound(v):
    if v in (INF, -INF):
        return v
    return Q(v)


def bound_json(v) -> str:
    if v == INF:
        return "+inf"
    if v == -INF:
        return "-inf"
    return qstr(v)


def bound_from_json(s: str):
    if s in ("+inf", "inf"):
        return INF
    if s == "-inf":
        return -INF
    return Q(s)


def in_open_interval(r, c, d) -> bool:
    return c < r < d


def build_psi(c, d) -> SparsePoly:
    """``(x-c)(x-d)``, ``x-d`` (``c = -inf``) or ``c-x`` (``d = +inf``)."""
    c, d = _bound(c), _bound(d)
    if not c < d:
        raise ValueError(f"need c < d, got c={c}, d={d}")
    x = X()
    if c == -INF and d == INF:
        raise ValueError("at least one of c, d must be finite")
    if c == -INF:
        return x - d
    if d == INF:
        return c - x
    return (x - c) * (x - d)


def _x_coefficients(g: SparsePoly) -> list[list[mpq]]:
    """Coefficients of ``g`` as a polynomial in ``y``; each is a dense poly in ``x``."""
    by_j: dict[int, dict[int, mpq]] = {}
    for (i, j), c in g.items():
        by_j.setdefault(j, {})[i] = c
    out = []
    for j in sorted(by_j):
        col = by_j[j]
        out.append(uv.strip([col.get(i, 0) for i in range(max(col) + 1)]))
    return out


def divisible_by_vertical_in(g: SparsePoly, c, d) -> bool:
    """Whether ``x - r`` divides ``g`` for some real ``r`` in ``]c, d[``."""
    if g.is_zero():
        return True
    if g.degree() == 1 and g.coeff((0, 1)) == 0:
        a, e = g.coeff((1, 0)), g.coeff((0, 0))
        return in_open_interval(-e / a, c, d)
    common: list[mpq] = []
    for col in _x_coefficients(g):
        common = uv.gcd(common, col) if common else uv.monic(col)
    if len(common) <= 1:
        return False
    lo = c if c != -INF else -uv.INF
    hi = d if d != INF else uv.INF
    return uv.count_roots_open(common, lo, hi) > 0


def select_family_prime(family: Sequence[SparsePoly], c, d) -> list[SparsePoly]:
    return [g for g in family if not divisible_by_vertical_in(g, _bound(c), _bound(d))]


@dataclass(frozen=True)
class FoldSpec:
    family: tuple[SparsePoly, ...]
    family_prime: tuple[SparsePoly, ...]
    c: object
    d: object
    psi: SparsePoly
    phi: SparsePoly
    h: SparsePoly
    default_psi: bool = True

    @classmethod
    def build(cls, family: Sequence[SparsePoly], c, d, psi: SparsePoly | None = None) -> FoldSpec:
        """Assemble the fold data; an explicit ``psi`` overrides the default sign choice."""
        c, d = _bound(c), _bound(d)
        family = tuple(family)
        prime = tuple(select_family_prime(family, c, d))
        default = build_psi(c, d)
        psi = default if psi is None else psi
        phi = SparsePoly.const(1)
        for g in prime:
            phi = phi * g
        h = Y() * (1 + psi * phi) ** 2
        return cls(family, prime, c, d, psi, phi, h, psi == default)

    def psi_at(self, r) -> mpq:
        return self.psi.eval((Q(r), 0))

    def gamma_slice(self, r) -> list[mpq]:
        """Dense coefficients in ``t`` of ``1 + psi(r) * phi(r, t)``."""
        r = Q(r)
        coeffs = uv.strip(self.phi.slice_at_x(r).coeffs)
        k = self.psi_at(r)
        out = [k * a for a in coeffs] or [mpq(0)]
        out[0] += 1
        return uv.strip(out)

    def h_slice(self, r) -> list[mpq]:
        return uv.strip(self.h.slice_at_x(r).coeffs)

    def eval(self, p: Sequence[mpq]) -> tuple[mpq, mpq]:
        px, py = p
        if not py:
            return (px, py)
        phi = mpq(1)
        for g in self.family_prime:
            phi *= _eval_fast(g, px, py)
        inner = 1 + self.psi.eval((px, 0)) * phi
        return (px, py * inner * inner)

    def eval_float(self, x, y):
        phi = 1.0
        for g in self.family_prime:
            phi = phi * g.eval_float(x, y)
        inner = 1.0 + self.psi.eval_float(x, 0.0) * phi
        return (x, y * inner * inner)

    def to_json(self) -> dict:
        return {
            "family": [g.to_json() for g in self.family],
            "family_prime": [g.to_json() for g in self.family_prime],
            "c": bound_json(self.c),
            "d": bound_json(self.d),
            "psi": self.psi.to_json(),
            "phi": self.phi.to_json(),
            "h": self.h.to_json(),
            "default_psi": self.default_psi,
        }

    @classmethod
    def from_json(cls, data: dict) -> FoldSpec:
        return cls(
            tuple(SparsePoly.from_json(g, 2) for g in data["family"]),
            tuple(SparsePoly.from_json(g, 2) for g in data["family_prime"]),
            bound_from_json(data["c"]),
            bound_from_json(data["d"]),
            SparsePoly.from_json(data["psi"], 2),
            SparsePoly.from_json(data["phi"], 2),
            SparsePoly.from_json(data["h"], 2),
            bool(data.get("default_psi", True)),
        )


def _eval_fast(g: SparsePoly, px: mpq, py: mpq) -> mpq:
    if g.degree() <= 1:
        return g.coeff((1, 0)) * px + g.coeff((0, 1)) * py + g.coeff((0, 0))
    return g.eval((px, py))


@dataclass(frozen=True)
class FoldStage(Stage):
    """A fold as a map stage; ``curtain`` is the set the fold was built on."""

    spec: FoldSpec
    label: str = ""
    curtain: PolygonalSet | None = None
    kind = "fold"

    def eval(self, p):
        return self.spec.eval(p)

    def eval_float(self, x, y):
        return self.spec.eval_float(x, y)

    def degree(self) -> int:
        return self.spec.h.degree()

    def degree_bounds(self, bounds):
        h = self.spec.h
        return [bounds[0], max(sum(e * b for e, b in zip(exp, bounds)) for exp, _ in h.items())]

    def expand(self, polys):
        u, v = polys
        return (u, self.spec.h.compose(u, v))

    def to_json(self) -> dict:
        out = {"kind": "fold", "label": self.label, "spec": self.spec.to_json()}
        if self.curtain is not None:
            out["curtain"] = self.curtain.to_json()
        return out


# ---------------------------------------------------------------------------
# fibers of polygonal curtains


def fiber_origin(s: PolygonalSet, r) -> tuple[mpq, bool] | None:
    """``(s_r, closed)`` for the fiber ``{r} x <s_r, +inf)`` of ``s``, or ``None``
    when ``r`` is not in the projection of ``s``."""
    r = Q(r)
    lower = None
    closed = True
    for f, strict in zip(s.functionals, s.strict):
        if f.b == 0:
            val = f.a * r + f.c
            if val < 0 or (strict and val == 0):
                return None
            continue
        if f.b < 0:
            raise FoldError("functional bounds a fiber from above; not a curtain")
        bound = -(f.a * r + f.c) / f.b
        if lower is None or bound > lower:
            lower, closed = bound, not strict
        elif bound == lower and strict:
            closed = False
    if lower is None:
        raise FoldError("fiber is a full vertical line")
    for e in s.excluded_points:
        if e[0] == r:
            if e[1] == lower:
                closed = False
            elif e[1] > lower:
                raise FoldError("deleted point inside a fiber; fiber is not a ray")
    return lower, closed


def projection(s: PolygonalSet) -> tuple[object, bool, object, bool]:
    """``(lo, lo_closed, hi, hi_closed)`` of the x-projection of a polygon-backed set."""
    if s.polygon is None:
        raise FoldError("projection needs a polygon-backed set")
    lo, hi = s.polygon.x_projection()
    lo_closed = lo != -INF and fiber_origin(s, lo) is not None
    hi_closed = hi != INF and fiber_origin(s, hi) is not None
    return lo, lo_closed, hi, hi_closed


def declared_image(s: PolygonalSet, c, d) -> Region:
    """``S  u  ((]c, d[ n pi(S)) x [0, +inf))``."""
    lo, lo_closed, hi, hi_closed = projection(s)
    if c > lo or (c == lo and lo != -INF):
        lo, lo_closed = c, False
    if d < hi or (d == hi and hi != INF):
        hi, hi_closed = d, False
    parts = [s]
    if lo < hi:
        parts.append(vertical_strip(lo, hi, lo_closed, hi_closed, label="folded strip"))
    return Region(tuple(parts), label="fold image")


def check_fold_preconditions(s: PolygonalSet, spec: FoldSpec) -> None:
    if not is_curtain_certified(s):
        raise FoldError("set is not a certified curtain")
    prime = set(spec.family_prime)
    for f in s.functionals:
        if f.b < 0:
            raise FoldError(f"functional {f} bounds fibers from above")
        if f.b > 0 and f.as_poly() not in prime:
            raise FoldError(f"fiber origins on {f} have no vanishing member of the reduced family")
    if not any(f.b > 0 for f in s.functionals):
        raise FoldError("fibers are full vertical lines")


def build_fold_map(s: PolygonalSet, c, d, psi: SparsePoly | None = None, label: str = "") -> tuple[FoldSpec, FoldStage]:
    """Fold on the curtain ``s`` over ``]c, d[`` with the defining family of ``s``."""
    family = [f.as_poly() for f in s.functionals]
    spec = FoldSpec.build(family, c, d, psi)
    check_fold_preconditions(s, spec)
    return spec, FoldStage(spec, label, s)


# ---------------------------------------------------------------------------
# per-fiber certificates


@dataclass
class FiberCertificate:
    r: mpq
    case: str
    s_r: mpq
    closed: bool
    witness: tuple[mpq, mpq] | None = None
    failures: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "r": qstr(self.r),
            "case": self.case,
            "s_r": qstr(self.s_r),
            "closed": self.closed,
            "witness": [qstr(v) for v in self.witness] if self.witness else None,
            "valid": self.valid,
            "failures": list(self.failures),
        }


def fiber_grid(s_r: mpq, closed: bool, n: int = FIBER_SAMPLES) -> list[mpq]:
    """Exact points ``s_r + 2**e`` with ``e`` evenly spaced over ``FIBER_SPAN_LOG2``."""
    lo, hi = FIBER_SPAN_LOG2
    offsets = [mpq(2.0 ** (lo + (hi - lo) * k / (n - 1))) for k in range(n)]
    return ([s_r] if closed else []) + [s_r + o for o in offsets]


def certify_fiber(spec: FoldSpec, s: PolygonalSet, r, grid_size: int = FIBER_SAMPLES) -> FiberCertificate:
    r = Q(r)
    origin = fiber_origin(s, r)
    if origin is None:
        raise FoldError(f"r = {r} is not in the projection of the set")
    s_r, closed = origin
    h_r = spec.h_slice(r)
    gamma = spec.gamma_slice(r)
    grid = fiber_grid(s_r, closed, grid_size)
    cert = FiberCertificate(r, "", s_r, closed)
    fail = cert.failures.append

    if not in_open_interval(r, spec.c, spec.d):
        cert.case = "case1"
        if spec.psi_at(r) < 0:
            fail("psi(r) < 0 outside ]c,d[")
        if horner(h_r, s_r) != s_r:
            fail("h_r(s_r) != s_r")
        if uv.degree(h_r) % 2 == 0 or h_r[-1] <= 0:
            fail("leading term of h_r is not odd with positive coefficient")
        bad = next((t for t in grid if horner(h_r, t) < t), None)
        if bad is not None:
            fail(f"h_r(t) < t at t = {bad}")
        return cert

    cert.case = "case2"
    if uv.degree(gamma) < 1:
        raise FoldContractError(
            f"gamma_r is constant at r = {r}: some member vanishes on the fiber or the fiber is a full line"
        )
    if horner(gamma, s_r) != 1:
        fail("gamma_r(s_r) != 1")
    if gamma[-1] >= 0:
        fail("leading coefficient of gamma_r is not negative")
        return cert
    top = max(s_r, mpq(0)) + 1
    while horner(gamma, top) >= 0:
        top *= 2
    lo, hi = uv.bisect_sign_change(gamma, s_r, top, BRACKET_WIDTH)
    while lo == s_r and lo != hi:
        # the root is strictly above s_r; keep halving until the bracket leaves it
        lo, hi = uv.bisect_sign_change(gamma, lo, hi, (hi - lo) / 2)
    cert.witness = (lo, hi)
    g_lo, g_hi = horner(gamma, lo), horner(gamma, hi)
    if lo == hi:
        if g_lo != 0:
            fail("degenerate bracket is not a root")
    elif uv.sign(g_lo) == uv.sign(g_hi) or hi - lo > BRACKET_WIDTH:
        fail("bracket does not certify a sign change")
    if not lo > s_r:
        fail("bracket not inside ]s_r, +inf[")
    if any(horner(h_r, t) < 0 for t in grid):
        fail("h_r negative on the fiber")
    return cert
