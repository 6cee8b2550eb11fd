"""Sampling engines and oracles for staged maps.

Containment verdicts are always exact (rational arithmetic).  Coverage uses a
double-precision fast path to mark grid cells, then retries missed cells with
preimage-guided samples whose images are confirmed by exact or
multiprecision forward evaluation.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from gmpy2 import mpq, mpz

from . import univariate as uv
from .folding import (
    FiberCertificate,
    FoldStage,
    certify_fiber,
    fiber_origin,
    projection,
)
from .geometry import (
    LineFunctional,
    PolygonError,
    PolygonalSet,
    Region,
    VPolygon,
    is_curtain_certified,
    validate,
)
from .poly import Q, SparsePoly, qstr
from .stages import AffineStage, LiftStage, PolyStage, Stage, StagedMap

SCHEMES = ("grid", "uniform", "heavy_tailed")
# tan(u * pi/2) with u capped just below 1 keeps radii finite (about 6e5 at most)
_TAN_CAP = 0.999999


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic recipe for sample points.

    ``scale`` sets the radius unit of the heavy-tailed scheme and the half
    width of the grid scheme.
    """

    seed: int = 0
    count: int = 1000
    scheme: str = "uniform"
    denominator_bound: int = 1000
    scale: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.count < 0 or self.denominator_bound < 1:
            raise ValueError("count must be >= 0 and denominator_bound >= 1")

    def generator(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64([self.seed & (2**64 - 1), stream]))

    def with_count(self, count: int) -> SamplePlan:
        return SamplePlan(self.seed, count, self.scheme, self.denominator_bound, self.scale)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "scheme": self.scheme,
            "denominator_bound": self.denominator_bound,
            "scale": self.scale,
        }

    # -- float samples ------------------------------------------------------
    def float_points(self, arity: int, stream: int = 0) -> tuple[np.ndarray, ...]:
        rng = self.generator(stream)
        n = self.count
        if self.scheme == "grid":
            side = max(1, math.ceil(n ** (1 / arity)))
            axis = np.linspace(-self.scale, self.scale, side)
            mesh = np.meshgrid(*([axis] * arity), indexing="ij")
            return tuple(m.ravel()[:n] for m in mesh)
        if self.scheme == "uniform":
            return tuple(rng.uniform(-self.scale, self.scale, n) for _ in range(arity))
        direction = rng.standard_normal((arity, n))
        direction /= np.linalg.norm(direction, axis=0)
        radius = self.scale * np.tan(rng.uniform(0, 1, n) * (np.pi / 2) * _TAN_CAP)
        return tuple(direction * radius)

    # -- rational samples ---------------------------------------------------
    def rational_points(self, arity: int, stream: int = 0) -> list[tuple[mpq, ...]]:
        """Rational points with denominators at most ``denominator_bound``.

        ``uniform`` draws numerator and denominator independently, both
        bounded; the other schemes round their float points.
        """
        d = self.denominator_bound
        if self.scheme == "uniform":
            rng = self.generator(stream)
            nums = rng.integers(-d, d, size=(self.count, arity), endpoint=True)
            dens = rng.integers(1, d, size=(self.count, arity), endpoint=True)
            return [tuple(mpq(int(a), int(b)) for a, b in zip(nr, dr)) for nr, dr in zip(nums, dens)]
        coords = self.float_points(arity, stream)
        return [tuple(rationalize(v, d) for v in row) for row in zip(*coords)]


def rationalize(v: float, denominator_bound: int) -> mpq:
    f = Fraction(float(v)).limit_denominator(denominator_bound)
    return mpq(f.numerator, f.denominator)


def round_dyadic(v: mpq, bits: int) -> mpq:
    """Nearest rational ``m / 2^k`` keeping about ``bits`` significant bits."""
    if not v:
        return mpq(0)
    e = v.numerator.bit_length() - v.denominator.bit_length()
    shift = bits - e
    if shift <= 0:
        unit = mpz(2) ** (-shift)
        return mpq(round(v / unit) * unit)
    scale = mpz(2) ** shift
    return mpq(round(v * scale), scale)


# ---------------------------------------------------------------------------
# sampling inside polygonal sets


def _line_point(f: LineFunctional) -> tuple[mpq, mpq]:
    n2 = f.a * f.a + f.b * f.b
    return (-f.c * f.a / n2, -f.c * f.b / n2)


def closure_vertices(s: PolygonalSet) -> list[tuple[mpq, mpq]]:
    """Vertices of the closure of ``s`` (pairwise line intersections inside)."""
    closed = PolygonalSet(s.functionals, (False,) * len(s.functionals))
    out = []
    for f, g in itertools.combinations(s.functionals, 2):
        det = f.a * g.b - f.b * g.a
        if not det:
            continue
        p = ((f.b * g.c - g.b * f.c) / det, (g.a * f.c - f.a * g.c) / det)
        if closed.contains(p) and p not in out:
            out.append(p)
    return sorted(out)


def recession_rays(s: PolygonalSet) -> list[tuple[mpq, mpq]]:
    """Directions generating the recession cone of the closure of ``s``."""
    cands = []
    for f in s.functionals:
        cands += [(-f.b, f.a), (f.b, -f.a), (f.a, f.b)]
    out = []
    for d in cands:
        if all(f.a * d[0] + f.b * d[1] >= 0 for f in s.functionals) and d not in out:
            out.append(d)
    return out


def _edge_interval(s: PolygonalSet, i: int) -> tuple[tuple[mpq, mpq], tuple[mpq, mpq], object, object]:
    """Line ``i`` as ``base + u * direction`` with the range of ``u`` allowed by the others."""
    f = s.functionals[i]
    base = _line_point(f)
    direction = (-f.b, f.a)
    lo, hi = -math.inf, math.inf
    for j, g in enumerate(s.functionals):
        if j == i:
            continue
        k = g.a * direction[0] + g.b * direction[1]
        v = g(base)
        if k > 0:
            lo = max(lo, -v / k)
        elif k < 0:
            hi = min(hi, -v / k)
        elif v < 0:
            return base, direction, math.inf, -math.inf
    return base, direction, lo, hi


def _heavy_rational(rng: np.random.Generator, d: int) -> mpq:
    """Nonnegative rational with a heavy tail and small denominator."""
    u = rng.uniform(0, 1)
    return rationalize(math.tan(u * (math.pi / 2) * 0.999), d)


def sample_set(
    s: PolygonalSet,
    rng: np.random.Generator,
    count: int,
    denominator_bound: int = 1000,
    boundary_share: float = 0.2,
    max_tries: int = 50,
) -> list[tuple[mpq, mpq]]:
    """``count`` rational points of ``s`` (exactly checked), including boundary points.

    Interior points are convex combinations of closure vertices plus
    nonnegative multiples of recession rays; boundary points are taken on the
    lines of the defining functionals.  Points on deleted faces are rejected.
    """
    verts = closure_vertices(s)
    rays = recession_rays(s)
    anchors = verts or [_line_point(s.functionals[0])]
    edges = [_edge_interval(s, i) for i in range(len(s.functionals))]
    edges = [e for e in edges if e[2] <= e[3]]
    d = denominator_bound
    out: list[tuple[mpq, mpq]] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries * max(count, 1):
            raise RuntimeError(f"could not sample set {s.label or s.functionals}")
        if edges and rng.uniform() < boundary_share:
            base, direction, lo, hi = edges[int(rng.integers(len(edges)))]
            if lo == -math.inf and hi == math.inf:
                u = _heavy_rational(rng, d) * (1 if rng.uniform() < 0.5 else -1)
            elif lo == -math.inf:
                u = hi - _heavy_rational(rng, d)
            elif hi == math.inf:
                u = lo + _heavy_rational(rng, d)
            else:
                u = lo + (hi - lo) * mpq(int(rng.integers(0, d + 1)), d)
            p = (base[0] + u * direction[0], base[1] + u * direction[1])
        else:
            w = [int(k) for k in rng.integers(0, 8, len(anchors))]
            if not any(w):
                w[int(rng.integers(len(anchors)))] = 1
            tot = sum(w)
            px = sum(mpq(k, tot) * a[0] for k, a in zip(w, anchors))
            py = sum(mpq(k, tot) * a[1] for k, a in zip(w, anchors))
            for r in rays:
                if rng.uniform() < 0.7:
                    t = _heavy_rational(rng, d)
                    px += t * r[0]
                    py += t * r[1]
            p = (mpq(px), mpq(py))
        if s.contains(p):
            out.append(p)
    return out


def sample_region(region: Region, rng: np.random.Generator, count: int, denominator_bound: int = 1000):
    """Points of a region as planar pairs (read on ``region.coords``)."""
    parts = region.parts
    picks = rng.integers(len(parts), size=count)
    out = []
    for k, part in enumerate(parts):
        n = int(np.sum(picks == k))
        out += sample_set(part, rng, n, denominator_bound) if n else []
    order = rng.permutation(len(out))
    return [out[i] for i in order]


# ---------------------------------------------------------------------------
# containment


@dataclass
class Counterexample:
    point: tuple
    image: tuple
    stage: int | None
    expected: str

    def to_json(self) -> dict:
        return {
            "point": [qstr(v) for v in self.point],
            "image": [qstr(v) for v in self.image],
            "stage": self.stage,
            "expected": self.expected,
        }


@dataclass
class ContainmentResult:
    passed: bool
    mode: str
    checked: int
    counterexample: Counterexample | None = None

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "mode": self.mode,
            "checked": self.checked,
            "counterexample": self.counterexample.to_json() if self.counterexample else None,
        }


def check_containment(
    m: StagedMap,
    target: Region | None = None,
    plan: SamplePlan = SamplePlan(),
    mode: str = "chained",
    points: Sequence[Sequence] | None = None,
) -> ContainmentResult:
    """Exact containment of sampled images.

    ``chained`` evaluates the whole chain on domain samples and checks every
    intermediate image against its expected set (or only ``target`` when one
    is given); ``points`` replaces the plan's samples.  ``stagewise`` checks
    each stage on its own: samples are drawn
    from the set the previous stage is expected to produce, which keeps the
    rationals small for deep chains.
    """
    if mode not in ("chained", "stagewise"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "chained":
        if points is not None:
            pts = [tuple(Q(v) for v in p) for p in points]
        else:
            pts = plan.rational_points(m.domain_arity)
        for p in pts:
            if target is not None:
                img = m.eval(p)
                if not target.contains(img):
                    return ContainmentResult(False, mode, len(pts), Counterexample(p, img, None, target.label))
                continue
            cur = p
            for k, st in enumerate(m.stages):
                cur = tuple(st.eval(cur))
                exp = m.expected_after[k]
                if exp is not None and not exp.contains(cur):
                    return ContainmentResult(False, mode, len(pts), Counterexample(p, cur, k, exp.label))
        return ContainmentResult(True, mode, len(pts))

    checked = 0
    for k, st in enumerate(m.stages):
        exp = target if (target is not None and k == len(m) - 1) else m.expected_after[k]
        if exp is None:
            continue
        if isinstance(st, LiftStage):
            # the inner chain is checked on its own; the lift step is then
            # checked on points of the inner target shifted by t > 0
            inner = check_containment(st.inner, None, plan, "stagewise")
            checked += inner.checked
            if not inner.passed:
                inner.counterexample.stage = k
                return ContainmentResult(False, mode, checked, inner.counterexample)
            rng = plan.generator(stream=1000 + k)
            for a, b in sample_region(st.inner.target, rng, plan.count, plan.denominator_bound):
                t = _heavy_rational(rng, plan.denominator_bound) or mpq(1, plan.denominator_bound)
                img = (a + t * st.direction[0], b + t * st.direction[1])
                checked += 1
                if not exp.contains(img):
                    return ContainmentResult(False, mode, checked, Counterexample((a, b, t), img, k, exp.label))
            continue
        if k == 0:
            inputs = plan.rational_points(st.in_arity, stream=k)
        else:
            before = m.expected_after[k - 1]
            if before is None:
                raise ValueError(f"stage {k} has no expected input set")
            rng = plan.generator(stream=k)
            inputs = _region_inputs(before, st.in_arity, plan.count, rng, plan.denominator_bound)
        for p in inputs:
            img = tuple(st.eval(p))
            checked += 1
            if not exp.contains(img):
                return ContainmentResult(False, mode, checked, Counterexample(p, img, k, exp.label))
    return ContainmentResult(True, mode, checked)


def _region_inputs(region: Region, arity: int, count: int, rng, d: int) -> list[tuple]:
    planar = sample_region(region, rng, count, d)
    if arity == 2 and region.coords == (0, 1):
        return planar
    out = []
    for a, b in planar:
        p = [rationalize(rng.normal(0, 3), d) for _ in range(arity)]
        p[region.coords[0]], p[region.coords[1]] = a, b
        out.append(tuple(p))
    return out


# ---------------------------------------------------------------------------
# preimages


PREIMAGE_BITS = 96


def _real_roots(coeffs: Sequence[mpq], bits: int = PREIMAGE_BITS) -> list[mpq]:
    """Rational approximations of the real roots of a dense polynomial.

    Companion-matrix roots in double precision, polished by Newton steps in
    rational arithmetic rounded to ``bits`` bits.  These only seed candidate
    preimages, so a lost root costs coverage evidence, never correctness.
    Falls back to exact isolation when the coefficients do not fit a double.
    """
    p = uv.strip(coeffs)
    if len(p) <= 1:
        return []
    big = max(abs(c) for c in p)
    scaled = [float(c / big) for c in reversed(p)]
    if not all(math.isfinite(c) for c in scaled) or scaled[0] == 0:
        return _real_roots_exact(p, bits)
    dp = uv.derivative(p)
    out: list[mpq] = []
    for z in np.roots(scaled):
        if abs(z.imag) > 1e-7 * max(1.0, abs(z)):
            continue
        t = round_dyadic(rationalize_exact(z.real), bits)
        for _ in range(8):
            d = uv.horner(dp, t)
            if not d:
                break
            step = uv.horner(p, t) / d
            t = round_dyadic(t - step, bits)
            if abs(step) <= abs(t) / mpz(2) ** bits:
                break
        if t not in out:
            out.append(t)
    return sorted(out)


def rationalize_exact(v: float) -> mpq:
    return mpq(v) if math.isfinite(v) else mpq(0)


def _real_roots_exact(p: list[mpq], bits: int) -> list[mpq]:
    sq = uv.squarefree(p)
    out = []
    for a, b in uv.isolate_real_roots(sq):
        if uv.horner(sq, b) == 0:
            out.append(b)
            continue
        while uv.horner(sq, a) == 0:
            a = (a + b) / 2
        width = max(abs(a), abs(b), mpq(1)) / mpz(2) ** bits
        lo, hi = uv.bisect_sign_change(sq, a, b, width)
        out.append(round_dyadic((lo + hi) / 2, bits))
    return out


def _poly_stage_preimages(st: PolyStage, z: tuple) -> list[tuple]:
    if st.name in ("open_halfplane", "open_halfplane_factor"):
        head = tuple(z[: st.out_arity - 2])
        return [head + q for q in _open_halfplane_preimages(z[-2], z[-1])]
    # coordinatewise maps such as (x, y^2) or (x^2, y^2)
    var_of = []
    for f in st.polys:
        used = {i for exp, _ in f.items() for i, e in enumerate(exp) if e}
        if len(used) != 1:
            return []
        var_of.append(used.pop())
    if sorted(var_of) != list(range(st.in_arity)):
        return []
    choices: list[list[mpq]] = [[] for _ in range(st.in_arity)]
    for f, j, target in zip(st.polys, var_of, z):
        coeffs = [mpq(0)] * (f.degree() + 1)
        for exp, c in f.items():
            coeffs[exp[j]] += c
        coeffs[0] -= target
        choices[j] = _real_roots(coeffs)
    return list(itertools.product(*choices))


def _open_halfplane_preimages(a: mpq, b: mpq) -> list[tuple[mpq, mpq]]:
    """Preimages of ``(a, b)`` under ``(y(xy - 1), (xy - 1)^2 + x^2)`` via ``u = xy - 1``."""
    if b <= 0:
        return []
    out = []
    if a == 0:
        for x in _real_roots([-b, 0, 1]):
            if x:
                out.append((x, 1 / x))
        return out
    # a^2 u^2 + u^2 (u + 1)^2 - a^2 b = 0
    a2 = a * a
    for u in _real_roots([-a2 * b, 0, a2 + 1, 2, 1]):
        if u:
            out.append((u * (u + 1) / a, a / u))
    return out


def _fold_preimages(st: FoldStage, z: tuple) -> list[tuple]:
    r, y = z
    if y < 0:
        return []
    if y == 0:
        # the whole axis is fixed, plus the zeros of the factor on the fiber
        roots = [mpq(0)] + _real_roots(st.spec.gamma_slice(r))
        return [(r, t) for t in roots]
    h = list(st.spec.h_slice(r))
    h += [mpq(0)] * max(0, 1 - len(h))
    h[0] -= y
    return [(r, t) for t in _real_roots(h)]


def _lift_preimages(st: LiftStage, z: tuple, budget: int) -> list[tuple]:
    target = st.inner.target
    dx, dy = st.direction
    out = []
    for part in target.parts if target is not None else ():
        tmax = math.inf
        for f in part.functionals:
            k = f.a * dx + f.b * dy
            if k > 0:
                tmax = min(tmax, f(z) / k)
        if tmax <= 0:
            continue
        for t in ([mpq(1)] if tmax == math.inf else [tmax / 2, tmax / 8]):
            base = (z[0] - t * dx, z[1] - t * dy)
            pre = pull_back(st.inner, base, budget)
            if pre is not None:
                out.append(tuple(pre) + (t,))
                return out
    return out


def stage_preimages(st: Stage, z: tuple, budget: int = 64) -> list[tuple]:
    """Candidate preimages of ``z`` under one stage (rational approximations)."""
    if isinstance(st, AffineStage):
        return [st.tau.inverse()(z)]
    if isinstance(st, FoldStage):
        return _fold_preimages(st, z)
    if isinstance(st, PolyStage):
        return _poly_stage_preimages(st, z)
    if isinstance(st, LiftStage):
        return _lift_preimages(st, z, budget)
    return []


def pull_back(m: StagedMap, z: Sequence, budget: int = 64) -> tuple | None:
    """Search a domain point whose image should be close to ``z``.

    Depth-first over candidate preimages, preferring those inside the set
    the previous stage is expected to produce.  The result is only a
    candidate: callers confirm it by forward evaluation.
    """
    nodes = [0]

    def rec(k: int, w: tuple) -> tuple | None:
        if k < 0:
            return w
        nodes[0] += 1
        if nodes[0] > budget:
            return None
        cands = stage_preimages(m.stages[k], w, budget)
        before = m.expected_after[k - 1] if k > 0 else None
        if before is not None:
            cands.sort(key=lambda c: not before.contains(c))
        for c in cands:
            c = tuple(round_dyadic(Q(v), PREIMAGE_BITS) for v in c)
            got = rec(k - 1, c)
            if got is not None:
                return got
        return None

    return rec(len(m) - 1, tuple(Q(v) for v in z))


def eval_rounded(m: StagedMap, p: Sequence, bits: int = 256) -> tuple:
    """Forward evaluation rounding every intermediate point to ``bits`` bits."""
    cur = tuple(Q(v) for v in p)
    for st in m.stages:
        if isinstance(st, LiftStage):
            fx, fy = eval_rounded(st.inner, cur[:2], bits)
            img = (fx + cur[2] * st.direction[0], fy + cur[2] * st.direction[1])
        else:
            img = st.eval(cur)
        cur = tuple(round_dyadic(v, bits) for v in img)
    return cur


# ---------------------------------------------------------------------------
# coverage

EXACT_CONFIRM_DEGREE = 10_000


@dataclass
class CoverageReport:
    window: tuple[mpq, mpq, mpq, mpq]
    grid: int
    target_cells: int
    random_hits: int
    refined_hits: int
    misses: list[tuple[mpq, mpq]]
    near_boundary_misses: list[tuple[mpq, mpq]]
    samples: int
    confirmation: str
    threshold: float | None = None

    @property
    def hit_cells(self) -> int:
        return self.random_hits + self.refined_hits

    @property
    def hit_fraction(self) -> float:
        return self.hit_cells / self.target_cells if self.target_cells else 1.0

    @property
    def random_fraction(self) -> float:
        return self.random_hits / self.target_cells if self.target_cells else 1.0

    @property
    def passed(self) -> bool:
        return self.threshold is None or self.hit_fraction >= self.threshold

    def to_json(self) -> dict:
        return {
            "window": [qstr(v) for v in self.window],
            "grid": self.grid,
            "samples": self.samples,
            "target_cells": self.target_cells,
            "random_hits": self.random_hits,
            "refined_hits": self.refined_hits,
            "hit_fraction": round(self.hit_fraction, 6),
            "random_fraction": round(self.random_fraction, 6),
            "threshold": self.threshold,
            "passed": self.passed,
            "confirmation": self.confirmation,
            "misses": len(self.misses),
            "near_boundary_misses": len(self.near_boundary_misses),
        }

    def misses_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "near_boundary"])
        near = set(self.near_boundary_misses)
        for c in self.misses:
            w.writerow([repr(float(c[0])), repr(float(c[1])), int(c in near)])
        return buf.getvalue()


def parse_window(text: str) -> tuple[mpq, mpq, mpq, mpq]:
    parts = [Q(v.strip()) for v in text.split(",")]
    if len(parts) != 4 or parts[0] >= parts[1] or parts[2] >= parts[3]:
        raise ValueError(f"window must be x0,x1,y0,y1 with x0<x1 and y0<y1, got {text!r}")
    return tuple(parts)


def polygon_window(vertices: Iterable[Sequence], margin=5) -> tuple[mpq, mpq, mpq, mpq]:
    vs = [tuple(Q(c) for c in v) for v in vertices]
    m = Q(margin)
    return (
        min(v[0] for v in vs) - m,
        max(v[0] for v in vs) + m,
        min(v[1] for v in vs) - m,
        max(v[1] for v in vs) + m,
    )


def _cell_geometry(window, grid):
    x0, x1, y0, y1 = window
    hx, hy = (x1 - x0) / grid, (y1 - y0) / grid
    return x0, y0, hx, hy


def _cell_of(window, grid, p) -> tuple[int, int] | None:
    x0, y0, hx, hy = _cell_geometry(window, grid)
    i = (p[0] - x0) / hx
    j = (p[1] - y0) / hy
    if not (0 <= i < grid and 0 <= j < grid):
        return None
    return (int(math.floor(i)), int(math.floor(j)))


def check_coverage(
    m: StagedMap,
    target: Region | None,
    window: Sequence,
    grid: int,
    plan: SamplePlan,
    threshold: float | None = None,
    refine: bool = True,
    refine_budget: int = 64,
    chunk: int = 1 << 17,
) -> CoverageReport:
    """Fraction of grid cells of ``target`` within ``window`` hit by the image.

    A cell is a target cell when its (rational) center lies in ``target``.
    Random phase: ``plan`` samples evaluated in double precision.  Refinement
    phase: every missed cell's center is pulled back through the stages and
    the candidate preimage is evaluated forward again, exactly when the
    predicted degree allows it and with 256-bit rounding otherwise; the cell
    counts only if that image falls inside it.
    """
    target = target if target is not None else m.target
    window = tuple(Q(v) for v in window)
    x0, y0, hx, hy = _cell_geometry(window, grid)
    centers = [[(x0 + (i + mpq(1, 2)) * hx, y0 + (j + mpq(1, 2)) * hy) for j in range(grid)] for i in range(grid)]
    is_target = np.array([[target.contains(c) for c in row] for row in centers], dtype=bool)

    hit = np.zeros((grid, grid), dtype=bool)
    fx0, fy0, fhx, fhy = float(x0), float(y0), float(hx), float(hy)
    done = 0
    stream = 0
    while done < plan.count:
        n = min(chunk, plan.count - done)
        coords = plan.with_count(n).float_points(m.domain_arity, stream=stream)
        u, v = m.eval_float(*coords)
        with np.errstate(over="ignore", invalid="ignore"):
            i = np.floor((u - fx0) / fhx)
            j = np.floor((v - fy0) / fhy)
        ok = np.isfinite(i) & np.isfinite(j) & (i >= 0) & (i < grid) & (j >= 0) & (j < grid)
        hit[i[ok].astype(int), j[ok].astype(int)] = True
        done += n
        stream += 1
    random_hit = hit & is_target
    random_hits = int(random_hit.sum())

    exact = m.predicted_degree() <= EXACT_CONFIRM_DEGREE
    refined = 0
    missed = [(i, j) for i in range(grid) for j in range(grid) if is_target[i, j] and not random_hit[i, j]]
    still = []
    for i, j in missed:
        if refine and _refine_cell(m, window, grid, (i, j), centers[i][j], exact, refine_budget):
            refined += 1
        else:
            still.append((i, j))

    def corner_in(i, j):
        corners = [(x0 + a * hx, y0 + b * hy) for a in (i, i + 1) for b in (j, j + 1)]
        return all(_closure_contains(target, c) for c in corners)

    misses = [centers[i][j] for i, j in still]
    near = [centers[i][j] for i, j in still if not corner_in(i, j)]
    return CoverageReport(
        window,
        grid,
        int(is_target.sum()),
        random_hits,
        refined,
        misses,
        near,
        plan.count,
        ("exact" if exact else "rounded-256") if refine else "none",
        threshold,
    )


def _closure_contains(region: Region, p) -> bool:
    for part in region.parts:
        if all(f(p) >= 0 for f in part.functionals):
            return True
    return False


def _refine_cell(m: StagedMap, window, grid, cell, center, exact: bool, budget: int) -> bool:
    pre = pull_back(m, center, budget)
    if pre is None:
        return False
    img = m.eval(pre) if exact else eval_rounded(m, pre)
    return _cell_of(window, grid, img) == cell


# ---------------------------------------------------------------------------
# fold certificates and cross checks


def fiber_sample(s: PolygonalSet, plan: SamplePlan, c=None, d=None) -> list[mpq]:
    """Rational abscissas spread over the projection of ``s``.

    Includes the fold bounds ``c``, ``d`` and nearby points when they fall in
    the projection, since fibers near the bounds are the delicate ones.
    """
    lo, lo_closed, hi, hi_closed = projection(s)
    rng = plan.generator(stream=7)
    dbound = plan.denominator_bound

    def inside(r):
        if r == -math.inf or r == math.inf:
            return False
        if lo != -math.inf and (r < lo or (r == lo and not lo_closed)):
            return False
        if hi != math.inf and (r > hi or (r == hi and not hi_closed)):
            return False
        return True

    special = []
    for b in (c, d):
        if b is None or b in (-math.inf, math.inf):
            continue
        b = Q(b)
        special += [b, b - mpq(1, 64), b + mpq(1, 64)]
    out = [r for r in special if inside(r)]
    tries = 0
    while len(out) < plan.count and tries < 100 * plan.count:
        tries += 1
        if lo != -math.inf and hi != math.inf:
            r = lo + (hi - lo) * mpq(int(rng.integers(0, dbound + 1)), dbound)
        else:
            anchor = lo if lo != -math.inf else (hi if hi != math.inf else mpq(0))
            r = anchor + rationalize(rng.normal(0, 4), dbound)
        if inside(r) and r not in out:
            out.append(r)
    return out[: plan.count]


def certify_fold_stage(
    st: FoldStage,
    s: PolygonalSet | None = None,
    fibers: Sequence | None = None,
    plan: SamplePlan = SamplePlan(count=20),
    grid_size: int | None = None,
) -> tuple[bool, list[FiberCertificate]]:
    """Fiber certificates for a fold stage on its input curtain."""
    s = s if s is not None else st.curtain
    if s is None:
        raise ValueError("fold stage has no recorded curtain")
    rs = list(fibers) if fibers is not None else fiber_sample(s, plan, st.spec.c, st.spec.d)
    kw = {} if grid_size is None else {"grid_size": grid_size}
    certs = []
    for r in rs:
        if fiber_origin(s, Q(r)) is None:
            raise ValueError(f"fiber x = {qstr(Q(r))} lies outside the projection of the curtain")
        certs.append(certify_fiber(st.spec, s, r, **kw))
    return all(c.valid for c in certs), certs


@dataclass
class CrossCheckResult:
    passed: bool
    checked: int
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"passed": self.passed, "checked": self.checked, "witness": self.witness}


def cross_check(m: StagedMap, expanded: Sequence[SparsePoly], plan: SamplePlan = SamplePlan()) -> CrossCheckResult:
    pts = plan.rational_points(m.domain_arity, stream=11)
    for p in pts:
        staged = m.eval(p)
        flat = tuple(f.eval(p) for f in expanded)
        if staged != flat:
            return CrossCheckResult(
                False,
                len(pts),
                {
                    "point": [qstr(v) for v in p],
                    "staged": [qstr(v) for v in staged],
                    "expanded": [qstr(v) for v in flat],
                },
            )
    return CrossCheckResult(True, len(pts))


# ---------------------------------------------------------------------------
# random curtains


def random_curtain(rng: np.random.Generator, max_vertices: int = 4, coord_bound: int = 6) -> PolygonalSet:
    """A random closed V-polygon in the upper half-plane whose fibers are upward rays.

    Vertices form a chain convex from below; the first ray leaves up-left
    (or straight up), the last one up-right (or straight up).  Candidates are
    drawn until one validates.
    """
    while True:
        k = int(rng.integers(1, max_vertices + 1))
        xs = sorted(set(int(v) for v in rng.integers(-coord_bound, coord_bound + 1, k)))
        slopes = sorted(set(mpq(int(a), int(b)) for a, b in zip(rng.integers(-4, 5, k), rng.integers(1, 4, k))))
        if len(slopes) < len(xs) - 1:
            continue
        y = mpq(int(rng.integers(0, 4)))
        verts = [(mpq(xs[0]), y)]
        for i in range(1, len(xs)):
            y += slopes[i - 1] * (xs[i] - xs[i - 1])
            verts.append((mpq(xs[i]), y))
        low = min(v[1] for v in verts)
        if low < 0:
            verts = [(a, b - low) for a, b in verts]
        v = (mpq(-int(rng.integers(0, 3))), mpq(int(rng.integers(1, 4))))
        w = (mpq(int(rng.integers(0, 3))), mpq(int(rng.integers(1, 4))))
        try:
            p = validate(VPolygon(tuple(verts), v, w))
        except PolygonError:
            continue
        if p.vertices == tuple(verts) and is_curtain_certified(p):
            return PolygonalSet.from_polygon(p, label="random curtain")
