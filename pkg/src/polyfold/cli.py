"""Command-line entry point: ``polyfold {build,interior,verify,plot,expand}``.

Exit codes: 0 success, 1 an oracle failed, 2 input or usage error.  Errors
are reported on stderr as one JSON object ``{"error": code, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .folding import FoldError, FoldStage
from .geometry import PolygonError, PolygonalSet, Region, VPolygon, validate
from .pipeline import build_interior_map, build_v_polygon_map, expanded_json, fold_stages, to_latex
from .stages import ExpansionRefused, StagedMap
from .verify import (
    EXACT_CONFIRM_DEGREE,
    SamplePlan,
    certify_fold_stage,
    check_containment,
    check_coverage,
    parse_window,
    polygon_window,
)

COMMANDS = ("build", "interior", "verify", "plot", "expand")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    """Everything a run depends on; a run is reproducible from this alone."""

    command: str
    input: str | None = None
    output: str | None = None
    polygon: str | None = None
    seed: int = 0
    samples: int = 2000
    coverage_samples: int = 1_000_000
    window: str | None = None
    grid: int = 100
    threshold: float | None = None
    degree_cap: int = 64
    paper_step4_sign: bool = False
    fibers: int = 20
    misses: str | None = None
    latex: str | None = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError("bad_config", f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


# ---------------------------------------------------------------------------
# io helpers


def _read_json(path: str | None, what: str) -> dict:
    if not path:
        raise UsageError("missing_input", f"--input ({what}) is required")
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError("missing_input", f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError("malformed_json", f"{path}: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def load_polygon(path: str | None) -> VPolygon:
    data = _read_json(path, "polygon")
    try:
        return validate(VPolygon.from_json(data))
    except PolygonError as exc:
        raise UsageError(exc.code, str(exc)) from None


def load_map(path: str | None) -> StagedMap:
    data = _read_json(path, "map")
    try:
        return StagedMap.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        code = "arity_mismatch" if "arity" in str(exc) else "malformed_map"
        raise UsageError(code, f"cannot load map: {exc}") from None


# ---------------------------------------------------------------------------
# commands


def _build(cfg: RunConfig, interior: bool) -> int:
    p = load_polygon(cfg.input)
    try:
        if interior:
            m = build_interior_map(p, cfg.paper_step4_sign)
        else:
            m = build_v_polygon_map(p, cfg.paper_step4_sign)
    except (FoldError, ValueError) as exc:
        raise UsageError("construction_failed", str(exc)) from None
    _write(cfg.output, dumps(m.to_json()))
    return EXIT_OK


def cmd_build(cfg: RunConfig) -> int:
    return _build(cfg, interior=False)


def cmd_interior(cfg: RunConfig) -> int:
    return _build(cfg, interior=True)


def _target_for(m: StagedMap, polygon: VPolygon | None) -> Region:
    if m.target is None:
        raise UsageError("malformed_map", "map declares no target set")
    if polygon is None:
        return m.target
    interior = bool(m.meta.get("interior"))
    if interior != (m.domain_arity == 3):
        raise UsageError("arity_mismatch", f"interior map must have domain arity 3, got {m.domain_arity}")
    want = PolygonalSet.interior(polygon) if interior else PolygonalSet.from_polygon(polygon)
    have = m.target.parts
    if len(have) != 1 or set(have[0].functionals) != set(want.functionals):
        raise UsageError("target_mismatch", "map target differs from the given polygon")
    return Region.of(want, label="interior" if interior else "polygon")


def _all_folds(m: StagedMap) -> list[FoldStage]:
    return [st for _, st in fold_stages(m)]


def run_verify(cfg: RunConfig) -> dict:
    m = load_map(cfg.input)
    polygon = load_polygon(cfg.polygon) if cfg.polygon else None
    target = _target_for(m, polygon)
    if cfg.window:
        try:
            window = parse_window(cfg.window)
        except ValueError as exc:
            raise UsageError("bad_window", str(exc)) from None
    else:
        corners = []
        for part in target.parts:
            if part.polygon is not None:
                corners += list(part.polygon.vertices)
        window = polygon_window(corners or [(0, 0)])
    threshold = cfg.threshold if cfg.threshold is not None else (0.99 if len(m) == 1 else 0.98)
    plan = SamplePlan(seed=cfg.seed, count=cfg.samples)

    checks: dict[str, dict] = {}
    if m.predicted_degree() <= EXACT_CONFIRM_DEGREE:
        checks["containment"] = check_containment(m, target, plan, "chained").to_json()
    else:
        checks["containment"] = {"passed": True, "mode": "chained", "skipped": "predicted degree too large"}
    checks["stagewise"] = check_containment(m, None, plan, "stagewise").to_json()

    certs = []
    fiber_plan = SamplePlan(seed=cfg.seed, count=cfg.fibers)
    for st in _all_folds(m):
        if st.curtain is None:
            continue
        ok, cs = certify_fold_stage(st, plan=fiber_plan)
        certs.append(
            {
                "label": st.label,
                "passed": ok,
                "fibers": len(cs),
                "failures": [c.to_json() for c in cs if not c.valid],
            }
        )
    checks["fold_certificates"] = {"passed": all(c["passed"] for c in certs), "stages": certs}

    cov_plan = SamplePlan(seed=cfg.seed, count=cfg.coverage_samples, scheme="heavy_tailed")
    cov = check_coverage(m, target, window, cfg.grid, cov_plan, threshold=threshold)
    checks["coverage"] = cov.to_json()
    if cfg.misses:
        Path(cfg.misses).write_text(cov.misses_csv())

    return {
        "config": cfg.to_json(),
        "map": {"stages": len(m), "domain_arity": m.domain_arity, "predicted_degree": m.predicted_degree()},
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }


def cmd_verify(cfg: RunConfig) -> int:
    report = run_verify(cfg)
    _write(cfg.output, dumps(report))
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_expand(cfg: RunConfig) -> int:
    m = load_map(cfg.input)
    try:
        data = expanded_json(m, cfg.degree_cap)
    except ExpansionRefused as exc:
        raise UsageError("degree_cap_exceeded", str(exc)) from None
    _write(cfg.output, dumps(data))
    if cfg.latex:
        from .poly import SparsePoly

        polys = tuple(SparsePoly.from_json(p, m.domain_arity) for p in data["expanded"])
        Path(cfg.latex).write_text(to_latex(polys) + "\n")
    return EXIT_OK


def image_samples(m: StagedMap, window, plan: SamplePlan) -> np.ndarray:
    """Finite float images inside ``window``, in sample order."""
    u, v = m.eval_float(*plan.float_points(m.domain_arity))
    x0, x1, y0, y1 = (float(w) for w in window)
    with np.errstate(invalid="ignore"):
        keep = np.isfinite(u) & np.isfinite(v) & (u >= x0) & (u <= x1) & (v >= y0) & (v <= y1)
    return np.column_stack([u[keep], v[keep]])


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _segments(p: VPolygon, far: float) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Drawable pieces of the boundary, rays cut at distance ``far``, in edge order."""
    pts = [(float(x), float(y)) for x, y in p.vertices]

    def unit(d):
        n = math.hypot(float(d[0]), float(d[1]))
        return (float(d[0]) / n, float(d[1]) / n)

    if p.is_halfplane:
        (bx, by), (dx, dy) = pts[0], unit(p.dir_out)
        return [((bx - far * dx, by - far * dy), (bx + far * dx, by + far * dy))]
    v, w = unit(p.dir_in), unit(p.dir_out)
    first = ((pts[0][0] + far * v[0], pts[0][1] + far * v[1]), pts[0])
    last = (pts[-1], (pts[-1][0] + far * w[0], pts[-1][1] + far * w[1]))
    return [first] + list(zip(pts, pts[1:])) + [last]


def svg_plot(points: np.ndarray, target: Region | None, window, size: int = 600) -> str:
    """Scatter of image points over the target's faces.

    Solid lines are kept edges, dashed lines deleted edges; hollow circles
    mark deleted vertices.
    """
    x0, x1, y0, y1 = (float(w) for w in window)
    sx = size / (x1 - x0)
    sy = size / (y1 - y0)

    def tx(x):
        return (x - x0) * sx

    def ty(y):
        return (y1 - y) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<clipPath id="w"><rect x="0" y="0" width="{size}" height="{size}"/></clipPath>',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white" stroke="black"/>',
        '<g clip-path="url(#w)">',
    ]
    for x, y in points:
        out.append(f'<circle cx="{_fmt(tx(x))}" cy="{_fmt(ty(y))}" r="1" fill="steelblue" fill-opacity="0.5"/>')
    far = 4 * max(x1 - x0, y1 - y0) + max(abs(x0), abs(x1), abs(y0), abs(y1))
    for part in target.parts if target is not None else ():
        p = part.polygon
        if p is None:
            continue
        for (a, b), keep in zip(_segments(p, far), part.edge_included):
            dash = "" if keep else ' stroke-dasharray="6,4"'
            out.append(
                f'<line x1="{_fmt(tx(a[0]))}" y1="{_fmt(ty(a[1]))}" x2="{_fmt(tx(b[0]))}" '
                f'y2="{_fmt(ty(b[1]))}" stroke="black" stroke-width="1.5"{dash}/>'
            )
        for (vx, vy), keep in zip(p.corners, part.vertex_included):
            fill = "black" if keep else "white"
            out.append(
                f'<circle cx="{_fmt(tx(float(vx)))}" cy="{_fmt(ty(float(vy)))}" r="3.5" fill="{fill}" stroke="black"/>'
            )
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"


def cmd_plot(cfg: RunConfig) -> int:
    m = load_map(cfg.input)
    target = m.target
    if cfg.window:
        try:
            window = parse_window(cfg.window)
        except ValueError as exc:
            raise UsageError("bad_window", str(exc)) from None
    else:
        corners = [v for part in target.parts if part.polygon is not None for v in part.polygon.vertices]
        window = polygon_window(corners or [(0, 0)])
    plan = SamplePlan(seed=cfg.seed, count=cfg.samples, scheme="heavy_tailed")
    pts = image_samples(m, window, plan)
    stem = Path(cfg.output) if cfg.output else Path("plot")
    csv_lines = ["x,y"] + [f"{x!r},{y!r}" for x, y in pts.tolist()]
    stem.with_suffix(".csv").write_text("\n".join(csv_lines) + "\n")
    stem.with_suffix(".svg").write_text(svg_plot(pts, target, window))
    return EXIT_OK


HANDLERS = {
    "build": cmd_build,
    "interior": cmd_interior,
    "verify": cmd_verify,
    "plot": cmd_plot,
    "expand": cmd_expand,
}


# ---------------------------------------------------------------------------
# argument parsing


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyfold",
        description="Build and check polynomial maps onto unbounded convex polygons.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="RunConfig JSON; command-line flags override it")
    parser.add_argument("--input", help="polygon JSON (build, interior) or map JSON (verify, plot, expand)")
    parser.add_argument("--output", help="output file (plot: path stem for .csv and .svg)")
    parser.add_argument("--polygon", help="polygon JSON the map should cover (verify)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int, help="containment samples per stage, or plot points")
    parser.add_argument("--coverage-samples", type=int, dest="coverage_samples")
    parser.add_argument("--window", help="x0,x1,y0,y1 (write --window=-5,5,-5,5 for negatives)")
    parser.add_argument("--grid", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--degree-cap", type=int, dest="degree_cap")
    parser.add_argument("--fibers", type=int, help="fibers certified per fold stage")
    parser.add_argument("--misses", help="CSV of unhit cell centers (verify)")
    parser.add_argument("--latex", help="LaTeX output (expand)")
    parser.add_argument(
        "--paper-step4-sign",
        action="store_true",
        default=None,
        dest="paper_step4_sign",
        help="build the second fold with psi = +x (regression demo; not surjective)",
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        base = _read_json(args.config, "config")
    base["command"] = args.command
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None and f.name != "command":
            base[f.name] = val
    return RunConfig.from_json(base)


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc)}) + "\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
