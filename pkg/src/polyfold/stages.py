"""Staged polynomial maps: an ordered chain of elementary stages.

Each stage is a polynomial map in its own right.  The chain is evaluated
stage by stage (exactly on rationals, or vectorized on floats), and can be
expanded into explicit polynomials when the predicted degree is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from gmpy2 import mpq

from .geometry import AffineMap2, Region, point_from_json, point_json
from .poly import Q, SparsePoly


class ExpansionRefused(ValueError):
    def __init__(self, predicted: int, cap: int):
        super().__init__(f"predicted degree {predicted} exceeds cap {cap}")
        self.predicted = predicted
        self.cap = cap


def _weighted_degree(p: SparsePoly, bounds: Sequence[int]) -> int:
    return max((sum(e * b for e, b in zip(exp, bounds)) for exp, _ in p.items()), default=0)


class Stage:
    kind = "stage"
    in_arity = 2
    out_arity = 2

    def eval(self, p: Sequence[mpq]) -> tuple[mpq, ...]:
        raise NotImplementedError

    def eval_float(self, *coords):
        raise NotImplementedError

    def degree(self) -> int:
        raise NotImplementedError

    def degree_bounds(self, bounds: Sequence[int]) -> list[int]:
        raise NotImplementedError

    def expand(self, polys: Sequence[SparsePoly]) -> tuple[SparsePoly, ...]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PolyStage(Stage):
    """Explicit polynomial coordinates, e.g. the base maps ``(x, y^2)``."""

    name: str
    polys: tuple[SparsePoly, ...]
    kind = "base"

    @property
    def in_arity(self) -> int:
        return self.polys[0].arity

    @property
    def out_arity(self) -> int:
        return len(self.polys)

    def eval(self, p):
        return tuple(f.eval(p) for f in self.polys)

    def eval_float(self, *coords):
        return tuple(
            np.broadcast_to(f.eval_float(*coords), np.shape(coords[0])).astype(float)
            for f in self.polys
        )

    def degree(self) -> int:
        return max(f.degree() for f in self.polys)

    def degree_bounds(self, bounds):
        return [_weighted_degree(f, bounds) for f in self.polys]

    def expand(self, polys):
        return tuple(f.compose(*polys) for f in self.polys)

    def to_json(self) -> dict:
        return {"kind": "base", "name": self.name, "polys": [f.to_json() for f in self.polys]}


@dataclass(frozen=True)
class AffineStage(Stage):
    tau: AffineMap2
    label: str = ""
    kind = "affine"

    def eval(self, p):
        return self.tau(p)

    def eval_float(self, x, y):
        return self.tau.apply_float(x, y)

    def degree(self) -> int:
        return 1

    def degree_bounds(self, bounds):
        (a, b), (c, d) = self.tau.matrix
        return [
            max([bounds[0]] * bool(a) + [bounds[1]] * bool(b) + [0]),
            max([bounds[0]] * bool(c) + [bounds[1]] * bool(d) + [0]),
        ]

    def expand(self, polys):
        (a, b), (c, d) = self.tau.matrix
        e, f = self.tau.offset
        u, v = polys
        return (u * a + v * b + e, u * c + v * d + f)

    def to_json(self) -> dict:
        return {"kind": "affine", "label": self.label, **self.tau.to_json()}


@dataclass(frozen=True)
class LiftStage(Stage):
    """``(x, y, t) -> F(x, y) + t * direction`` for an inner planar map ``F``."""

    inner: StagedMap
    direction: tuple[mpq, mpq] = (mpq(1), mpq(1))
    kind = "lift"
    in_arity = 3

    def eval(self, p):
        fx, fy = self.inner.eval(p[:2])
        t = p[2]
        return (fx + t * self.direction[0], fy + t * self.direction[1])

    def eval_float(self, x, y, t):
        fx, fy = self.inner.eval_float(x, y)
        return (fx + t * float(self.direction[0]), fy + t * float(self.direction[1]))

    def degree(self) -> int:
        return self.inner.degree_product()

    def degree_bounds(self, bounds):
        inner = self.inner.predicted_degrees(bounds[:2])
        return [max(inner[0], bounds[2]), max(inner[1], bounds[2])]

    def expand(self, polys):
        fx, fy = self.inner.expand_from(polys[:2])
        t = polys[2]
        return (fx + t * self.direction[0], fy + t * self.direction[1])

    def to_json(self) -> dict:
        return {
            "kind": "lift",
            "direction": point_json(self.direction),
            "inner": self.inner.to_json(),
        }


@dataclass(frozen=True)
class StagedMap:
    """A composition of stages with the set each partial image must land in.

    ``expected_after[k]`` describes where the image lands after stage ``k``
    (``None`` when nothing is claimed).  The final entry is the target.
    """

    domain_arity: int
    stages: tuple[Stage, ...]
    expected_after: tuple[Region | None, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.stages) != len(self.expected_after):
            raise ValueError("one expected set per stage")
        arity = self.domain_arity
        for st in self.stages:
            if st.in_arity != arity:
                raise ValueError(f"stage {st.kind} expects arity {st.in_arity}, got {arity}")
            arity = st.out_arity

    @property
    def target(self) -> Region | None:
        return self.expected_after[-1]

    def __len__(self) -> int:
        return len(self.stages)

    def prefix(self, k: int) -> StagedMap:
        return StagedMap(self.domain_arity, self.stages[:k], self.expected_after[:k], dict(self.meta))

    # -- evaluation -----------------------------------------------------------
    def trace(self, p: Sequence) -> list[tuple[mpq, ...]]:
        """Exact partial images after every stage."""
        cur = tuple(Q(v) for v in p)
        if len(cur) != self.domain_arity:
            raise ValueError(f"point arity {len(cur)} != {self.domain_arity}")
        out = []
        for st in self.stages:
            cur = tuple(st.eval(cur))
            out.append(cur)
        return out

    def eval(self, p: Sequence) -> tuple[mpq, ...]:
        cur = tuple(Q(v) for v in p)
        if len(cur) != self.domain_arity:
            raise ValueError(f"point arity {len(cur)} != {self.domain_arity}")
        for st in self.stages:
            cur = tuple(st.eval(cur))
        return cur

    def eval_float(self, *coords):
        cur = tuple(np.asarray(c, dtype=float) for c in coords)
        with np.errstate(over="ignore", invalid="ignore"):
            for st in self.stages:
                cur = tuple(st.eval_float(*cur))
        return cur

    # -- degrees ---------------------------------------------------------------
    def degree_product(self) -> int:
        return math.prod(st.degree() for st in self.stages)

    def predicted_degrees(self, bounds: Sequence[int] | None = None) -> list[int]:
        cur = list(bounds) if bounds is not None else [1] * self.domain_arity
        for st in self.stages:
            cur = st.degree_bounds(cur)
        return cur

    def predicted_degree(self) -> int:
        return max(self.predicted_degrees())

    # -- expansion -------------------------------------------------------------
    def expand_from(self, polys: Sequence[SparsePoly]) -> tuple[SparsePoly, ...]:
        cur = tuple(polys)
        for st in self.stages:
            cur = st.expand(cur)
        return cur

    def expand(self, degree_cap: int = 64) -> tuple[SparsePoly, ...]:
        """Fully composed coordinate polynomials; refuses above ``degree_cap``."""
        predicted = self.predicted_degree()
        if predicted > degree_cap:
            raise ExpansionRefused(predicted, degree_cap)
        n = self.domain_arity
        out = self.expand_from([SparsePoly.var(i, n) for i in range(n)])
        assert max(p.degree() for p in out) <= min(predicted, self.degree_product())
        return out

    # -- serialization ------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "domain_arity": self.domain_arity,
            "stages": [st.to_json() for st in self.stages],
            "expected_after": [r.to_json() if r is not None else None for r in self.expected_after],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> StagedMap:
        return cls(
            int(data["domain_arity"]),
            tuple(stage_from_json(s) for s in data["stages"]),
            tuple(Region.from_json(r) if r is not None else None for r in data["expected_after"]),
            dict(data.get("meta", {})),
        )


def stage_from_json(data: dict[str, Any]) -> Stage:
    kind = data["kind"]
    if kind == "base":
        return PolyStage(data["name"], tuple(SparsePoly.from_json(p) for p in data["polys"]))
    if kind == "affine":
        return AffineStage(AffineMap2.from_json(data), data.get("label", ""))
    if kind == "fold":
        from .folding import FoldSpec, FoldStage
        from .geometry import PolygonalSet

        curtain = data.get("curtain")
        return FoldStage(
            FoldSpec.from_json(data["spec"]),
            data.get("label", ""),
            PolygonalSet.from_json(curtain) if curtain is not None else None,
        )
    if kind == "lift":
        return LiftStage(StagedMap.from_json(data["inner"]), point_from_json(data["direction"]))
    raise ValueError(f"unknown stage kind {kind!r}")
