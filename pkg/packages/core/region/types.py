from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from packages.core.hull import convex_hull, pareto_max, pareto_min
from packages.shared.errors import ValidationError

TOWARD_ORIGIN = "toward_origin"
TOWARD_INFINITY = "toward_infinity"

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class RatePair:
    r1: float  # user 1 -> 2, bits per channel use
    r2: float  # user 2 -> 1

    def __post_init__(self) -> None:
        if self.r1 < -1e-12 or self.r2 < -1e-12:
            raise ValidationError(f"negative rate pair ({self.r1}, {self.r2})")
        object.__setattr__(self, "r1", max(float(self.r1), 0.0))
        object.__setattr__(self, "r2", max(float(self.r2), 0.0))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.r1, self.r2)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


@dataclass(frozen=True, eq=False)
class RegionBoundary:
    """A finite point cloud and the convex closure it generates.

    Rate regions (toward_origin) are closed downward to the axes; distortion
    regions (toward_infinity) are closed upward and clipped to `corner`.
    `hull` lists the closure's vertices counterclockwise.
    """

    points: np.ndarray
    orientation: str = TOWARD_ORIGIN
    corner: Optional[Tuple[float, float]] = None
    hull: Tuple[Tuple[float, float], ...] = field(init=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValidationError("region points must be finite")
        if self.orientation == TOWARD_ORIGIN:
            pts = pareto_max(np.clip(pts, 0.0, None))
            closure = np.vstack([pts, np.column_stack([pts[:, 0], np.zeros(len(pts))]),
                                 np.column_stack([np.zeros(len(pts)), pts[:, 1]]), [[0.0, 0.0]]])
        elif self.orientation == TOWARD_INFINITY:
            pts = pareto_min(pts)
            if self.corner is None:
                corner = tuple(float(v) for v in pts.max(axis=0)) if len(pts) else (0.0, 0.0)
                object.__setattr__(self, "corner", corner)
            cx, cy = self.corner
            if len(pts) and (pts[:, 0].max() > cx + 1e-12 or pts[:, 1].max() > cy + 1e-12):
                pts = np.minimum(pts, [cx, cy])
            closure = np.vstack([pts, np.column_stack([pts[:, 0], np.full(len(pts), cy)]),
                                 np.column_stack([np.full(len(pts), cx), pts[:, 1]]),
                                 [[cx, cy]] if len(pts) else np.zeros((0, 2))])
        else:
            raise ValidationError(f"unknown region orientation {self.orientation!r}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "hull", tuple(convex_hull(closure)))

    @property
    def vertices(self) -> np.ndarray:
        return np.array(self.hull, dtype=float).reshape(-1, 2)

    @property
    def is_empty(self) -> bool:
        return len(self.hull) == 0

    def _clip(self, p: np.ndarray) -> np.ndarray:
        if self.orientation == TOWARD_ORIGIN:
            return np.maximum(p, 0.0)
        return np.minimum(p, self.corner)

    def _closure_edge(self, a: np.ndarray, b: np.ndarray) -> bool:
        if self.orientation == TOWARD_ORIGIN:
            return (a[0] == 0.0 and b[0] == 0.0) or (a[1] == 0.0 and b[1] == 0.0)
        cx, cy = self.corner
        return (a[0] == cx and b[0] == cx) or (a[1] == cy and b[1] == cy)

    def _edges(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def distance(self, point: Sequence[float]) -> float:
        """Euclidean distance from the point to the closure (0 inside)."""
        if self.is_empty:
            return float("inf")
        p = self._clip(np.asarray(point, dtype=float))
        v = self.vertices
        if len(v) == 1:
            return float(np.linalg.norm(p - v[0]))
        if len(v) == 2:
            return _segment_distance(p, v[0], v[1])
        inside = True
        for a, b in self._edges():
            ab = b - a
            if ab[0] * (p[1] - a[1]) - ab[1] * (p[0] - a[0]) < 0:
                inside = False
                break
        if inside:
            return 0.0
        return min(_segment_distance(p, a, b) for a, b in self._edges())

    def signed_distance(self, point: Sequence[float]) -> float:
        """Distance outside; minus the distance to the outer boundary inside."""
        d = self.distance(point)
        if d > 0 or len(self.hull) < 3:
            return d
        p = self._clip(np.asarray(point, dtype=float))
        margins = [
            (b - a)[0] * (p[1] - a[1]) - (b - a)[1] * (p[0] - a[0])
            for a, b in self._edges()
            if not self._closure_edge(a, b)
        ]
        lengths = [float(np.linalg.norm(b - a)) for a, b in self._edges() if not self._closure_edge(a, b)]
        if not margins:
            return float("-inf")
        return -min(m / n for m, n in zip(margins, lengths))

    def contains(self, point: Sequence[float], tol: float = MEMBERSHIP_TOL) -> bool:
        return self.distance(point) <= tol

    def hausdorff(self, other: "RegionBoundary") -> float:
        """Two-sided Hausdorff distance between the closures (attained at vertices)."""
        if self.is_empty or other.is_empty:
            return 0.0 if self.is_empty and other.is_empty else float("inf")
        there = max(other.distance(v) for v in self.vertices)
        back = max(self.distance(v) for v in other.vertices)
        return float(max(there, back))

    def support(self, weight: float) -> float:
        """max over the closure of weight * x + (1 - weight) * y."""
        v = self.vertices
        return float(np.max(weight * v[:, 0] + (1.0 - weight) * v[:, 1]))

    def rows(self) -> List[Tuple[str, float, float]]:
        out = [("point", float(x), float(y)) for x, y in self.points]
        out += [("hull", float(x), float(y)) for x, y in self.hull]
        return out

    def to_dict(self) -> dict:
        return {
            "orientation": self.orientation,
            "corner": list(self.corner) if self.corner is not None else None,
            "points": [[float(x), float(y)] for x, y in self.points],
            "hull": [[float(x), float(y)] for x, y in self.hull],
        }
