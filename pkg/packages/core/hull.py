"""
Planar convex hulls (monotone chain) and lower convex envelopes.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

Point = Tuple[float, float]

COLLINEAR_TOL = 1e-15


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _chain(points: Sequence[Point]) -> List[Point]:
    out: List[Point] = []
    for p in points:
        while len(out) > 1 and _cross(out[-2], out[-1], p) <= COLLINEAR_TOL:
            out.pop()
        out.append(p)
    return out


def _sorted_unique(points: np.ndarray) -> List[Point]:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.size == 0:
        return []
    pts = np.unique(pts, axis=0)  # lexicographic by (x, y)
    return [(float(x), float(y)) for x, y in pts]


def convex_hull(points: np.ndarray) -> List[Point]:
    """Counterclockwise hull vertices starting from the lowest-x point; collinear points dropped."""
    pts = _sorted_unique(points)
    if len(pts) <= 2:
        return pts
    lower = _chain(pts)
    upper = _chain(pts[::-1])
    return lower[:-1] + upper[:-1]


def lower_hull_indices(x: np.ndarray, y: np.ndarray) -> List[int]:
    """Indices of the lower convex hull vertices, left to right."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out: List[int] = []
    for i in np.lexsort((y, x)):
        i = int(i)
        if out and x[out[-1]] == x[i]:
            continue
        while len(out) > 1 and _cross((x[out[-2]], y[out[-2]]), (x[out[-1]], y[out[-1]]), (x[i], y[i])) <= COLLINEAR_TOL:
            out.pop()
        out.append(i)
    return out


def lower_envelope(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lower convex envelope of (x, y) evaluated at x, then made nonincreasing."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size <= 2:
        return np.minimum.accumulate(y)
    lower = _chain(_sorted_unique(np.column_stack([x, y])))
    lower = [p for i, p in enumerate(lower) if i == 0 or p[0] > lower[i - 1][0]]
    hx = np.array([p[0] for p in lower])
    hy = np.array([p[1] for p in lower])
    env = np.interp(x, hx, hy)
    return np.minimum.accumulate(np.minimum(env, y))


def pareto_max(points: np.ndarray) -> np.ndarray:
    """Points not dominated from above (no other point is >= in both coordinates)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return pts
    order = np.lexsort((-pts[:, 1], -pts[:, 0]))
    pts = pts[order]
    best = np.maximum.accumulate(pts[:, 1])
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = pts[1:, 1] > best[:-1]
    return pts[keep]


def pareto_min(points: np.ndarray) -> np.ndarray:
    """Points not dominated from below."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return -pareto_max(-pts)
