"""
Shannon's inner and outer bounds on the capacity region of a two-way channel.

Inner: independent inputs P(x1) P(x2), rates (I(X1;Y2|X2), I(X2;Y1|X1)).
Outer: the same rates under an arbitrary joint input law P(x1, x2).
Both regions are the convex closure of the evaluated rate pairs.
"""

from __future__ import annotations

import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import entr, softmax

from packages.core.hull import pareto_max
from packages.core.parallel import ordered_map
from packages.core.prob.simplex import simplex_points
from packages.core.prob.types import ProbVec, TwoWayChannel
from packages.shared.errors import ValidationError

from .types import RatePair, RegionBoundary

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
DEFAULT_RESOLUTION = 17
DEFAULT_LAMBDA_POINTS = 33
PRODUCT_CHUNK = 200_000
PRODUCT_CAP = 4_000_000


def _h(arr: np.ndarray, axes) -> np.ndarray:
    return entr(arr).sum(axis=axes) / LN2


def joint_input_rates(ch: TwoWayChannel, px: np.ndarray) -> np.ndarray:
    """Rate pairs for a stack of joint input pmfs px[n, x1, x2]; returns [n, 2]."""
    w1, w2 = ch.marginals()
    px = np.asarray(px, dtype=float)
    h_w1 = _h(w1, 2)  # H(Y1 | x1, x2)
    h_w2 = _h(w2, 2)
    p_x2y2 = np.einsum("nab,abj->nbj", px, w2)
    p_x1y1 = np.einsum("nab,abi->nai", px, w1)
    h_y2_given_x2 = _h(p_x2y2, (1, 2)) - _h(px.sum(axis=1), 1)
    h_y1_given_x1 = _h(p_x1y1, (1, 2)) - _h(px.sum(axis=2), 1)
    r1 = h_y2_given_x2 - np.einsum("nab,ab->n", px, h_w2)
    r2 = h_y1_given_x1 - np.einsum("nab,ab->n", px, h_w1)
    return np.clip(np.column_stack([r1, r2]), 0.0, None)


def _check_inputs(ch: TwoWayChannel, p1: ProbVec, p2: ProbVec) -> None:
    if (p1.size, p2.size) != ch.input_sizes:
        raise ValidationError(f"input laws of sizes ({p1.size}, {p2.size}) do not match channel inputs {ch.input_sizes}")


def inner_rate_point(ch: TwoWayChannel, p1: ProbVec, p2: ProbVec) -> RatePair:
    _check_inputs(ch, p1, p2)
    r = joint_input_rates(ch, np.outer(p1.mass, p2.mass)[None])[0]
    return RatePair(float(r[0]), float(r[1]))


def outer_rate_point(ch: TwoWayChannel, px: np.ndarray) -> RatePair:
    px = np.asarray(px, dtype=float)
    if px.shape != ch.input_sizes:
        raise ValidationError(f"joint input law of shape {px.shape} does not match channel inputs {ch.input_sizes}")
    r = joint_input_rates(ch, px[None])[0]
    return RatePair(float(r[0]), float(r[1]))


def _row_information(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """I(p; W) for each row of p against the channel rows w[x, y]."""
    return _h(p @ w, 1) - p @ _h(w, 1)


def product_rates(ch: TwoWayChannel, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """Rate pairs for every pair (g1[i], g2[j]) of independent input laws; returns [i*j, 2]."""
    w1, w2 = ch.marginals()
    a, b = ch.input_sizes
    # with independent inputs I(X1;Y2|X2) = sum_x2 p2(x2) I(X1; Y2 | X2=x2), which depends on p1 only
    m1 = np.column_stack([_row_information(g1, w2[:, x2, :]) for x2 in range(b)])
    m2 = np.column_stack([_row_information(g2, w1[x1, :, :]) for x1 in range(a)])
    r1 = m1 @ g2.T
    r2 = g1 @ m2.T
    return np.clip(np.column_stack([r1.ravel(), r2.ravel()]), 0.0, None)


def inner_region(ch: TwoWayChannel, resolution: int = DEFAULT_RESOLUTION, seed: int = 0) -> RegionBoundary:
    a, b = ch.input_sizes
    cap = int(np.sqrt(PRODUCT_CAP))
    g1 = simplex_points(a, resolution, seed, cap)
    g2 = simplex_points(b, resolution, seed + 1, cap)
    rows = max(1, PRODUCT_CHUNK // len(g2))
    # filter each block so only candidate boundary points are kept
    blocks = [pareto_max(product_rates(ch, g1[i : i + rows], g2)) for i in range(0, len(g1), rows)]
    region = RegionBoundary(np.vstack(blocks))
    log.info(f"Inner bound: {len(g1) * len(g2)} product inputs, {len(region.hull)} hull vertices")
    return region


def _climb(ch: TwoWayChannel, weight: float, starts: list, steps: int) -> np.ndarray:
    a, b = ch.input_sizes

    def loss(z: np.ndarray) -> float:
        r = joint_input_rates(ch, softmax(z).reshape(1, a, b))[0]
        return -(weight * r[0] + (1.0 - weight) * r[1])

    best_z, best_val = None, np.inf
    for z0 in starts:
        res = minimize(loss, z0, method="Nelder-Mead", options={"maxiter": steps, "xatol": 1e-7, "fatol": 1e-10})
        if res.fun < best_val:
            best_z, best_val = res.x, res.fun
    return softmax(best_z).reshape(a, b)


def outer_region(
    ch: TwoWayChannel,
    resolution: int = DEFAULT_RESOLUTION,
    restarts: int = 4,
    seed: int = 0,
    lambda_points: int = DEFAULT_LAMBDA_POINTS,
    workers: Optional[int] = None,
    inner: Optional[RegionBoundary] = None,
) -> RegionBoundary:
    """Grid sweep over joint input laws, product candidates, then seeded hill climbing per weight."""
    a, b = ch.input_sizes
    joint = simplex_points(a * b, resolution, seed).reshape(-1, a, b)
    grid_rates = joint_input_rates(ch, joint)
    inner = inner if inner is not None else inner_region(ch, resolution, seed)

    weights = np.linspace(0.0, 1.0, lambda_points)
    steps = 200 * a * b

    def climb(k: int) -> np.ndarray:
        lam = weights[k]
        score = lam * grid_rates[:, 0] + (1.0 - lam) * grid_rates[:, 1]
        top = joint[int(np.argmax(score))]
        rng = np.random.default_rng([seed, k])
        starts = [np.log(np.clip(top.ravel(), 1e-6, None))] + [rng.normal(size=a * b) for _ in range(restarts)]
        return _climb(ch, lam, starts, steps)

    climbed = np.stack(ordered_map(climb, range(lambda_points), workers))
    points = np.vstack([grid_rates, inner.points, joint_input_rates(ch, climbed)])
    region = RegionBoundary(points)
    log.info(f"Outer bound: {len(joint)} joint inputs, {lambda_points} weights x {restarts + 1} climbs")
    return region


class Coincidence(NamedTuple):
    coincide: bool
    gap: float
    inner: RegionBoundary
    outer: RegionBoundary


def regions_coincide(
    ch: TwoWayChannel,
    tol: float = 1e-2,
    resolution: int = DEFAULT_RESOLUTION,
    restarts: int = 4,
    seed: int = 0,
    workers: Optional[int] = None,
    lambda_points: int = DEFAULT_LAMBDA_POINTS,
) -> Coincidence:
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    inner = inner_region(ch, resolution, seed)
    outer = outer_region(ch, resolution, restarts, seed, lambda_points, workers, inner=inner)
    gap = inner.hausdorff(outer)
    log.info(f"Inner/outer Hausdorff gap {gap:.6g} (tol {tol:g})")
    return Coincidence(gap <= tol, gap, inner, outer)


def max_rates(region: RegionBoundary) -> Tuple[float, float]:
    v = region.vertices
    return float(v[:, 0].max()), float(v[:, 1].max())
