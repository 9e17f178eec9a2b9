"""
Conditional rate-distortion R_{S|S'}(D): both ends see the side information.

For each side-information symbol s' the source P(S | S'=s') gets its own
Blahut-Arimoto solve; all rows share one slope, so the per-row distortion
allocation is optimal and a single bisection on that slope meets the
average distortion target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from packages.core.parallel import ordered_map
from packages.core.prob.types import DistortionMatrix, JointSourcePMF
from packages.shared.errors import ConvergenceError, ValidationError

from . import blahut
from .blahut import BAState
from .types import RDCurve, RDPoint

log = logging.getLogger(__name__)


@dataclass
class RowStates:
    weights: np.ndarray
    rows: List[Optional[BAState]]  # None for side-information symbols of zero mass
    slope: float

    @property
    def rate(self) -> float:
        return float(sum(w * s.rate for w, s in zip(self.weights, self.rows) if s is not None))

    @property
    def distortion(self) -> float:
        return float(sum(w * s.distortion for w, s in zip(self.weights, self.rows) if s is not None))

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.rows if s is not None)

    @property
    def residual(self) -> float:
        return max((s.residual for s in self.rows if s is not None), default=0.0)


def _row_sources(joint: JointSourcePMF, which: int):
    if which not in (1, 2):
        raise ValidationError(f"user selector must be 1 or 2, got {which}")
    cond = joint.conditional(which)
    weights = joint.marginal(2 if which == 1 else 1).mass
    return cond, weights


def _per_row(cond, weights, fn) -> List[Optional[BAState]]:
    return [fn(i, cond.row(i)) if cond.defined[i] else None for i in range(len(weights))]


def solve_conditional(
    joint: JointSourcePMF,
    d: DistortionMatrix,
    target: float,
    which: int = 1,
    tol: float = blahut.DEFAULT_TOL,
    max_iter: int = blahut.DEFAULT_MAX_ITER,
    slope_min: float = blahut.SLOPE_MIN,
    bisection_steps: int = blahut.BISECTION_STEPS,
) -> RowStates:
    cond, weights = _row_sources(joint, which)
    if cond.shape[1] != d.shape[0]:
        raise ValidationError(f"source has {cond.shape[1]} symbols, distortion matrix has {d.shape[0]} rows")
    blahut.check_target(target, d.d_min(joint.marginal(which).mass))

    hi = RowStates(weights, _per_row(cond, weights, lambda i, p: blahut.zero_rate_state(p, d)), 0.0)
    if target >= hi.distortion - blahut.DIST_TOL:
        return hi
    lo = RowStates(weights, _per_row(cond, weights, lambda i, p: blahut.iterate(p, d, slope_min, tol, max_iter)), slope_min)
    if target <= lo.distortion:
        return RowStates(weights, _per_row(cond, weights, lambda i, p: blahut.lossless_state(p, d, slope_min)), slope_min)

    def solve(slope: float, lo_s: RowStates, _hi: RowStates) -> RowStates:
        def row(i: int, p: np.ndarray) -> BAState:
            return blahut.iterate(p, d, slope, tol, max_iter, q0=blahut.warm_start(lo_s.rows[i].q))

        return RowStates(weights, _per_row(cond, weights, row), slope)

    def resume(states: RowStates, keep) -> RowStates:
        if states.converged:
            return states
        rows = _per_row(cond, weights, lambda i, p: blahut.resume(p, d, states.rows[i], tol, max_iter, lambda s: True))
        again = RowStates(weights, rows, states.slope)
        return again if keep(again) else states

    lo, hi = blahut.bracket_slope(solve, lo, hi, target, bisection_steps)
    lo = resume(lo, lambda s: s.distortion <= target)
    theta = blahut.mix_weight(lo.distortion, hi.distortion, target)
    if theta == 0.0:
        return lo
    hi = resume(hi, lambda s: s.distortion > target)
    slope = 0.5 * (lo.slope + hi.slope)

    def mixed(i: int, p: np.ndarray) -> BAState:
        a, b = lo.rows[i], hi.rows[i]
        state = blahut.channel_state(p, d, (1.0 - theta) * a.channel + theta * b.channel, slope)
        state.residual = max(a.residual, b.residual)
        state.converged = a.converged and b.converged
        return state

    return RowStates(weights, _per_row(cond, weights, mixed), slope)


def conditional_rd_point(joint: JointSourcePMF, d: DistortionMatrix, distortion: float, which: int = 1, **solver) -> RDPoint:
    states = solve_conditional(joint, d, distortion, which, **solver)
    if not states.converged:
        log.warning(f"conditional RD solve for user {which} at D={distortion:.6g} stopped with residual {states.residual:.3e}")
        raise ConvergenceError(
            f"conditional Blahut-Arimoto did not converge at D={distortion:.6g}",
            last=RDPoint(distortion, states.rate, states.slope),
            residual=states.residual,
        )
    return RDPoint(distortion, states.rate, states.slope)


def conditional_rd(joint: JointSourcePMF, d: DistortionMatrix, distortion: float, which: int = 1, **solver) -> float:
    """R_{S_which | S_other}(distortion) in bits."""
    return conditional_rd_point(joint, d, distortion, which, **solver).rate


def conditional_rd_curve(
    joint: JointSourcePMF,
    d: DistortionMatrix,
    grid: Sequence[float],
    which: int = 1,
    workers: Optional[int] = None,
    **solver,
) -> RDCurve:
    g = blahut.validate_grid(grid)
    points = ordered_map(lambda D: conditional_rd_point(joint, d, float(D), which, **solver), g, workers)
    curve = blahut.envelope_curve(points, label=f"R_S{which}|S{3 - which}")
    log.info(f"Computed conditional RD for user {which} on {g.size} points")
    return curve


def conditional_d_max(joint: JointSourcePMF, d: DistortionMatrix, which: int = 1) -> float:
    """Distortion of the best side-information-dependent constant guess."""
    cond, weights = _row_sources(joint, which)
    return float(sum(w * d.d_max(cond.row(i)) for i, w in enumerate(weights) if cond.defined[i]))
