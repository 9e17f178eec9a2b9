"""
Standard rate-distortion function by Blahut-Arimoto.

Slopes are in bits per unit distortion: at slope s <= 0 the iteration
minimizes I(S; S_hat) - s * E[d]. Target-distortion solves bisect the slope
and then mix the two bracketing test channels so the distortion is met
exactly; mutual information is convex in the channel, so the mixture never
costs more rate than time-sharing the two points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, TypeVar

import numpy as np

from packages.shared.errors import ConvergenceError, InfeasibleDistortionError, ValidationError
from packages.core.hull import lower_envelope
from packages.core.parallel import ordered_map
from packages.core.prob import info
from packages.core.prob.types import CondPMF, DistortionMatrix, ProbVec

from .types import RDCurve, RDPoint

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000
SLOPE_MIN = -50.0
BISECTION_STEPS = 60
DIST_TOL = 1e-12
WARM_MIX = 0.1


@dataclass
class BAState:
    """One Blahut-Arimoto solution: output marginal q and test channel rows P(s_hat | s)."""

    q: np.ndarray
    channel: np.ndarray
    rate: float
    distortion: float
    slope: float
    residual: float = 0.0
    iterations: int = 0
    converged: bool = True

    def point(self) -> RDPoint:
        return RDPoint(self.distortion, self.rate, self.slope)


def _check_pair(p: np.ndarray, d: DistortionMatrix) -> None:
    if p.shape[0] != d.shape[0]:
        raise ValidationError(f"source has {p.shape[0]} symbols, distortion matrix has {d.shape[0]} rows")


def check_target(target: float, d_min: float) -> None:
    if target < 0:
        raise InfeasibleDistortionError(f"negative target distortion {target}")
    if target < d_min - DIST_TOL:
        raise InfeasibleDistortionError(f"target distortion {target:.6g} is below the minimum {d_min:.6g}")


def channel_state(p: np.ndarray, d: DistortionMatrix, channel: np.ndarray, slope: float) -> BAState:
    """Rate and distortion of an explicit test channel."""
    joint = p[:, None] * channel
    return BAState(
        q=joint.sum(axis=0),
        channel=channel,
        rate=info.mutual_information(joint),
        distortion=float(np.sum(joint * d.d)),
        slope=slope,
    )


def zero_rate_state(p: np.ndarray, d: DistortionMatrix) -> BAState:
    """Constant reconstruction with the smallest expected distortion."""
    ch = np.zeros(d.shape)
    ch[:, d.best_constant(p)] = 1.0
    return channel_state(p, d, ch, 0.0)


def lossless_state(p: np.ndarray, d: DistortionMatrix, slope: float = SLOPE_MIN) -> BAState:
    """Deterministic reconstruction at the per-symbol minimum (lowest index on ties)."""
    ch = np.zeros(d.shape)
    ch[np.arange(d.shape[0]), np.argmin(d.d, axis=1)] = 1.0
    return channel_state(p, d, ch, slope)


def iterate(
    p: np.ndarray,
    d: DistortionMatrix,
    slope: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    q0: Optional[np.ndarray] = None,
) -> BAState:
    """Run the iteration at a fixed slope. Never raises on non-convergence; check `converged`."""
    n_hat = d.shape[1]
    # shifting each row by its minimum cancels in the normalization and avoids underflow
    shifted = d.d - d.d.min(axis=1, keepdims=True)
    a = np.exp2(slope * shifted)
    q = np.full(n_hat, 1.0 / n_hat) if q0 is None else np.asarray(q0, dtype=float).copy()
    support = p > 0
    residual = np.inf
    it = 0
    while it < max_iter:
        it += 1
        alpha = a @ q
        c = (p[support] / alpha[support]) @ a[support]
        q = q * c
        q /= q.sum()
        with np.errstate(divide="ignore"):
            logc = np.log2(c)
        used = q > 0
        residual = float(np.max(logc) - np.dot(q[used], logc[used]))
        if residual <= tol:
            break
    alpha = a @ q
    channel = a * q[None, :] / np.where(alpha > 0, alpha, 1.0)[:, None]
    # rows of zero-mass symbols are never read; keep them stochastic
    channel[~support] = q
    state = channel_state(p, d, channel, slope)
    state.q = q
    state.residual = residual
    state.iterations = it
    state.converged = residual <= tol
    return state


def ba_rd(
    source: ProbVec,
    d: DistortionMatrix,
    slope: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RDPoint:
    if slope > 0:
        raise ValidationError(f"slope must be <= 0, got {slope}")
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    p = source.mass
    _check_pair(p, d)
    if slope == 0:
        return zero_rate_state(p, d).point()
    state = iterate(p, d, slope, tol, max_iter)
    if not state.converged:
        log.warning(f"Blahut-Arimoto did not converge at slope {slope} (residual {state.residual:.3e})")
        raise ConvergenceError(
            f"Blahut-Arimoto did not reach residual {tol:g} in {max_iter} iterations at slope {slope}",
            last=state.point(),
            residual=state.residual,
        )
    log.debug(f"BA slope={slope:.6g} D={state.distortion:.6g} R={state.rate:.6g} in {state.iterations} iterations")
    return state.point()


S = TypeVar("S")


def bracket_slope(
    solve: Callable[[float, S, S], S],
    lo: S,
    hi: S,
    target: float,
    steps: int = BISECTION_STEPS,
    slope_tol: float = 0.0,
) -> Tuple[S, S]:
    """Bisect the slope between lo (distortion <= target) and hi (distortion > target).

    `solve(slope, lo, hi)` returns a solution object with `distortion` and `slope`.
    """
    for _ in range(steps):
        if hi.distortion - lo.distortion <= DIST_TOL:  # type: ignore[attr-defined]
            break
        if hi.slope - lo.slope <= slope_tol:  # type: ignore[attr-defined]
            break
        mid = 0.5 * (lo.slope + hi.slope)  # type: ignore[attr-defined]
        probe = solve(mid, lo, hi)
        if probe.distortion <= target:  # type: ignore[attr-defined]
            lo = probe
        else:
            hi = probe
    return lo, hi


def mix_weight(lo_d: float, hi_d: float, target: float) -> float:
    span = hi_d - lo_d
    if span <= DIST_TOL:
        return 0.0
    return float(np.clip((target - lo_d) / span, 0.0, 1.0))


def warm_start(q: np.ndarray) -> np.ndarray:
    return (1.0 - WARM_MIX) * q + WARM_MIX / q.size


def resume(
    p: np.ndarray,
    d: DistortionMatrix,
    state: BAState,
    tol: float,
    max_iter: int,
    keep: Callable[[BAState], bool],
) -> BAState:
    """Give an unconverged bracket end one more round of iterations from where it stopped.

    The continued state replaces the old one only if `keep` accepts it.
    """
    if state.converged:
        return state
    again = iterate(p, d, state.slope, tol, max_iter, q0=state.q)
    again.iterations += state.iterations
    return again if keep(again) else state


def solve_target(
    p: np.ndarray,
    d: DistortionMatrix,
    target: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    slope_min: float = SLOPE_MIN,
    bisection_steps: int = BISECTION_STEPS,
) -> BAState:
    """Test channel meeting E[d] <= target with the smallest rate found."""
    _check_pair(p, d)
    check_target(target, d.d_min(p))
    hi = zero_rate_state(p, d)
    if target >= hi.distortion - DIST_TOL:
        return hi
    lo = iterate(p, d, slope_min, tol, max_iter)
    if target <= lo.distortion:
        return lossless_state(p, d, slope_min)

    def solve(slope: float, lo_s: BAState, _hi: BAState) -> BAState:
        return iterate(p, d, slope, tol, max_iter, q0=warm_start(lo_s.q))

    lo, hi = bracket_slope(solve, lo, hi, target, bisection_steps)
    lo = resume(p, d, lo, tol, max_iter, lambda s: s.distortion <= target)
    theta = mix_weight(lo.distortion, hi.distortion, target)
    if theta == 0.0:
        return lo
    hi = resume(p, d, hi, tol, max_iter, lambda s: s.distortion > target)
    mixed = (1.0 - theta) * lo.channel + theta * hi.channel
    state = channel_state(p, d, mixed, 0.5 * (lo.slope + hi.slope))
    state.residual = max(lo.residual, hi.residual)
    state.iterations = lo.iterations + hi.iterations
    state.converged = lo.converged and hi.converged
    return state


def rd_test_channel(source: ProbVec, d: DistortionMatrix, distortion: float, **solver) -> Tuple[RDPoint, CondPMF]:
    state = solve_target(source.mass, d, distortion, **solver)
    if not state.converged:
        log.warning(f"R(D) solve at D={distortion:.6g} stopped with residual {state.residual:.3e}")
        raise ConvergenceError(
            f"Blahut-Arimoto did not converge at D={distortion:.6g} after {state.iterations} iterations",
            last=RDPoint(distortion, state.rate, state.slope),
            residual=state.residual,
        )
    return RDPoint(distortion, state.rate, state.slope), CondPMF(state.channel)


def rd_at(source: ProbVec, d: DistortionMatrix, distortion: float, **solver) -> RDPoint:
    return rd_test_channel(source, d, distortion, **solver)[0]


def envelope_curve(points: Sequence[RDPoint], upper_estimate: bool = False, label: str = "R") -> RDCurve:
    """Replace the rates by the lower convex envelope of the achieved points."""
    pts = sorted(points, key=lambda p: p.distortion)
    if not pts:
        return RDCurve((), upper_estimate, label)
    d = np.array([p.distortion for p in pts])
    r = np.array([p.rate for p in pts])
    env = lower_envelope(d, r)
    return RDCurve(
        [RDPoint(p.distortion, float(e), p.slope) for p, e in zip(pts, env)],
        upper_estimate=upper_estimate,
        label=label,
    )


def validate_grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(list(grid), dtype=float)
    if g.size == 0:
        raise ValidationError("distortion grid is empty")
    if np.any(np.diff(g) < 0):
        raise ValidationError("distortion grid must be sorted")
    return g


def rd_curve(
    source: ProbVec,
    d: DistortionMatrix,
    grid: Sequence[float],
    workers: Optional[int] = None,
    **solver,
) -> RDCurve:
    g = validate_grid(grid)
    points = ordered_map(lambda D: rd_at(source, d, float(D), **solver), g, workers)
    curve = envelope_curve(points, label="R")
    log.info(f"Computed R(D) on {g.size} points (R(0+)={curve.points[0].rate:.4f})")
    return curve


def default_grid(p: np.ndarray, d: DistortionMatrix, n: int) -> np.ndarray:
    """n evenly spaced distortions from the minimum to the zero-rate distortion."""
    if n < 1:
        raise ValidationError(f"grid needs at least one point, got {n}")
    return np.linspace(d.d_min(p), d.d_max(p), n)


def rd_inverse(curve: RDCurve, rate: float) -> float:
    """Smallest D on the piecewise-linear curve with R(D) <= rate."""
    if not curve.points:
        raise ValidationError("rd_inverse on an empty curve")
    ds = curve.distortions
    rs = curve.rates
    if rate >= rs[0]:
        return float(ds[0])
    for i in range(len(ds) - 1):
        if rs[i + 1] <= rate:
            drop = rs[i] - rs[i + 1]
            if drop <= 0:
                return float(ds[i + 1])
            return float(ds[i] + (rs[i] - rate) / drop * (ds[i + 1] - ds[i]))
    # R(D) is non-increasing past the last grid point
    return float(ds[-1])
