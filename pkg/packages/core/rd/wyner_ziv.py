"""
Wyner-Ziv rate-distortion R_WZ(D): side information at the decoder only.

The auxiliary alphabet has |S|+1 symbols. At a fixed slope s <= 0 the
Lagrangian I(S; W | S') - s * E[d(S, g(S', W))] is lowered by alternating
three exact steps: the side-information output law r(w | s') from the test
channel, the test channel P(w | s) from r and the decoder, and the decoder
g(s', w) as the distortion-minimizing reconstruction (lowest index on ties).
The problem is not convex, so the result is an upper estimate:

1. a slope sweep runs seeded Dirichlet restarts at every slope,
2. the target distortion is bracketed on the lower hull of all schemes found
   and refined by slope bisection from warm starts,
3. the bracketing schemes are time-shared on disjoint auxiliary labels when
   they fit in |S|+1 symbols.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr

from packages.core.hull import lower_hull_indices
from packages.core.parallel import ordered_map
from packages.core.prob import info
from packages.core.prob.simplex import simplex_grid
from packages.core.prob.types import Alphabet, CondPMF, DistortionMatrix, JointSourcePMF
from packages.shared.errors import ConvergenceError, GridGuardError, InfeasibleDistortionError, ValidationError

from . import blahut
from .types import RDCurve, RDPoint, WZResult, WZScheme

log = logging.getLogger(__name__)

SWEEP_POINTS = 24
SWEEP_SLOPE_MIN_MAGNITUDE = 0.01
AM_ITER_CAP = 3000
REFINE_SLOPE_TOL = 1e-6
MASS_TOL = 1e-15
LOG_FLOOR = 1e-300
ORACLE_GUARD = 10**7
ORACLE_CHUNK = 50_000


@dataclass
class WZState:
    q: np.ndarray  # P(w | s), rows over s
    g: np.ndarray  # decoder [s_other, w]
    rate: float
    distortion: float
    slope: float
    converged: bool = True
    step: float = 0.0  # last decrease of the Lagrangian

    @property
    def lagrangian(self) -> float:
        return self.rate - self.slope * self.distortion


class WZProblem:
    """Source oriented as p[s, s_other] with its distortion matrix."""

    def __init__(self, joint: JointSourcePMF, d: DistortionMatrix, which: int = 1) -> None:
        if which not in (1, 2):
            raise ValidationError(f"user selector must be 1 or 2, got {which}")
        p = joint.oriented(which)
        if p.shape[0] != d.shape[0]:
            raise ValidationError(f"source has {p.shape[0]} symbols, distortion matrix has {d.shape[0]} rows")
        self.p = p
        self.d = d.d
        self.n, self.m = p.shape
        self.nw = self.n + 1
        self.ps = p.sum(axis=1)
        self.psp = p.sum(axis=0)
        self.side_given_s = np.divide(p, self.ps[:, None], out=np.zeros_like(p), where=self.ps[:, None] > 0)
        self.s_given_side = np.divide(p, self.psp[None, :], out=np.zeros_like(p), where=self.psp[None, :] > 0)
        self.d_min = float(np.dot(self.ps, self.d.min(axis=1)))

    def decoder(self, q: np.ndarray) -> np.ndarray:
        cost = np.einsum("ab,ac,ad->bcd", self.p, q, self.d)
        return np.argmin(cost, axis=2)

    def evaluate(self, q: np.ndarray, g: np.ndarray) -> Tuple[float, float]:
        rate = info.conditional_mutual_information(np.einsum("ab,ac->acb", self.p, q))
        dist = float(np.einsum("ab,ac,abc->", self.p, q, self.d[:, g]))
        return rate, dist

    def state(self, q: np.ndarray, slope: float, g: Optional[np.ndarray] = None) -> WZState:
        g = self.decoder(q) if g is None else g
        rate, dist = self.evaluate(q, g)
        return WZState(q, g, rate, dist, slope)

    def run(self, q0: np.ndarray, slope: float, tol: float, max_iter: int) -> WZState:
        q = q0
        g = self.decoder(q)
        best = np.inf
        step = np.inf
        converged = False
        for _ in range(max_iter):
            r = self.s_given_side.T @ q
            expo = self.side_given_s @ np.log2(np.maximum(r, LOG_FLOOR))
            expo = expo + slope * np.einsum("ab,abc->ac", self.side_given_s, self.d[:, g])
            expo -= expo.max(axis=1, keepdims=True)
            q = np.exp2(expo)
            q /= q.sum(axis=1, keepdims=True)
            g = self.decoder(q)
            rate, dist = self.evaluate(q, g)
            value = rate - slope * dist
            step = best - value
            if step <= tol:
                converged = True
                break
            best = value
        return WZState(q, g, rate, dist, slope, converged, float(max(step, 0.0)))

    def zero_rate(self) -> WZState:
        q = np.zeros((self.n, self.nw))
        q[:, 0] = 1.0
        return self.state(q, 0.0)

    def lossless(self, slope: float) -> WZState:
        q = np.zeros((self.n, self.nw))
        q[np.arange(self.n), np.arange(self.n)] = 1.0
        g = np.zeros((self.m, self.nw), dtype=int)
        g[:, : self.n] = np.argmin(self.d, axis=1)[None, :]
        return self.state(q, slope, g)

    def compress(self, st: WZState) -> Tuple[np.ndarray, np.ndarray]:
        """Drop unused auxiliary symbols and merge symbols decoded identically."""
        mass = self.ps @ st.q
        keep = np.flatnonzero(mass > MASS_TOL)
        groups: Dict[Tuple[int, ...], List[int]] = {}
        for w in keep:
            groups.setdefault(tuple(int(x) for x in st.g[:, w]), []).append(int(w))
        q = np.column_stack([st.q[:, ws].sum(axis=1) for ws in groups.values()])
        g = np.column_stack([np.array(key, dtype=int) for key in groups])
        return q, g


class WynerZivSolver:
    """Holds the slope sweep of one source so several targets reuse it."""

    def __init__(
        self,
        joint: JointSourcePMF,
        d: DistortionMatrix,
        which: int = 1,
        restarts: int = 4,
        seed: int = 0,
        tol: float = blahut.DEFAULT_TOL,
        max_iter: int = blahut.DEFAULT_MAX_ITER,
        slope_min: float = blahut.SLOPE_MIN,
        bisection_steps: int = blahut.BISECTION_STEPS,
        workers: Optional[int] = None,
    ) -> None:
        if restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {restarts}")
        self.problem = WZProblem(joint, d, which)
        self.which = which
        self.restarts = restarts
        self.seed = seed
        self.tol = tol
        self.max_iter = min(max_iter, AM_ITER_CAP)
        self.slope_min = slope_min
        self.bisection_steps = bisection_steps
        self.workers = workers
        self._candidates: Optional[List[WZState]] = None

    def _best(self, slope: float, starts: Sequence[np.ndarray]) -> WZState:
        runs = [self.problem.run(q0, slope, self.tol, self.max_iter) for q0 in starts]
        # min by value, ties by start index
        return min(enumerate(runs), key=lambda t: (t[1].lagrangian, t[0]))[1]

    def _sweep_at(self, k: int, slope: float) -> WZState:
        pr = self.problem
        rng = np.random.default_rng([self.seed, k])
        starts = [pr.lossless(slope).q] + [rng.dirichlet(np.ones(pr.nw), size=pr.n) for _ in range(self.restarts)]
        return self._best(slope, starts)

    def candidates(self) -> List[WZState]:
        if self._candidates is None:
            flattest = min(SWEEP_SLOPE_MIN_MAGNITUDE, -0.5 * self.slope_min)
            slopes = -np.geomspace(-self.slope_min, flattest, SWEEP_POINTS)
            swept = ordered_map(lambda ks: self._sweep_at(*ks), list(enumerate(slopes)), self.workers)
            self._candidates = [self.problem.lossless(self.slope_min)] + swept + [self.problem.zero_rate()]
            log.debug(f"WZ sweep for user {self.which}: {len(swept)} slopes x {self.restarts} restarts")
        return self._candidates

    def _bracket(self, target: float) -> Tuple[WZState, WZState]:
        cands = self.candidates()
        ds = np.array([c.distortion for c in cands])
        rs = np.array([c.rate for c in cands])
        hull = lower_hull_indices(ds, rs)
        lo = cands[hull[0]]
        for i, j in zip(hull, hull[1:]):
            if ds[j] > target:
                return cands[i], cands[j]
            lo = cands[j]
        return lo, lo

    def _resume(self, st: WZState, keep) -> WZState:
        if st.converged:
            return st
        again = self.problem.run(st.q, st.slope, self.tol, self.max_iter)
        return again if again.converged and keep(again) else st

    def _time_share(self, lo: WZState, hi: WZState, target: float) -> WZState:
        pr = self.problem
        theta = blahut.mix_weight(lo.distortion, hi.distortion, target)
        q_lo, g_lo = pr.compress(lo)
        if theta > 0.0 and hi.rate < lo.rate:
            q_hi, g_hi = pr.compress(hi)
            if q_lo.shape[1] + q_hi.shape[1] <= pr.nw:
                q = np.hstack([(1.0 - theta) * q_lo, theta * q_hi])
                g = np.hstack([g_lo, g_hi])
                return pr.state(q, 0.5 * (lo.slope + hi.slope), g)
            log.debug(f"WZ time-sharing needs {q_lo.shape[1] + q_hi.shape[1]} > {pr.nw} symbols, keeping the lower bracket")
        return pr.state(q_lo, lo.slope, g_lo)

    def at(self, target: float) -> WZResult:
        pr = self.problem
        blahut.check_target(target, pr.d_min)
        zero = pr.zero_rate()
        if target >= zero.distortion - blahut.DIST_TOL:
            q, g = pr.compress(zero)
            best = pr.state(q, 0.0, g)
        else:
            lo, hi = self._bracket(target)
            if lo is not hi and lo.slope < hi.slope:

                def solve(slope: float, a: WZState, b: WZState) -> WZState:
                    return self._best(slope, [a.q, b.q])

                lo, hi = blahut.bracket_slope(solve, lo, hi, target, self.bisection_steps, REFINE_SLOPE_TOL)
            lo = self._resume(lo, lambda s: s.distortion <= target)
            hi = self._resume(hi, lambda s: s.distortion > target)
            if not (lo.converged and hi.converged):
                step = max(lo.step, hi.step)
                log.warning(f"WZ user {self.which} D={target:.6g}: alternating minimization stopped with step {step:.3e}")
                raise ConvergenceError(
                    f"Wyner-Ziv alternating minimization did not settle at D={target:.6g} in {self.max_iter} iterations",
                    last=RDPoint(lo.distortion, lo.rate, lo.slope),
                    residual=step,
                )
            best = self._time_share(lo, hi, target)
        scheme = WZScheme(Alphabet(best.q.shape[1]), CondPMF(best.q), best.g)
        log.debug(f"WZ user {self.which} D={target:.6g}: rate {best.rate:.6g} (achieved D={best.distortion:.6g})")
        return WZResult(best.rate, scheme, best.distortion, best.slope, True)


def wz_rd(
    joint: JointSourcePMF,
    d: DistortionMatrix,
    distortion: float,
    which: int = 1,
    restarts: int = 4,
    seed: int = 0,
    **solver,
) -> WZResult:
    """Upper estimate of R_WZ(distortion) with the scheme that achieves it."""
    return WynerZivSolver(joint, d, which, restarts, seed, **solver).at(distortion)


def wz_rd_curve(
    joint: JointSourcePMF,
    d: DistortionMatrix,
    grid: Sequence[float],
    which: int = 1,
    restarts: int = 4,
    seed: int = 0,
    workers: Optional[int] = None,
    **solver,
) -> RDCurve:
    g = blahut.validate_grid(grid)
    wz = WynerZivSolver(joint, d, which, restarts, seed, workers=workers, **solver)
    wz.candidates()
    results = ordered_map(lambda D: wz.at(float(D)), g, workers)
    points = [RDPoint(float(D), res.rate, res.slope) for D, res in zip(g, results)]
    curve = blahut.envelope_curve(points, upper_estimate=True, label=f"R_WZ{which}")
    log.info(f"Computed Wyner-Ziv RD (upper estimate) for user {which} on {g.size} points")
    return curve


def wz_bruteforce_oracle(
    joint: JointSourcePMF,
    d: DistortionMatrix,
    distortion: float,
    resolution: int = 17,
    which: int = 1,
) -> float:
    """Exhaustive minimum over quantized test channels with |S|+1 auxiliary symbols.

    `resolution` is the number of grid points per simplex edge (17 means steps of 1/16).
    For each test channel the best decoder is taken per (s_other, w), which is the
    same as enumerating all decoder tables.
    """
    pr = WZProblem(joint, d, which)
    if resolution < 2:
        raise ValidationError(f"resolution must be >= 2, got {resolution}")
    blahut.check_target(distortion, pr.d_min)
    rows = simplex_grid(pr.nw, resolution - 1)
    total = len(rows) ** pr.n
    if total > ORACLE_GUARD:
        raise GridGuardError(
            f"oracle grid has {total} test channels (guard {ORACLE_GUARD}); lower the resolution"
        )
    best = np.inf
    shape = (len(rows),) * pr.n
    for start in range(0, total, ORACLE_CHUNK):
        idx = np.unravel_index(np.arange(start, min(total, start + ORACLE_CHUNK)), shape)
        q = np.stack([rows[i] for i in idx], axis=1)  # [channel, s, w]
        cost = np.einsum("ab,nac,ad->nbcd", pr.p, q, pr.d)
        dist = cost.min(axis=3).sum(axis=(1, 2))
        ok = dist <= distortion + blahut.DIST_TOL
        if not np.any(ok):
            continue
        q = q[ok]
        joint_sw = pr.ps[None, :, None] * q
        side_w = np.einsum("ab,nac->nbc", pr.p, q)
        rate = (_h_rows(side_w) - _h_rows(pr.psp[None, :])) - (_h_rows(joint_sw) - _h_rows(pr.ps[None, :]))
        best = min(best, float(rate.min()))
    if not np.isfinite(best):
        raise InfeasibleDistortionError(f"no quantized test channel reaches D={distortion:.6g}; refine the grid")
    return max(best, 0.0)


def _h_rows(arr: np.ndarray) -> np.ndarray:
    """Entropy in bits of each leading-axis slice."""
    flat = arr.reshape(arr.shape[0], -1)
    return entr(flat).sum(axis=1) / np.log(2.0)
