"""
Search for a hybrid scheme meeting a target distortion pair.

Stage "uncoded" enumerates every pair of deterministic symbol maps with
constant U and Bayes decoders. Stage "constructors" runs the special-case
constructors over a coarse grid of their free parameters. Stage "ascent"
perturbs test channels and encoders one user at a time, keeping moves that
improve the ranking. Candidates are ranked by (meets target, distortions
within target, margin); ties go to the earlier candidate.
"""

from __future__ import annotations

import itertools
import logging
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from packages.core.parallel import ordered_map
from packages.core.prob.simplex import simplex_points
from packages.core.prob.types import CondPMF, DistortionMatrix, JointSourcePMF, ProbVec, TwoWayChannel
from packages.core.region.types import TOWARD_INFINITY, RegionBoundary
from packages.shared.errors import InfeasibleDistortionError, TwjsccError, ValidationError

from .constructors import (
    SSCC_VARIANTS,
    compressor,
    make_correlation_preserving,
    make_mixed,
    make_sscc,
)
from .evaluate import build_law, evaluate_law, with_optimal_decoders
from .types import STRICT_TOL, AchievabilityReport, HybridScheme, SearchResult

log = logging.getLogger(__name__)

MAX_UNCODED_MAPS = 4096
MAX_V_MAPS = 64
CONSTRUCTOR_RESOLUTION = 5
ASCENT_STEPS = 40
ASCENT_MIX = 0.3
BATCH = 64

Candidate = Tuple[AchievabilityReport, HybridScheme]


def aux_bound(src: JointSourcePMF, ch: TwoWayChannel, user: int) -> int:
    """|U_j| <= |S_j| |X_j| + 2, a heuristic cap for the ascent stage."""
    return src.shape[user - 1] * ch.input_sizes[user - 1] + 2


def rank(report: AchievabilityReport, target: Tuple[float, float]) -> Tuple[bool, bool, float]:
    within = report.d1 <= target[0] + STRICT_TOL and report.d2 <= target[1] + STRICT_TOL
    return (report.meets(target), within, report.margin)


class _Search:
    def __init__(
        self,
        src: JointSourcePMF,
        ch: TwoWayChannel,
        d1: DistortionMatrix,
        d2: DistortionMatrix,
        target: Tuple[float, float],
        budget: int,
        workers: Optional[int],
    ) -> None:
        self.src, self.ch, self.d1, self.d2 = src, ch, d1, d2
        self.target = target
        self.budget = budget
        self.workers = workers
        self.evaluations = 0
        self.exhausted = False
        self.best: Optional[Candidate] = None
        self.best_stage = ""
        self.feasible_points: List[Tuple[float, float]] = []

    @property
    def left(self) -> int:
        return self.budget - self.evaluations

    def evaluate(self, sch: HybridScheme) -> Optional[Candidate]:
        try:
            law = build_law(self.src, self.ch, sch.test_channels, sch.encoders)
            return evaluate_law(law, sch, self.d1, self.d2), sch
        except TwjsccError as exc:
            log.debug(f"skipping candidate {sch.label}: {exc}")
            return None

    def offer(self, cand: Optional[Candidate], stage: str) -> bool:
        """Record a candidate; True when it became the incumbent."""
        if cand is None:
            return False
        report, _ = cand
        if report.feasible:
            self.feasible_points.append(report.distortions)
        if self.best is None or rank(report, self.target) > rank(self.best[0], self.target):
            self.best = cand
            self.best_stage = stage
            return True
        return False

    def run_batch(self, builders: Iterable[Callable[[], Optional[HybridScheme]]], stage: str) -> None:
        """Build and evaluate candidates in order, in parallel chunks, within the budget."""
        it = iter(builders)
        while True:
            if self.left <= 0:
                self.exhausted = True
                return
            chunk = list(itertools.islice(it, min(BATCH, self.left)))
            if not chunk:
                return

            def build_and_evaluate(build: Callable[[], Optional[HybridScheme]]) -> Optional[Candidate]:
                try:
                    sch = build()
                except TwjsccError as exc:
                    log.debug(f"constructor failed: {exc}")
                    return None
                return None if sch is None else self.evaluate(sch)

            for cand in ordered_map(build_and_evaluate, chunk, self.workers):
                self.evaluations += 1
                self.offer(cand, stage)


def _deterministic_maps(n_in: int, n_out: int) -> Iterator[np.ndarray]:
    for table in itertools.product(range(n_out), repeat=n_in):
        yield np.array(table, dtype=int)


def _uncoded_builders(s: _Search) -> Iterator[Callable[[], HybridScheme]]:
    n1, n2 = s.src.shape
    a, b = s.ch.input_sizes
    if a**n1 * b**n2 > MAX_UNCODED_MAPS:
        log.info(f"uncoded stage skipped: {a**n1 * b**n2} encoder pairs exceed {MAX_UNCODED_MAPS}")
        return
    tests = (CondPMF.constant(n1, 1), CondPMF.constant(n2, 1))
    for f1 in _deterministic_maps(n1, a):
        for f2 in _deterministic_maps(n2, b):

            def build(f1=f1, f2=f2) -> HybridScheme:
                return with_optimal_decoders(s.src, s.ch, tests, (f1[None], f2[None]), s.d1, s.d2, label="uncoded-search")

            yield build


def _input_grid(n: int) -> List[ProbVec]:
    return [ProbVec(p) for p in simplex_points(n, CONSTRUCTOR_RESOLUTION)]


def _constructor_builders(s: _Search, solver: dict) -> Iterator[Callable[[], Optional[HybridScheme]]]:
    src, ch, d1, d2, target = s.src, s.ch, s.d1, s.d2, s.target
    a, b = ch.input_sizes
    grid1, grid2 = _input_grid(a), _input_grid(b)

    for variant in SSCC_VARIANTS:
        try:
            comps = (
                compressor(src, d1, target[0], 1, variant, **solver),
                compressor(src, d2, target[1], 2, variant, **solver),
            )
        except TwjsccError as exc:
            log.debug(f"sscc-{variant} skipped: {exc}")
            continue
        for p1, p2 in itertools.product(grid1, grid2):
            yield lambda p1=p1, p2=p2, comps=comps, variant=variant: make_sscc(
                src, ch, target, d1, d2, variant, (p1, p2), comps
            )[0]

    if d1.is_hamming and d2.is_hamming:
        n1, n2 = src.shape
        v1 = [CondPMF.from_map(m, a) for m in itertools.islice(_deterministic_maps(n1, a), MAX_V_MAPS)] + [CondPMF(np.tile(p.mass, (n1, 1))) for p in grid1]
        v2 = [CondPMF.from_map(m, b) for m in itertools.islice(_deterministic_maps(n2, b), MAX_V_MAPS)] + [CondPMF(np.tile(p.mass, (n2, 1))) for p in grid2]
        for c1, c2 in itertools.product(v1, v2):
            yield lambda c1=c1, c2=c2: make_correlation_preserving(src, ch, (c1, c2), d1, d2)[0]

    for uncoded in (1, 2):
        coded = 3 - uncoded
        if src.shape[uncoded - 1] != ch.input_sizes[uncoded - 1]:
            continue
        try:
            comp = compressor(src, d2 if coded == 2 else d1, target[coded - 1], coded, "wynerziv", **solver)
        except TwjsccError as exc:
            log.debug(f"mixed scheme with user {uncoded} uncoded skipped: {exc}")
            continue
        for p in grid2 if coded == 2 else grid1:
            yield lambda p=p, uncoded=uncoded, comp=comp: make_mixed(src, ch, uncoded, target, p, d1, d2, comp)[0]


def _random_scheme(s: _Search, rng: np.random.Generator) -> HybridScheme:
    tests, encoders = [], []
    for user in (1, 2):
        n = s.src.shape[user - 1]
        a = s.ch.input_sizes[user - 1]
        k = int(rng.integers(1, aux_bound(s.src, s.ch, user) + 1))
        tests.append(CondPMF(rng.dirichlet(np.ones(k), size=n)))
        encoders.append(rng.integers(0, a, size=(k, n)))
    return with_optimal_decoders(s.src, s.ch, tuple(tests), tuple(encoders), s.d1, s.d2, label="ascent")


def _perturb(s: _Search, sch: HybridScheme, rng: np.random.Generator) -> HybridScheme:
    user = int(rng.integers(0, 2))
    tests = list(sch.test_channels)
    encoders = [np.array(f) for f in sch.encoders]
    t = tests[user]
    n, k = t.shape
    if k > 1 and rng.random() < 0.5:
        rows = (1.0 - ASCENT_MIX) * t.rows + ASCENT_MIX * rng.dirichlet(np.ones(k), size=n)
        tests[user] = CondPMF(rows, t.defined)
    else:
        a = s.ch.input_sizes[user]
        u, sym = int(rng.integers(0, k)), int(rng.integers(0, n))
        encoders[user][u, sym] = int(rng.integers(0, a))
    return with_optimal_decoders(s.src, s.ch, tuple(tests), tuple(encoders), s.d1, s.d2, label="ascent")


def _ascent(s: _Search, seed: int) -> None:
    restart = 0
    while s.left > 0:
        rng = np.random.default_rng([seed, restart])
        if restart == 0 and s.best is not None:
            current = s.best
        else:
            current = s.evaluate(_random_scheme(s, rng))
            s.evaluations += 1
            s.offer(current, "ascent")
        for _ in range(ASCENT_STEPS):
            if s.left <= 0 or current is None:
                break
            cand = s.evaluate(_perturb(s, current[1], rng))
            s.evaluations += 1
            s.offer(cand, "ascent")
            if cand is not None and rank(cand[0], s.target) > rank(current[0], s.target):
                current = cand
        restart += 1
    s.exhausted = True


def search_hybrid(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    target: Sequence[float],
    budget: int = 2000,
    seed: int = 0,
    workers: Optional[int] = None,
    **solver,
) -> SearchResult:
    """Best scheme found within `budget` evaluations; `found` is False when none meets the target."""
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    target = (float(target[0]), float(target[1]))
    if min(target) < 0:
        raise InfeasibleDistortionError(f"target distortions must be >= 0, got {target}")
    s = _Search(src, ch, d1, d2, target, budget, workers)

    s.run_batch(_uncoded_builders(s), "uncoded")
    if s.left > 0:
        s.run_batch(_constructor_builders(s, solver), "constructors")
    if s.left > 0:
        _ascent(s, seed)

    found = s.best is not None and s.best[0].meets(target)
    report, scheme = s.best if s.best is not None else (None, None)
    if found:
        log.info(f"search: {scheme.label} meets D={target} with margin {report.margin:.4g} ({s.evaluations} evaluations)")
    else:
        log.info(f"search: no scheme meets D={target} in {s.evaluations} evaluations")
    return SearchResult(report, scheme, found, s.evaluations, s.best_stage, s.exhausted, s.feasible_points)


def achievable_region(
    reports: Iterable[AchievabilityReport],
    corner: Optional[Tuple[float, float]] = None,
) -> RegionBoundary:
    """Convex closure (time sharing) of the feasible distortion pairs, closed toward larger distortions."""
    points = [r.distortions for r in reports if r.feasible]
    return RegionBoundary(np.array(points, dtype=float).reshape(-1, 2), TOWARD_INFINITY, corner)
