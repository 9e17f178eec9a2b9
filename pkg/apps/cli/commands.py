"""
Command implementations. Each returns the process exit code.
"""

from __future__ import annotations

import logging
import sys
from typing import Optional, Sequence, Tuple

import numpy as np

from packages.core.converse.bounds import theorem3_region
from packages.core.hybrid.constructors import make_mixed, make_uncoded, sscc_feasibility_scan
from packages.core.hybrid.evaluate import evaluate_scheme
from packages.core.hybrid.search import search_hybrid
from packages.core.prob.types import ProbVec
from packages.core.rd.blahut import default_grid, rd_curve
from packages.core.rd.conditional import conditional_d_max, conditional_rd_curve
from packages.core.rd.wyner_ziv import wz_rd_curve
from packages.core.region.capacity import inner_region, outer_region, regions_coincide
from packages.core.region.types import RegionBoundary
from packages.core.simulate.exact import exact_distortion
from packages.core.simulate.monte_carlo import monte_carlo
from packages.shared.config import Model, ModelFile, RunConfig
from packages.shared.errors import ValidationError
from packages.shared.models import canned
from packages.shared.store import load_scheme

from .output import emit, sibling, to_csv, to_json

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_INFEASIBLE = 3

EXACT_TOL = 1e-12
MIXED_TOL = 1e-9


def _side_info_grid(model: Model, user: int, n: int) -> np.ndarray:
    if n < 1:
        raise ValidationError(f"grid needs at least one point, got {n}")
    d = model.d1 if user == 1 else model.d2
    lo = d.d_min(model.source.marginal(user).mass)
    return np.linspace(lo, conditional_d_max(model.source, d, user), n)


def cmd_rd(model: Model, cfg: RunConfig, out: Optional[str], user: int = 1) -> int:
    d = model.d1 if user == 1 else model.d2
    p = model.source.marginal(user)
    curve = rd_curve(p, d, default_grid(p.mass, d, cfg.grid), cfg.threads, **cfg.to_solver_kwargs())
    emit(curve.to_csv(), out)
    return EXIT_OK


def cmd_cond_rd(model: Model, cfg: RunConfig, out: Optional[str], user: int = 1) -> int:
    d = model.d1 if user == 1 else model.d2
    grid = _side_info_grid(model, user, cfg.grid)
    curve = conditional_rd_curve(model.source, d, grid, user, cfg.threads, **cfg.to_solver_kwargs())
    emit(curve.to_csv(), out)
    return EXIT_OK


def cmd_wz_rd(model: Model, cfg: RunConfig, out: Optional[str], user: int = 1) -> int:
    d = model.d1 if user == 1 else model.d2
    grid = _side_info_grid(model, user, cfg.grid)
    curve = wz_rd_curve(model.source, d, grid, user, cfg.restarts, cfg.seed, cfg.threads, **cfg.to_solver_kwargs())
    emit(curve.to_csv(), out)
    return EXIT_OK


def _region_csv(region: RegionBoundary) -> str:
    return to_csv(("kind", "x", "y"), region.rows())


def cmd_capacity(model: Model, cfg: RunConfig, out: Optional[str], bound: str = "inner") -> int:
    """One kind,x,y CSV per bound; with --bound both the outer one goes next to --out as <stem>.outer.csv."""
    if bound not in ("inner", "outer", "both"):
        raise ValidationError(f"bound must be inner, outer or both, got {bound!r}")
    ch = model.channel
    inner = inner_region(ch, cfg.resolution, cfg.seed)
    if bound == "inner":
        emit(_region_csv(inner), out)
        return EXIT_OK
    outer = outer_region(ch, cfg.resolution, cfg.restarts, cfg.seed, cfg.lambda_points, cfg.threads, inner=inner)
    if bound == "outer":
        emit(_region_csv(outer), out)
        return EXIT_OK
    emit(_region_csv(inner), out)
    emit(_region_csv(outer), sibling(out, "outer"))
    gap = inner.hausdorff(outer)
    print(f"hausdorff_gap={gap!r} coincide={gap <= cfg.tol_region}", file=sys.stderr)
    return EXIT_OK


def parse_pair(text: str) -> Tuple[float, float]:
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise ValidationError(f"expected a pair D1,D2, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ValidationError(f"expected a pair of numbers D1,D2, got {text!r}")


def cmd_hybrid(
    model: Model,
    cfg: RunConfig,
    out: Optional[str],
    scheme: Optional[str] = None,
    target: Optional[Sequence[float]] = None,
) -> int:
    src, ch, d1, d2 = model.parts
    if scheme is not None:
        sch = model.schemes[scheme] if scheme in model.schemes else load_scheme(scheme)
        report = evaluate_scheme(src, ch, sch, d1, d2)
        emit(to_json({"report": report.to_dict(), "scheme": sch.to_dict()}), out)
        return EXIT_OK if report.feasible else EXIT_INFEASIBLE
    if target is None:
        raise ValidationError("hybrid needs --scheme or --target")
    res = search_hybrid(src, ch, d1, d2, target, **cfg.to_search_kwargs())
    emit(
        to_json(
            {
                "found": res.found,
                "target": list(target),
                "evaluations": res.evaluations,
                "stage": res.stage,
                "exhausted": res.exhausted,
                "report": res.report.to_dict() if res.report is not None else None,
                "scheme": res.scheme.to_dict() if res.scheme is not None else None,
            }
        ),
        out,
    )
    return EXIT_OK if res.found else EXIT_INFEASIBLE


def cmd_region(model: Model, cfg: RunConfig, out: Optional[str]) -> int:
    src, ch, d1, d2 = model.parts
    report = theorem3_region(
        src,
        ch,
        d1,
        d2,
        cfg.rate_ratio,
        tol_hyp=cfg.tol_hyp,
        grid=cfg.grid,
        tol_region=cfg.tol_region,
        **cfg.to_region_kwargs(),
        **cfg.to_solver_kwargs(),
    )
    emit(to_json(report.to_dict()), out)
    return EXIT_OK


def example1_report(cfg: RunConfig) -> dict:
    """End-to-end reproduction on the worked binary example."""
    model = canned("example1")
    src, ch, d1, d2 = model.parts
    solver = cfg.to_solver_kwargs()

    uncoded = make_uncoded(src, ch, d1, d2, "map")
    exact = exact_distortion(src, ch, uncoded, d1, d2)
    uncoded_ok = abs(exact[0]) <= EXACT_TOL and abs(exact[1] - 1 / 30) <= EXACT_TOL

    mc = None
    if cfg.samples > 0:
        mc = monte_carlo(src, ch, uncoded, d1, d2, cfg.samples, cfg.seed, cfg.threads)

    mixed, mixed_reduced = make_mixed(src, ch, 1, (0.0, 0.0), ProbVec.uniform(2), d1, d2, **solver)
    mixed_report = evaluate_scheme(src, ch, mixed, d1, d2)

    scan = sscc_feasibility_scan(src, ch, (0.0, 0.0), d1, d2, "wynerziv", 33, **solver)

    coin = regions_coincide(ch, cfg.tol_region, cfg.resolution, cfg.restarts, cfg.seed, cfg.threads, cfg.lambda_points)

    # the mixed scheme should land on (1/6, 0)
    mixed_on_target = abs(mixed_report.d1 - 1 / 6) <= MIXED_TOL and abs(mixed_report.d2) <= MIXED_TOL

    checks = {
        "uncoded_exact": uncoded_ok,
        "monte_carlo_agrees": None if mc is None else bool(mc.agrees),
        "mixed_feasible": bool(mixed_report.feasible),
        "mixed_distortions": bool(mixed_on_target),
        "sscc_impossible_at_zero": not scan.feasible,
        "capacity_bounds_coincide": bool(coin.gap <= cfg.tol_region),
    }
    return {
        "model": ModelFile.from_model(model).model_dump(exclude={"schemes"}),
        "uncoded": {"distortions": list(exact), "scheme": uncoded.to_dict()},
        "monte_carlo": None if mc is None else mc.to_dict(),
        "mixed": {"report": mixed_report.to_dict(), "reduced": mixed_reduced.to_dict(), "scheme": mixed.to_dict()},
        "sscc_scan": {
            "feasible": scan.feasible,
            "lhs1": scan.lhs1,
            "lhs2": scan.lhs2,
            "best_margin": scan.best_margin,
            "pairs": scan.pairs,
        },
        "capacity": {"hausdorff_gap": coin.gap, "coincide": coin.coincide},
        "checks": checks,
    }


def cmd_example1(cfg: RunConfig, out: Optional[str]) -> int:
    report = example1_report(cfg)
    emit(to_json(report), out)
    failed = [k for k, v in report["checks"].items() if v is False]
    if failed:
        log.warning(f"example1 checks failed: {', '.join(failed)}")
        return EXIT_NUMERICAL
    return EXIT_OK
