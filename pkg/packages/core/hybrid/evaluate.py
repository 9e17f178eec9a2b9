"""
Exact evaluation of a hybrid scheme.

The law P(s1,s2) P(u1|s1) P(u2|s2) 1[x1=f1(u1,s1)] 1[x2=f2(u2,s2)] P(y1,y2|x1,x2)
is contracted lazily; every quantity below is a marginal of at most five of its
eight variables.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from packages.core.prob.joint import Factor, JointLaw, join
from packages.core.prob.types import CondPMF, DistortionMatrix, JointSourcePMF, TwoWayChannel
from packages.shared.errors import UndefinedRowError, ValidationError

from .types import UNREACHABLE, AchievabilityReport, HybridScheme

log = logging.getLogger(__name__)

MASS_TOL = 1e-15


def _test_channel_table(t: CondPMF, marginal: np.ndarray, user: int) -> np.ndarray:
    hit = (~t.defined) & (marginal > 0)
    if np.any(hit):
        raise UndefinedRowError(f"test channel of user {user} has undefined rows {np.flatnonzero(hit).tolist()} with positive source mass")
    # rows with no source mass never contribute; any normalized filler works
    rows = np.array(t.rows)
    rows[~t.defined, 0] = 1.0
    return rows


def build_law(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    test_channels: Tuple[CondPMF, CondPMF],
    encoders: Tuple[np.ndarray, np.ndarray],
) -> JointLaw:
    t1, t2 = test_channels
    f1, f2 = (np.asarray(f, dtype=int) for f in encoders)
    if (t1.shape[0], t2.shape[0]) != src.shape:
        raise ValidationError(f"test channels cover sources of sizes {(t1.shape[0], t2.shape[0])}, source is {src.shape}")
    if f1.shape != (t1.shape[1], t1.shape[0]) or f2.shape != (t2.shape[1], t2.shape[0]):
        raise ValidationError("encoder tables do not match the test channel shapes")
    a, b = ch.input_sizes
    rows1 = _test_channel_table(t1, src.mass.sum(axis=1), 1)
    rows2 = _test_channel_table(t2, src.mass.sum(axis=0), 2)
    return join(
        Factor.prior(("s1", "s2"), src.mass),
        Factor.conditional(("s1",), ("u1",), rows1),
        Factor.conditional(("s2",), ("u2",), rows2),
        Factor.deterministic(("u1", "s1"), "x1", f1, a),
        Factor.deterministic(("u2", "s2"), "x2", f2, b),
        Factor.conditional(("x1", "x2"), ("y1", "y2"), ch.trans),
    )


def decoder_cells(law: JointLaw, user: int) -> np.ndarray:
    """Mass over (own aux..., observation..., target source) for the decoder of `user`.

    user 1 decodes S2 from [u2, u1, s1, y1]; user 2 decodes S1 from [u1, u2, s2, y2].
    The last axis is the source being estimated.
    """
    if user == 1:
        return law.marginal("u2", "u1", "s1", "y1", "s2")
    return law.marginal("u1", "u2", "s2", "y2", "s1")


def expected_distortion(cells: np.ndarray, decoder: np.ndarray, d: DistortionMatrix, user: int) -> float:
    g = np.asarray(decoder, dtype=int)
    if g.shape != cells.shape[:-1]:
        raise ValidationError(f"decoder of user {user} has shape {g.shape}, expected {cells.shape[:-1]}")
    cell_mass = cells.sum(axis=-1)
    missing = (g == UNREACHABLE) & (cell_mass > MASS_TOL)
    if np.any(missing):
        idx = tuple(int(i) for i in np.argwhere(missing)[0])
        raise UndefinedRowError(f"decoder of user {user} is undefined at reachable cell {idx}")
    if g.max(initial=0) >= d.shape[1]:
        raise ValidationError(f"decoder of user {user} outputs symbols outside the reconstruction alphabet")
    # cost[..., s] = d[s, g[...]]
    cost = d.d[:, np.where(g >= 0, g, 0)]
    cost = np.moveaxis(cost, 0, -1)
    return float(np.sum(np.where((g >= 0)[..., None], cells * cost, 0.0)))


def bayes_decoder(cells: np.ndarray, d: DistortionMatrix) -> np.ndarray:
    """argmin over reconstructions of the expected distortion per cell; -1 where the cell has no mass."""
    risk = cells @ d.d  # [..., s_hat]
    g = np.argmin(risk, axis=-1)
    return np.where(cells.sum(axis=-1) > MASS_TOL, g, UNREACHABLE)


def evaluate_law(law: JointLaw, sch: HybridScheme, d1: DistortionMatrix, d2: DistortionMatrix) -> AchievabilityReport:
    lhs1 = law.cmi(["s1"], ["u1"], ["s2", "u2"])
    rhs1 = law.cmi(["u1"], ["y2"], ["s2", "u2"])
    lhs2 = law.cmi(["s2"], ["u2"], ["s1", "u1"])
    rhs2 = law.cmi(["u2"], ["y1"], ["s1", "u1"])
    # D1 is decided by user 2, D2 by user 1
    dist1 = expected_distortion(decoder_cells(law, 2), sch.decoders[1], d1, 2)
    dist2 = expected_distortion(decoder_cells(law, 1), sch.decoders[0], d2, 1)
    return AchievabilityReport.from_quantities(lhs1, rhs1, lhs2, rhs2, dist1, dist2, sch.label)


def evaluate_scheme(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    sch: HybridScheme,
    d1: DistortionMatrix,
    d2: DistortionMatrix,
) -> AchievabilityReport:
    if sch.decoders[0].shape[3] != ch.output_sizes[0] or sch.decoders[1].shape[3] != ch.output_sizes[1]:
        raise ValidationError("decoder tables do not match the channel output alphabets")
    if d1.shape[0] != src.shape[0] or d2.shape[0] != src.shape[1]:
        raise ValidationError("distortion matrices do not match the source alphabets")
    law = build_law(src, ch, sch.test_channels, sch.encoders)
    report = evaluate_law(law, sch, d1, d2)
    log.debug(
        f"scheme {sch.label}: lhs=({report.lhs1:.4f},{report.lhs2:.4f}) rhs=({report.rhs1:.4f},{report.rhs2:.4f}) "
        f"D=({report.d1:.4g},{report.d2:.4g})"
    )
    return report


def optimal_decoders(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    test_channels: Tuple[CondPMF, CondPMF],
    encoders: Tuple[np.ndarray, np.ndarray],
    d1: DistortionMatrix,
    d2: DistortionMatrix,
) -> Tuple[np.ndarray, np.ndarray]:
    """Minimum-expected-distortion decoders (g1, g2), lowest index on ties."""
    law = build_law(src, ch, test_channels, encoders)
    return bayes_decoder(decoder_cells(law, 1), d2), bayes_decoder(decoder_cells(law, 2), d1)


def with_optimal_decoders(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    test_channels: Tuple[CondPMF, CondPMF],
    encoders: Tuple[np.ndarray, np.ndarray],
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    label: str = "custom",
) -> HybridScheme:
    g1, g2 = optimal_decoders(src, ch, test_channels, encoders, d1, d2)
    return HybridScheme(test_channels, encoders, (g1, g2), label=label)
