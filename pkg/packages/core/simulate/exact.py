from __future__ import annotations

import itertools
import logging
from typing import Tuple

from packages.core.hybrid.types import UNREACHABLE, HybridScheme
from packages.core.prob.types import DistortionMatrix, JointSourcePMF, TwoWayChannel
from packages.shared.errors import UndefinedRowError, ValidationError

log = logging.getLogger(__name__)


def require_symbol_by_symbol(sch: HybridScheme) -> None:
    if not sch.is_symbol_by_symbol:
        raise ValidationError(f"scheme {sch.label} has auxiliary alphabets {sch.aux_sizes}; only singleton U is simulated")


def exact_distortion(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    sch: HybridScheme,
    d1: DistortionMatrix,
    d2: DistortionMatrix,
) -> Tuple[float, float]:
    """E[d1(S1, S1_hat)], E[d2(S2, S2_hat)] by enumerating every (s1, s2, y1, y2)."""
    require_symbol_by_symbol(sch)
    f1, f2 = sch.encoders[0][0], sch.encoders[1][0]
    g1, g2 = sch.decoders[0][0, 0], sch.decoders[1][0, 0]
    n1, n2 = src.shape
    m1, m2 = ch.output_sizes
    if g1.shape != (n1, m1) or g2.shape != (n2, m2):
        raise ValidationError("decoder tables do not match the source and output alphabets")

    total1 = total2 = 0.0
    for s1, s2, y1, y2 in itertools.product(range(n1), range(n2), range(m1), range(m2)):
        p = src.mass[s1, s2] * ch.trans[f1[s1], f2[s2], y1, y2]
        if p == 0.0:
            continue
        est2, est1 = g1[s1, y1], g2[s2, y2]
        if est1 == UNREACHABLE or est2 == UNREACHABLE:
            raise UndefinedRowError(f"decoder undefined at reachable outcome s=({s1},{s2}) y=({y1},{y2})")
        total1 += p * d1.d[s1, est1]
        total2 += p * d2.d[s2, est2]
    log.debug(f"exact distortion of {sch.label}: ({total1:.6g}, {total2:.6g})")
    return float(total1), float(total2)
