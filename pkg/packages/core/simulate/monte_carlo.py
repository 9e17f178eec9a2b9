"""
Monte Carlo transmission of i.i.d. source pairs through a hybrid scheme.

Samples come in fixed blocks of BLOCK_SIZE. Block b draws from a Philox
stream with key = seed and counter = b << 128, so every block is
reproducible on its own and the integer tallies do not depend on how many
workers ran them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from packages.core.hybrid.evaluate import evaluate_scheme
from packages.core.hybrid.types import UNREACHABLE, HybridScheme
from packages.core.parallel import ordered_map
from packages.core.prob.types import DistortionMatrix, JointSourcePMF, TwoWayChannel
from packages.shared.errors import UndefinedRowError, ValidationError

from .exact import exact_distortion

log = logging.getLogger(__name__)

BLOCK_SIZE = 65_536
COUNTER_SHIFT = 128
AGREEMENT_SIGMAS = 5.0


@dataclass
class SimResult:
    d1_hat: float
    d2_hat: float
    stderr1: float
    stderr2: float
    samples: int
    seed: int
    exact_d1: Optional[float] = None
    exact_d2: Optional[float] = None
    tally: Optional[np.ndarray] = field(default=None, repr=False)  # counts [s1, s2, y1, y2]

    @property
    def agrees(self) -> Optional[bool]:
        """Empirical means within AGREEMENT_SIGMAS standard errors of the exact values."""
        if self.exact_d1 is None or self.exact_d2 is None:
            return None
        ok = True
        for hat, err, exact in ((self.d1_hat, self.stderr1, self.exact_d1), (self.d2_hat, self.stderr2, self.exact_d2)):
            ok = ok and abs(hat - exact) <= max(AGREEMENT_SIGMAS * err, 1e-12)
        return ok

    def to_dict(self) -> dict:
        return {
            "d1_hat": self.d1_hat,
            "d2_hat": self.d2_hat,
            "stderr1": self.stderr1,
            "stderr2": self.stderr2,
            "samples": self.samples,
            "seed": self.seed,
            "exact_d1": self.exact_d1,
            "exact_d2": self.exact_d2,
            "agrees": self.agrees,
        }

    def tally_rows(self) -> List[Tuple[int, int, int, int, int]]:
        if self.tally is None:
            return []
        return [(*map(int, idx), int(c)) for idx, c in np.ndenumerate(self.tally) if c]


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=block << COUNTER_SHIFT))


def _cdf(rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise cdf and the last symbol with positive mass in each row."""
    rows = np.atleast_2d(rows)
    k = rows.shape[1]
    last = k - 1 - np.argmax(rows[:, ::-1] > 0, axis=1)
    return np.cumsum(rows, axis=1), last


def _draw(table: Tuple[np.ndarray, np.ndarray], which: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling from row `which[i]` of the table for every sample i."""
    cdf, last = table
    idx = (uniforms[:, None] >= cdf[which]).sum(axis=1)
    return np.minimum(idx, last[which])


class _Sampler:
    def __init__(self, src: JointSourcePMF, ch: TwoWayChannel, sch: HybridScheme) -> None:
        t1, t2 = sch.test_channels
        for j, (t, marg) in enumerate(((t1, src.mass.sum(axis=1)), (t2, src.mass.sum(axis=0))), start=1):
            if np.any(~t.defined & (marg > 0)):
                raise UndefinedRowError(f"test channel of user {j} has undefined rows with positive source mass")
        self.n2 = src.shape[1]
        self.m2 = ch.output_sizes[1]
        self.b = ch.input_sizes[1]
        self.src = _cdf(src.mass.ravel())
        self.u1 = _cdf(t1.rows)
        self.u2 = _cdf(t2.rows)
        self.y = _cdf(ch.trans.reshape(ch.input_sizes[0] * self.b, -1))
        self.f1, self.f2 = sch.encoders
        self.shape = sch.aux_sizes + src.shape + ch.output_sizes  # [u1, u2, s1, s2, y1, y2]

    def block(self, seed: int, block: int, n: int) -> np.ndarray:
        g = block_generator(seed, block)
        r = g.random((4, n))
        s = _draw(self.src, np.zeros(n, dtype=int), r[0])
        s1, s2 = np.divmod(s, self.n2)
        u1 = _draw(self.u1, s1, r[1])
        u2 = _draw(self.u2, s2, r[2])
        x1 = self.f1[u1, s1]
        x2 = self.f2[u2, s2]
        y = _draw(self.y, x1 * self.b + x2, r[3])
        y1, y2 = np.divmod(y, self.m2)
        flat = np.ravel_multi_index((u1, u2, s1, s2, y1, y2), self.shape)
        return np.bincount(flat, minlength=int(np.prod(self.shape))).astype(np.int64)


def _loss_tables(sch: HybridScheme, d1: DistortionMatrix, d2: DistortionMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Per-outcome losses over [u1, u2, s1, s2, y1, y2]; NaN where the decoder is undefined."""
    g1, g2 = sch.decoders  # g1[u2,u1,s1,y1] -> S2, g2[u1,u2,s2,y2] -> S1
    est2 = np.transpose(g1, (1, 0, 2, 3))[:, :, :, None, :, None]  # [u1,u2,s1,1,y1,1]
    est1 = g2[:, :, None, :, None, :]  # [u1,u2,1,s2,1,y2]
    n1, n2 = sch.source_sizes
    s1 = np.arange(n1)[None, None, :, None, None, None]
    s2 = np.arange(n2)[None, None, None, :, None, None]
    loss1 = np.where(est1 == UNREACHABLE, np.nan, d1.d[s1, np.maximum(est1, 0)])
    loss2 = np.where(est2 == UNREACHABLE, np.nan, d2.d[s2, np.maximum(est2, 0)])
    return loss1, loss2


def _moments(counts: np.ndarray, loss: np.ndarray, n: int) -> Tuple[float, float]:
    loss = np.broadcast_to(loss, counts.shape)
    hit = counts > 0
    if np.any(np.isnan(loss[hit])):
        raise UndefinedRowError("a sampled outcome reached an undefined decoder cell")
    c = counts[hit].astype(float)
    v = loss[hit]
    mean = float(np.sum(c * v) / n)
    if n < 2:
        return mean, 0.0
    var = float(np.sum(c * (v - mean) ** 2) / (n - 1))
    return mean, float(np.sqrt(var / n))


def monte_carlo(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    sch: HybridScheme,
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    samples: int,
    seed: int = 0,
    workers: Optional[int] = None,
    with_exact: bool = True,
) -> SimResult:
    if samples < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    sampler = _Sampler(src, ch, sch)
    sizes = [min(BLOCK_SIZE, samples - start) for start in range(0, samples, BLOCK_SIZE)]
    blocks = ordered_map(lambda b: sampler.block(seed, b, sizes[b]), range(len(sizes)), workers)
    counts = np.sum(blocks, axis=0).reshape(sampler.shape)

    loss1, loss2 = _loss_tables(sch, d1, d2)
    d1_hat, err1 = _moments(counts, loss1, samples)
    d2_hat, err2 = _moments(counts, loss2, samples)

    exact = (None, None)
    if with_exact:
        if sch.is_symbol_by_symbol:
            exact = exact_distortion(src, ch, sch, d1, d2)
        else:
            exact = evaluate_scheme(src, ch, sch, d1, d2).distortions
    result = SimResult(d1_hat, d2_hat, err1, err2, samples, seed, exact[0], exact[1], counts.sum(axis=(0, 1)))
    log.info(f"Monte Carlo {sch.label}: {samples} samples, D=({d1_hat:.5g}±{err1:.2g}, {d2_hat:.5g}±{err2:.2g})")
    if result.agrees is False:
        log.warning(f"Monte Carlo estimate of {sch.label} is more than {AGREEMENT_SIGMAS:g} standard errors from exact")
    return result
