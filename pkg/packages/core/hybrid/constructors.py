"""
The special cases of the hybrid architecture as concrete schemes.

uncoded              U constant, X = S, posterior decoders
separate (SSCC)      U = (V, W), V ~ P_X independent of the sources, W from a
                     Wyner-Ziv (or plain rate-distortion) test channel, X = V
correlation keeping  U = (V, S), V ~ P(V|S), X = V, lossless at the other end
mixed                uncoded in one direction, separate in the other

Each constructor returns the scheme together with the reduced conditions it
is designed around; evaluate_scheme on the scheme reproduces them.
"""

from __future__ import annotations

import logging
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from packages.core.prob.joint import Factor, join
from packages.core.prob.simplex import simplex_points
from packages.core.prob.types import CondPMF, DistortionMatrix, JointSourcePMF, ProbVec, TwoWayChannel
from packages.core.rd.blahut import rd_test_channel
from packages.core.rd.conditional import conditional_d_max
from packages.core.rd.wyner_ziv import wz_rd
from packages.core.region.capacity import inner_rate_point, product_rates
from packages.core.simulate.decoders import derive_map_decoder, lift
from packages.shared.errors import ValidationError

from .evaluate import optimal_decoders
from .types import HybridScheme, ReducedConditions, condition_holds, condition_margin

log = logging.getLogger(__name__)

SSCC_VARIANTS = ("wynerziv", "independent")
SCAN_RESOLUTION = 33


class Compressor(NamedTuple):
    """Digital half of a separate scheme for one user: W test channel, decoder, rate."""

    rate: float
    test_channel: np.ndarray  # [s, w]
    decoder: np.ndarray  # [s_other, w] -> reconstruction


def _check_uncodable(src: JointSourcePMF, ch: TwoWayChannel, user: int) -> None:
    n = src.shape[user - 1]
    a = ch.input_sizes[user - 1]
    if n != a:
        raise ValidationError(f"uncoded user {user} needs |X{user}| = |S{user}|, got {a} and {n}")


def _check_inputs(ch: TwoWayChannel, inputs: Sequence[ProbVec]) -> Tuple[ProbVec, ProbVec]:
    p1, p2 = inputs
    if (p1.size, p2.size) != ch.input_sizes:
        raise ValidationError(f"input laws of sizes ({p1.size}, {p2.size}) do not match channel inputs {ch.input_sizes}")
    return p1, p2


def make_uncoded(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    rule: str = "map",
) -> HybridScheme:
    _check_uncodable(src, ch, 1)
    _check_uncodable(src, ch, 2)
    n1, n2 = src.shape
    if rule == "map" and (d1.shape[1] != n1 or d2.shape[1] != n2):
        raise ValidationError("MAP decoding needs reconstruction alphabets equal to the source alphabets")
    f1 = np.arange(n1)[None, :]
    f2 = np.arange(n2)[None, :]
    g1, g2 = derive_map_decoder(src, ch, (f1, f2), rule, d1, d2)
    return HybridScheme(
        (CondPMF.constant(n1, 1), CondPMF.constant(n2, 1)),
        (f1, f2),
        (lift(g1), lift(g2)),
        label=f"uncoded-{rule}",
    )


def compressor(
    src: JointSourcePMF,
    d: DistortionMatrix,
    distortion: float,
    user: int,
    variant: str = "wynerziv",
    **solver,
) -> Compressor:
    """Wyner-Ziv scheme for S_user with the other source at the decoder, or a plain RD test channel."""
    if variant == "wynerziv":
        res = wz_rd(src, d, distortion, which=user, **solver)
        return Compressor(res.rate, np.array(res.scheme.test_channel.rows), np.array(res.scheme.decoder))
    if variant == "independent":
        point, channel = rd_test_channel(src.marginal(user), d, distortion, **solver)
        n_other = src.shape[2 - user]
        n_hat = d.shape[1]
        # W is the reconstruction itself, side information unused
        decoder = np.tile(np.arange(n_hat), (n_other, 1))
        return Compressor(point.rate, np.array(channel.rows), decoder)
    raise ValidationError(f"unknown SSCC variant {variant!r}, expected one of {SSCC_VARIANTS}")


def _coded_user(
    comp: Compressor,
    px: ProbVec,
) -> Tuple[CondPMF, np.ndarray]:
    """U = (V, W) with u = v * |W| + w; P(u|s) = P_X(v) P(w|s) and X = V."""
    n_s, n_w = comp.test_channel.shape
    n_v = px.size
    t = (px.mass[:, None, None] * comp.test_channel.T[None, :, :])  # [v, w, s]
    t = t.reshape(n_v * n_w, n_s).T
    f = np.repeat(np.arange(n_v), n_w)[:, None] * np.ones((1, n_s), dtype=int)
    return CondPMF(t), f.astype(int)


def _wz_decoder(comp: Compressor, n_u_other: int, n_u_own: int, n_y: int) -> np.ndarray:
    """Decoder g[u_other, u_own, s_own, y] that reads W from the other user's index."""
    n_w = comp.test_channel.shape[1]
    w = np.arange(n_u_other) % n_w
    est = comp.decoder[:, w].T  # [u_other, s_own]
    return np.broadcast_to(est[:, None, :, None], (n_u_other, n_u_own, est.shape[1], n_y)).copy()


def make_sscc(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    target: Tuple[float, float],
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    variant: str = "wynerziv",
    inputs: Optional[Sequence[ProbVec]] = None,
    compressors: Optional[Tuple[Compressor, Compressor]] = None,
    **solver,
) -> Tuple[HybridScheme, ReducedConditions]:
    """Separate source-channel scheme: compress each source, send the index over independent inputs.

    With variant="independent" the reduced conditions use R(D) and match the
    evaluated conditions only for independent sources.
    """
    p1, p2 = _check_inputs(ch, inputs if inputs is not None else (ProbVec.uniform(ch.input_sizes[0]), ProbVec.uniform(ch.input_sizes[1])))
    if compressors is None:
        compressors = (
            compressor(src, d1, target[0], 1, variant, **solver),
            compressor(src, d2, target[1], 2, variant, **solver),
        )
    c1, c2 = compressors
    t1, f1 = _coded_user(c1, p1)
    t2, f2 = _coded_user(c2, p2)
    k1, k2 = t1.shape[1], t2.shape[1]
    m1, m2 = ch.output_sizes
    g1 = _wz_decoder(c2, k2, k1, m1)
    g2 = _wz_decoder(c1, k1, k2, m2)
    rates = inner_rate_point(ch, p1, p2)
    reduced = ReducedConditions(c1.rate, rates.r1, c2.rate, rates.r2)
    scheme = HybridScheme((t1, t2), (f1, f2), (g1, g2), label=f"sscc-{variant}")
    return scheme, reduced


class SsccScan(NamedTuple):
    feasible: bool
    lhs1: float
    lhs2: float
    best_margin: float
    best_inputs: Optional[Tuple[np.ndarray, np.ndarray]]
    pairs: int


def sscc_feasibility_scan(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    target: Tuple[float, float],
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    variant: str = "wynerziv",
    resolution: int = SCAN_RESOLUTION,
    **solver,
) -> SsccScan:
    """Check the separate scheme's reduced conditions over every pair of product inputs on a grid."""
    c1 = compressor(src, d1, target[0], 1, variant, **solver)
    c2 = compressor(src, d2, target[1], 2, variant, **solver)
    a, b = ch.input_sizes
    grid1 = simplex_points(a, resolution)
    grid2 = simplex_points(b, resolution)
    rates = product_rates(ch, grid1, grid2)
    ok = np.array([condition_holds(c1.rate, r1) and condition_holds(c2.rate, r2) for r1, r2 in rates])
    margins = np.array([condition_margin((c1.rate, c2.rate), (r1, r2)) for r1, r2 in rates])
    best = int(np.argmax(margins))
    i, j = divmod(best, len(grid2))
    log.info(
        f"SSCC scan ({variant}) at D={target}: lhs=({c1.rate:.4f},{c2.rate:.4f}), "
        f"{int(ok.sum())}/{len(rates)} input pairs feasible, best margin {margins[best]:.4g}"
    )
    return SsccScan(bool(ok.any()), c1.rate, c2.rate, float(margins[best]), (grid1[i], grid2[j]), len(rates))


def make_correlation_preserving(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    v_channels: Tuple[CondPMF, CondPMF],
    d1: DistortionMatrix,
    d2: DistortionMatrix,
) -> Tuple[HybridScheme, ReducedConditions]:
    """U = (V, S) with V ~ P(V|S) sent as X; each side recovers the other source exactly."""
    if not (d1.is_hamming and d2.is_hamming):
        raise ValidationError("correlation-preserving schemes are defined for Hamming distortion")
    n1, n2 = src.shape
    if d1.shape[0] != n1 or d2.shape[0] != n2:
        raise ValidationError("distortion matrices do not match the source alphabets")
    v1, v2 = v_channels
    a, b = ch.input_sizes
    if v1.shape != (n1, a) or v2.shape != (n2, b):
        raise ValidationError(f"P(V|S) tables must be ({n1}, {a}) and ({n2}, {b}), got {v1.shape} and {v2.shape}")

    def coded(v: CondPMF, n: int, n_x: int) -> Tuple[CondPMF, np.ndarray]:
        # u = v * n + w with w = s
        t = np.zeros((n, n_x * n))
        for s in range(n):
            t[s, np.arange(n_x) * n + s] = v.rows[s]
        f = np.repeat(np.arange(n_x), n)[:, None] * np.ones((1, n), dtype=int)
        return CondPMF(t), f.astype(int)

    t1, f1 = coded(v1, n1, a)
    t2, f2 = coded(v2, n2, b)
    k1, k2 = t1.shape[1], t2.shape[1]
    m1, m2 = ch.output_sizes
    g1 = np.broadcast_to((np.arange(k2) % n2)[:, None, None, None], (k2, k1, n1, m1)).copy()
    g2 = np.broadcast_to((np.arange(k1) % n1)[:, None, None, None], (k1, k2, n2, m2)).copy()

    law = join(
        Factor.prior(("s1", "s2"), src.mass),
        Factor.conditional(("s1",), ("x1",), v1.rows),
        Factor.conditional(("s2",), ("x2",), v2.rows),
        Factor.conditional(("x1", "x2"), ("y1", "y2"), ch.trans),
    )
    reduced = ReducedConditions(
        lhs1=law.entropy("s1", "s2") - law.entropy("s2"),
        rhs1=law.cmi(["x1"], ["y2"], ["x2", "s2"]),
        lhs2=law.entropy("s1", "s2") - law.entropy("s1"),
        rhs2=law.cmi(["x2"], ["y1"], ["x1", "s1"]),
    )
    scheme = HybridScheme((t1, t2), (f1, f2), (g1, g2), label="correlation-preserving")
    return scheme, reduced


def make_mixed(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    uncoded_user: int,
    target: Tuple[float, float],
    input_dist: ProbVec,
    d1: DistortionMatrix,
    d2: DistortionMatrix,
    comp: Optional[Compressor] = None,
    **solver,
) -> Tuple[HybridScheme, ReducedConditions]:
    """Uncoded transmission by `uncoded_user`, Wyner-Ziv coding by the other user.

    `input_dist` is the coded user's channel input law. Both decoders are Bayes
    decoders for the resulting joint law.
    """
    if uncoded_user not in (1, 2):
        raise ValidationError(f"uncoded_user must be 1 or 2, got {uncoded_user}")
    coded_user = 3 - uncoded_user
    _check_uncodable(src, ch, uncoded_user)
    if input_dist.size != ch.input_sizes[coded_user - 1]:
        raise ValidationError(f"input law of size {input_dist.size} does not match |X{coded_user}|")
    d_coded = d2 if coded_user == 2 else d1
    if comp is None:
        comp = compressor(src, d_coded, target[coded_user - 1], coded_user, "wynerziv", **solver)

    n_unc = src.shape[uncoded_user - 1]
    t_unc = CondPMF.constant(n_unc, 1)
    f_unc = np.arange(n_unc)[None, :]
    t_cod, f_cod = _coded_user(comp, input_dist)
    if uncoded_user == 1:
        tests, encoders = (t_unc, t_cod), (f_unc, f_cod)
    else:
        tests, encoders = (t_cod, t_unc), (f_cod, f_unc)
    decoders = optimal_decoders(src, ch, tests, encoders, d1, d2)

    # the uncoded direction carries no index; the coded index rides on X_coded against X_uncoded = S_uncoded
    p_unc = src.marginal(uncoded_user)
    if coded_user == 1:
        rhs = inner_rate_point(ch, input_dist, p_unc).r1
        reduced = ReducedConditions(comp.rate, rhs, 0.0, 0.0)
    else:
        rhs = inner_rate_point(ch, p_unc, input_dist).r2
        reduced = ReducedConditions(0.0, 0.0, comp.rate, rhs)
    scheme = HybridScheme(tests, encoders, decoders, label=f"mixed-uncoded{uncoded_user}")
    return scheme, reduced


def zero_rate_targets(src: JointSourcePMF, d1: DistortionMatrix, d2: DistortionMatrix) -> Tuple[float, float]:
    """Largest useful distortion targets: the side-information-aware constant guess levels."""
    return conditional_d_max(src, d1, 1), conditional_d_max(src, d2, 2)
