from __future__ import annotations

import numpy as np
import pytest

from packages.core.prob.info import binary_entropy
from packages.core.prob.types import DistortionMatrix, JointSourcePMF, ProbVec
from packages.core.rd.blahut import ba_rd, default_grid, rd_at, rd_curve, rd_inverse, rd_test_channel
from packages.core.rd.conditional import conditional_d_max, conditional_rd, conditional_rd_curve
from packages.core.rd.types import RDCurve, RDPoint
from packages.core.rd.wyner_ziv import wz_bruteforce_oracle, wz_rd, wz_rd_curve
from packages.shared.errors import ConvergenceError, InfeasibleDistortionError, ValidationError
from packages.shared.models import dsbs, example1_source, uniform_independent

HAMMING = DistortionMatrix.hamming(2)
UNIFORM = ProbVec.uniform(2)


def closed_form(D: float) -> float:
    return 1.0 - binary_entropy(D) if D < 0.5 else 0.0


def test_binary_rd_at_point_one():
    assert rd_at(UNIFORM, HAMMING, 0.1).rate == pytest.approx(closed_form(0.1), abs=1e-4)


def test_lossless_point_is_source_entropy():
    p = ProbVec(np.array([2 / 3, 1 / 3]))
    assert rd_at(p, HAMMING, 0.0).rate == pytest.approx(binary_entropy(1 / 3), abs=1e-4)


def test_zero_rate_at_d_max():
    p = ProbVec(np.array([0.7, 0.2, 0.1]))
    d = DistortionMatrix.hamming(3)
    assert rd_at(p, d, d.d_max(p.mass)).rate == 0.0
    assert ba_rd(p, d, 0.0).rate == 0.0


def test_test_channel_meets_target():
    pt, channel = rd_test_channel(UNIFORM, HAMMING, 0.2)
    achieved = float(np.sum(UNIFORM.mass[:, None] * channel.rows * HAMMING.d))
    assert achieved <= 0.2 + 1e-9
    assert pt.rate == pytest.approx(closed_form(0.2), abs=1e-4)


def test_binary_curve_matches_closed_form():
    grid = np.linspace(0.0, 0.5, 11)
    curve = rd_curve(UNIFORM, HAMMING, grid, workers=2)
    for D, R in zip(curve.distortions, curve.rates):
        assert R == pytest.approx(closed_form(D), abs=1e-4)
    assert curve.rates[-1] == 0.0
    assert "D,R,slope" == curve.to_csv().splitlines()[0]


def test_singleton_grid():
    curve = rd_curve(UNIFORM, HAMMING, [0.0])
    assert len(curve.points) == 1
    assert curve.rates[0] == pytest.approx(1.0, abs=1e-9)


def test_empty_grid_is_rejected():
    with pytest.raises(ValidationError):
        rd_curve(UNIFORM, HAMMING, [])
    with pytest.raises(ValidationError):
        default_grid(UNIFORM.mass, HAMMING, 0)


def test_negative_target_is_infeasible():
    with pytest.raises(InfeasibleDistortionError):
        rd_at(UNIFORM, HAMMING, -0.1)


def test_ba_rd_rejects_positive_slope():
    with pytest.raises(ValidationError):
        ba_rd(UNIFORM, HAMMING, 1.0)


def test_ba_rd_carries_last_iterate_on_non_convergence():
    p = ProbVec(np.array([0.8, 0.15, 0.05]))
    d = DistortionMatrix(np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]))
    with pytest.raises(ConvergenceError) as err:
        ba_rd(p, d, -2.0, tol=1e-14, max_iter=1)
    assert isinstance(err.value.last, RDPoint)
    assert err.value.diagnostic()["residual"] > 0


def test_ba_rd_supporting_line():
    slope = -3.0
    pt = ba_rd(UNIFORM, HAMMING, slope)
    curve = rd_curve(UNIFORM, HAMMING, np.linspace(0.0, 0.5, 26))
    value = pt.rate - slope * pt.distortion
    for D, R in zip(curve.distortions, curve.rates):
        assert R - slope * D >= value - 1e-6


def test_curve_rejects_increasing_rates():
    with pytest.raises(ValidationError):
        RDCurve([RDPoint(0.0, 0.5, -1.0), RDPoint(0.1, 0.6, -1.0)])


def test_conditional_rd_dsbs():
    value = conditional_rd(dsbs(0.2), HAMMING, 0.05)
    assert value == pytest.approx(binary_entropy(0.2) - binary_entropy(0.05), abs=1e-3)


def test_conditional_rd_independent_equals_standard():
    src = uniform_independent()
    assert conditional_rd(src, HAMMING, 0.1) == pytest.approx(rd_at(UNIFORM, HAMMING, 0.1).rate, abs=1e-6)


def test_conditional_rd_example1_lossless():
    assert conditional_rd(example1_source(), HAMMING, 0.0) == pytest.approx(2 / 3, abs=1e-4)
    assert conditional_rd(example1_source(), HAMMING, 0.0, which=2) == pytest.approx(2 / 3, abs=1e-4)


def test_side_information_never_hurts():
    src = dsbs(0.2)
    for D in (0.0, 0.05, 0.1, 0.15):
        assert conditional_rd(src, HAMMING, D) <= rd_at(src.marginal(1), HAMMING, D).rate + 1e-6


def test_conditional_curve_ends_at_zero():
    src = dsbs(0.2)
    d_max = conditional_d_max(src, HAMMING)
    assert d_max == pytest.approx(0.2)
    curve = conditional_rd_curve(src, HAMMING, np.linspace(0.0, d_max, 5))
    assert curve.rates[-1] == pytest.approx(0.0, abs=1e-9)


def test_wz_independent_matches_standard_rd():
    res = wz_rd(uniform_independent(), HAMMING, 0.1, restarts=4, seed=0)
    standard = rd_at(UNIFORM, HAMMING, 0.1).rate
    assert res.upper_estimate
    assert res.rate >= standard - 1e-6
    assert res.rate == pytest.approx(standard, abs=5e-3)
    assert res.scheme.aux.size <= 3


def test_wz_zero_at_d_max():
    src = dsbs(0.25)
    res = wz_rd(src, HAMMING, conditional_d_max(src, HAMMING))
    assert res.rate == pytest.approx(0.0, abs=1e-9)


def test_wz_gap_over_conditional_on_dsbs():
    src = dsbs(0.25)
    wz = wz_rd(src, HAMMING, 0.1, restarts=4, seed=0).rate
    cond = conditional_rd(src, HAMMING, 0.1)
    assert wz >= cond - 1e-6
    assert wz - cond > 5e-3


def test_wz_close_to_oracle():
    src = dsbs(0.25)
    wz = wz_rd(src, HAMMING, 0.1, restarts=4, seed=0).rate
    oracle = wz_bruteforce_oracle(src, HAMMING, 0.1, resolution=17)
    assert wz <= oracle + 0.02


def test_oracle_lossless_independent():
    assert wz_bruteforce_oracle(uniform_independent(), HAMMING, 0.0, resolution=9) == pytest.approx(1.0, abs=1e-9)


def test_wz_is_deterministic_given_seed():
    src = dsbs(0.25)
    a = wz_rd(src, HAMMING, 0.08, restarts=3, seed=11)
    b = wz_rd(src, HAMMING, 0.08, restarts=3, seed=11)
    assert a.rate == b.rate


def test_wz_curve_is_flagged_upper_estimate():
    src = dsbs(0.25)
    curve = wz_rd_curve(src, HAMMING, np.linspace(0.0, 0.25, 4), restarts=2, workers=1)
    assert curve.upper_estimate
    assert np.all(np.diff(curve.rates) <= 1e-9)


def test_rd_inverse():
    curve = rd_curve(UNIFORM, HAMMING, np.linspace(0.0, 0.5, 11))
    assert rd_inverse(curve, closed_form(0.1)) == pytest.approx(0.1, abs=1e-3)
    assert rd_inverse(curve, 1.5) == 0.0
    assert rd_inverse(curve, 0.0) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        rd_inverse(RDCurve([]), 0.3)


def test_rd_inverse_below_the_last_grid_rate():
    # a user grid that stops before D_max; R only falls further to the right
    curve = RDCurve([RDPoint(0.0, 0.5, -2.0), RDPoint(0.2, 0.05, -1.0)])
    assert rd_inverse(curve, 0.05) == pytest.approx(0.2)
    assert rd_inverse(curve, 0.0) == pytest.approx(0.2)
    assert rd_inverse(curve, 0.01) == pytest.approx(0.2)


def random_joint(seed: int) -> JointSourcePMF:
    rng = np.random.default_rng(seed)
    return JointSourcePMF(rng.dirichlet(np.ones(4)).reshape(2, 2))


def test_rd_curve_raises_when_iterations_run_out():
    p = ProbVec(np.array([2 / 3, 1 / 3]))
    with pytest.raises(ConvergenceError) as err:
        rd_curve(p, HAMMING, [0.1, 0.2], tol=1e-12, max_iter=1)
    assert err.value.last.distortion == pytest.approx(0.1)
    assert err.value.residual > 1e-12


def test_rd_at_converges_with_the_default_budget():
    p = ProbVec(np.array([2 / 3, 1 / 3]))
    assert rd_at(p, HAMMING, 0.1).rate == pytest.approx(binary_entropy(1 / 3) - binary_entropy(0.1), abs=1e-4)


def test_conditional_rd_raises_when_iterations_run_out():
    with pytest.raises(ConvergenceError) as err:
        conditional_rd(dsbs(0.25), HAMMING, 0.1, tol=1e-12, max_iter=1)
    assert isinstance(err.value.last, RDPoint)
    assert err.value.diagnostic()["error"] == "convergence"


def test_wz_rd_raises_when_iterations_run_out():
    with pytest.raises(ConvergenceError) as err:
        wz_rd(dsbs(0.25), HAMMING, 0.1, restarts=1, tol=1e-12, max_iter=1)
    assert err.value.residual > 0


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_wz_close_to_oracle_on_random_joints(seed):
    src = random_joint(seed)
    D = 0.5 * conditional_d_max(src, HAMMING)
    wz = wz_rd(src, HAMMING, D, restarts=4, seed=0).rate
    oracle = wz_bruteforce_oracle(src, HAMMING, D, resolution=17)
    assert wz <= oracle + 0.02


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_wz_never_beats_conditional_on_random_joints(seed):
    src = random_joint(100 + seed)
    for which in (1, 2):
        D = 0.5 * conditional_d_max(src, HAMMING, which)
        wz = wz_rd(src, HAMMING, D, which=which, restarts=1, seed=seed).rate
        assert wz >= conditional_rd(src, HAMMING, D, which=which) - 1e-6
