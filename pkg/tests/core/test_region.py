from __future__ import annotations

import numpy as np
import pytest

from packages.core.prob.info import binary_entropy
from packages.core.prob.types import ProbVec, TwoWayChannel
from packages.core.region.capacity import (
    inner_rate_point,
    inner_region,
    max_rates,
    outer_rate_point,
    outer_region,
    regions_coincide,
)
from packages.core.region.types import TOWARD_INFINITY, RatePair, RegionBoundary
from packages.shared.errors import ValidationError
from packages.shared.models import (
    additive_channel,
    crossover_channel,
    example1_channel,
    multiplying_channel,
    pure_noise_channel,
)

CLEAN = 1.0 - binary_entropy(0.05)
FAST = {"restarts": 2, "lambda_points": 9}


def test_crossover_uniform_rates():
    r = inner_rate_point(crossover_channel(), ProbVec.uniform(2), ProbVec.uniform(2))
    assert r.as_tuple() == pytest.approx((1.0, 1.0), abs=1e-12)


def test_additive_uniform_rates():
    r = inner_rate_point(additive_channel(), ProbVec.uniform(2), ProbVec.uniform(2))
    assert r.r1 == pytest.approx(CLEAN, abs=1e-4)
    assert r.r2 == pytest.approx(CLEAN, abs=1e-4)


def test_example1_uniform_rates():
    r = inner_rate_point(example1_channel(), ProbVec.uniform(2), ProbVec.uniform(2))
    assert r.r1 == pytest.approx(0.5, abs=1e-4)
    assert r.r2 == pytest.approx(CLEAN, abs=1e-4)


def test_inner_rate_point_checks_shapes():
    with pytest.raises(ValidationError):
        inner_rate_point(example1_channel(), ProbVec.uniform(3), ProbVec.uniform(2))


def test_outer_point_of_product_law_equals_inner():
    ch = example1_channel()
    p1, p2 = ProbVec(np.array([0.3, 0.7])), ProbVec(np.array([0.6, 0.4]))
    inner = inner_rate_point(ch, p1, p2)
    outer = outer_rate_point(ch, np.outer(p1.mass, p2.mass))
    assert outer.as_tuple() == pytest.approx(inner.as_tuple(), abs=1e-12)


def test_rates_depend_only_on_marginal_transitions():
    ch = additive_channel()
    decoupled = TwoWayChannel.from_marginals(*ch.marginals())
    p1, p2 = ProbVec(np.array([0.2, 0.8])), ProbVec(np.array([0.55, 0.45]))
    assert inner_rate_point(ch, p1, p2).as_tuple() == pytest.approx(inner_rate_point(decoupled, p1, p2).as_tuple(), abs=1e-12)


def test_negative_rate_pair_rejected():
    with pytest.raises(ValidationError):
        RatePair(-0.1, 0.0)


def test_crossover_inner_region_is_unit_square():
    region = inner_region(crossover_channel(), resolution=5)
    square = RegionBoundary(np.array([[1.0, 1.0]]))
    assert region.hausdorff(square) == pytest.approx(0.0, abs=1e-12)


def test_additive_inner_region_is_square():
    region = inner_region(additive_channel())
    r1, r2 = max_rates(region)
    assert r1 == pytest.approx(CLEAN, abs=1e-3)
    assert r2 == pytest.approx(CLEAN, abs=1e-3)
    assert region.contains((CLEAN - 1e-3, CLEAN - 1e-3))


def test_constant_output_channel_has_trivial_region():
    region = inner_region(pure_noise_channel(), resolution=5)
    assert max_rates(region) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_outer_contains_inner():
    ch = example1_channel()
    inner = inner_region(ch, resolution=9)
    outer = outer_region(ch, resolution=9, inner=inner, **FAST)
    for v in inner.vertices:
        assert outer.contains(v, tol=1e-9)


def test_multiplying_channel_bounds_differ():
    ch = multiplying_channel()
    coin = regions_coincide(ch, tol=1e-2, **FAST)
    assert not coin.coincide
    assert coin.gap > 0.05
    assert coin.inner.support(0.5) == pytest.approx(0.6169, abs=2e-3)
    assert coin.outer.support(0.5) == pytest.approx(0.6942, abs=3e-3)


def test_additive_bounds_coincide():
    coin = regions_coincide(additive_channel(), tol=1e-2, **FAST)
    assert coin.coincide


def test_example1_bounds_coincide():
    coin = regions_coincide(example1_channel(), tol=1e-2, **FAST)
    assert coin.coincide
    assert coin.gap <= 1e-2


def test_crossover_gap_is_zero():
    coin = regions_coincide(crossover_channel(), resolution=5, **FAST)
    assert coin.coincide
    assert coin.gap == pytest.approx(0.0, abs=1e-9)


def test_regions_coincide_rejects_bad_tol():
    with pytest.raises(ValidationError):
        regions_coincide(crossover_channel(), tol=0.0)


def test_rate_region_distances():
    square = RegionBoundary(np.array([[1.0, 1.0]]))
    assert square.distance((2.0, 1.0)) == pytest.approx(1.0)
    assert square.distance((0.5, 0.5)) == 0.0
    assert square.signed_distance((0.5, 0.5)) == pytest.approx(-0.5)
    assert square.contains((-3.0, 0.5))
    kinds = {k for k, _, _ in square.rows()}
    assert kinds == {"point", "hull"}


def test_distortion_region_closes_upward():
    region = RegionBoundary(np.array([[0.2, 0.3], [0.4, 0.1]]), TOWARD_INFINITY, corner=(1.0, 1.0))
    assert region.contains((0.5, 0.5))
    assert region.contains((0.3, 0.2))
    assert not region.contains((0.1, 0.5))
    assert region.signed_distance((0.1, 0.5)) > 0
    assert region.to_dict()["orientation"] == TOWARD_INFINITY


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_outer_contains_inner_on_random_channels(seed):
    rng = np.random.default_rng(seed)
    ch = TwoWayChannel(rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2))
    inner = inner_region(ch, resolution=5, seed=seed)
    outer = outer_region(ch, resolution=5, restarts=1, seed=seed, lambda_points=5)
    for v in inner.vertices:
        assert outer.contains(v, tol=1e-9)
