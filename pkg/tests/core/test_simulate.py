from __future__ import annotations

import itertools

import numpy as np
import pytest

from packages.core.hybrid.constructors import make_mixed, make_uncoded
from packages.core.hybrid.types import HybridScheme
from packages.core.prob.types import CondPMF, DistortionMatrix, JointSourcePMF, ProbVec, TwoWayChannel
from packages.core.simulate.decoders import derive_map_decoder, lift
from packages.core.simulate.exact import exact_distortion
from packages.core.simulate.monte_carlo import BLOCK_SIZE, monte_carlo
from packages.shared.errors import ValidationError
from packages.shared.models import canned

IDENTITY = (np.array([0, 1]), np.array([0, 1]))


def test_crossover_map_decoder_reads_the_channel():
    src, ch, _, _ = canned("crossover").parts
    g1, g2 = derive_map_decoder(src, ch, IDENTITY)
    assert g1.tolist() == [[0, 1], [0, 1]]
    assert g2.tolist() == [[0, 1], [0, 1]]


def test_example1_map_decoder(example1):
    src, ch, d1, d2 = example1.parts
    g1, g2 = derive_map_decoder(src, ch, IDENTITY)
    # user 2 sees Y2 = S1 S2: S1 = 1 forces S2 = 1, and Y2 = 1 forces S1 = 1
    assert g2[1, 1] == 1
    assert g2[1, 0] == 0
    assert g2[0, 0] == 0
    bayes = derive_map_decoder(src, ch, IDENTITY, "bayes", d1, d2)
    for a, b in zip(bayes, (g1, g2)):
        assert np.array_equal(a, b)


def test_decoder_rule_validation(example1):
    src, ch, _, _ = example1.parts
    with pytest.raises(ValidationError):
        derive_map_decoder(src, ch, IDENTITY, "median")
    with pytest.raises(ValidationError):
        derive_map_decoder(src, ch, IDENTITY, "bayes")
    with pytest.raises(ValidationError):
        derive_map_decoder(src, ch, (np.array([0, 2]), np.array([0, 1])))
    with pytest.raises(ValidationError):
        derive_map_decoder(src, ch, (np.zeros((2, 2), dtype=int), np.array([0, 1])))


def test_exact_distortion_example1(example1):
    src, ch, d1, d2 = example1.parts
    sch = make_uncoded(src, ch, d1, d2)
    assert exact_distortion(src, ch, sch, d1, d2) == pytest.approx((0.0, 1 / 30), abs=1e-12)


def test_exact_distortion_needs_singleton_aux(example1):
    src, ch, d1, d2 = example1.parts
    sch, _ = make_mixed(src, ch, 1, (0.0, 0.0), ProbVec.uniform(2), d1, d2)
    if sch.is_symbol_by_symbol:
        pytest.skip("mixed scheme collapsed to singleton auxiliaries")
    with pytest.raises(ValidationError):
        exact_distortion(src, ch, sch, d1, d2)


def test_monte_carlo_agrees_with_exact(example1):
    src, ch, d1, d2 = example1.parts
    sch = make_uncoded(src, ch, d1, d2)
    result = monte_carlo(src, ch, sch, d1, d2, samples=200_000, seed=7)
    assert result.exact_d1 == pytest.approx(0.0, abs=1e-12)
    assert result.exact_d2 == pytest.approx(1 / 30, abs=1e-12)
    assert result.d1_hat == 0.0
    assert result.agrees
    assert int(result.tally.sum()) == 200_000
    assert sum(row[-1] for row in result.tally_rows()) == 200_000
    assert result.to_dict()["agrees"] is True


def test_monte_carlo_is_deterministic_across_workers(example1):
    src, ch, d1, d2 = example1.parts
    sch = make_uncoded(src, ch, d1, d2)
    n = 2 * BLOCK_SIZE + 123
    one = monte_carlo(src, ch, sch, d1, d2, samples=n, seed=3, workers=1, with_exact=False)
    many = monte_carlo(src, ch, sch, d1, d2, samples=n, seed=3, workers=3, with_exact=False)
    assert one.d2_hat == many.d2_hat
    assert np.array_equal(one.tally, many.tally)
    assert one.agrees is None
    other = monte_carlo(src, ch, sch, d1, d2, samples=n, seed=4, workers=1, with_exact=False)
    assert not np.array_equal(one.tally, other.tally)


def test_monte_carlo_coded_scheme_uses_evaluation(example1):
    src, ch, d1, d2 = example1.parts
    sch, _ = make_mixed(src, ch, 1, (0.0, 0.0), ProbVec.uniform(2), d1, d2)
    result = monte_carlo(src, ch, sch, d1, d2, samples=100_000, seed=11)
    assert result.exact_d1 == pytest.approx(1 / 6, abs=1e-9)
    assert result.exact_d2 == pytest.approx(0.0, abs=1e-9)
    assert result.agrees


@pytest.mark.parametrize("samples, seed", [(0, 0), (-5, 0), (10, -1), (10, 2**64)])
def test_monte_carlo_argument_validation(example1, samples, seed):
    src, ch, d1, d2 = example1.parts
    sch = make_uncoded(src, ch, d1, d2)
    with pytest.raises(ValidationError):
        monte_carlo(src, ch, sch, d1, d2, samples=samples, seed=seed)


def _with_tables(g1, g2) -> HybridScheme:
    return HybridScheme(
        (CondPMF.constant(2, 1), CondPMF.constant(2, 1)),
        (IDENTITY[0][None, :], IDENTITY[1][None, :]),
        (lift(g1), lift(g2)),
        label="tables",
    )


ALL_TABLES = [np.array(cells).reshape(2, 2) for cells in itertools.product((0, 1), repeat=4)]


@pytest.mark.parametrize("seed", range(10))
def test_map_decoders_beat_every_decoder_table(seed):
    rng = np.random.default_rng(seed)
    src = JointSourcePMF(rng.dirichlet(np.ones(4)).reshape(2, 2))
    ch = TwoWayChannel(rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2))
    ham = DistortionMatrix.hamming(2)
    g1, g2 = derive_map_decoder(src, ch, IDENTITY)
    best1, best2 = exact_distortion(src, ch, _with_tables(g1, g2), ham, ham)
    # D1 depends on g2 only and D2 on g1 only
    for table in ALL_TABLES:
        assert best1 <= exact_distortion(src, ch, _with_tables(g1, table), ham, ham)[0] + 1e-12
        assert best2 <= exact_distortion(src, ch, _with_tables(table, g2), ham, ham)[1] + 1e-12
