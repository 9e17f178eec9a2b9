from __future__ import annotations

import numpy as np
import pytest

from packages.core.hull import convex_hull, lower_envelope, pareto_max, pareto_min
from packages.core.parallel import ordered_map, worker_count
from packages.core.prob.info import (
    binary_entropy,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from packages.core.prob.joint import Factor, join
from packages.core.prob.simplex import simplex_grid, simplex_points
from packages.core.prob.types import (
    Alphabet,
    CondPMF,
    DistortionMatrix,
    JointSourcePMF,
    ProbVec,
    TwoWayChannel,
)
from packages.shared.errors import UndefinedRowError, ValidationError
from packages.shared.models import example1_channel, example1_source


def test_probvec_rejects_bad_mass():
    with pytest.raises(ValidationError):
        ProbVec(np.array([0.5, 0.6]))
    with pytest.raises(ValidationError):
        ProbVec(np.array([1.2, -0.2]))
    with pytest.raises(ValidationError):
        ProbVec(np.array([]))


def test_probvec_is_read_only():
    p = ProbVec.uniform(3)
    with pytest.raises(ValueError):
        p.mass[0] = 1.0


def test_alphabet_labels_must_be_unique():
    with pytest.raises(ValidationError):
        Alphabet(2, ("a", "a"))
    assert list(Alphabet(3, ("-1", "0", "2")).numeric_values()) == [-1.0, 0.0, 2.0]


def test_conditional_marks_zero_mass_rows_undefined():
    src = JointSourcePMF(np.array([[0.5, 0.0], [0.5, 0.0]]), allow_degenerate=True)
    cond = src.conditional(1)
    assert list(cond.defined) == [True, False]
    assert np.allclose(cond.row(0), [0.5, 0.5])
    with pytest.raises(UndefinedRowError):
        cond.row(1)


def test_degenerate_source_needs_opt_in():
    with pytest.raises(ValidationError):
        JointSourcePMF(np.array([[0.5, 0.0], [0.5, 0.0]]))


def test_example1_source_entropies():
    src = example1_source()
    assert conditional_entropy(src, given=1) == pytest.approx(2 / 3, abs=1e-12)
    assert entropy(src) == pytest.approx(np.log2(3), abs=1e-12)
    assert np.allclose(src.marginal(1).mass, [2 / 3, 1 / 3])


def test_information_measures_are_nonnegative_and_bounded():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = rng.dirichlet(np.ones(6)).reshape(2, 3)
        mi = mutual_information(m)
        assert 0.0 <= mi <= min(entropy(m.sum(axis=1)), entropy(m.sum(axis=0))) + 1e-12
        c = rng.dirichlet(np.ones(12)).reshape(2, 3, 2)
        assert conditional_mutual_information(c) >= 0.0


def test_binary_entropy_edges():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.05) == pytest.approx(0.28639695711595625, abs=1e-9)


def test_channel_slices_must_normalize():
    t = np.full((2, 2, 2, 2), 0.25)
    t[0, 0, 0, 0] = 0.5
    with pytest.raises(ValidationError):
        TwoWayChannel(t)


def test_example1_channel_outputs():
    ch = example1_channel()
    assert ch.trans[1, 1, 0, 1] == pytest.approx(0.95)
    assert ch.trans[1, 0, 1, 0] == pytest.approx(0.95)
    assert ch.trans[0, 0, 1, 0] == pytest.approx(0.05)


def test_with_erasures_adds_a_symbol():
    ch = example1_channel().with_erasures(0.1)
    assert ch.output_sizes == (3, 3)
    assert np.allclose(ch.trans.sum(axis=(2, 3)), 1.0)


def test_distortion_matrix_helpers():
    d = DistortionMatrix.hamming(2)
    assert d.is_hamming
    p = np.array([2 / 3, 1 / 3])
    assert d.d_min(p) == 0.0
    assert d.d_max(p) == pytest.approx(1 / 3)
    assert d.best_constant(p) == 0
    with pytest.raises(ValidationError):
        DistortionMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
    assert not DistortionMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]), relax_zero_rows=True).is_hamming


def test_condpmf_constructors():
    assert np.array_equal(CondPMF.identity(3).rows, np.eye(3))
    assert np.array_equal(CondPMF.constant(2, 3, 1).rows, [[0, 1, 0], [0, 1, 0]])
    assert np.array_equal(CondPMF.from_map([1, 0], 2).rows, [[0, 1], [1, 0]])


def test_joint_law_marginals_and_cmi():
    src = example1_source()
    law = join(
        Factor.prior(("s1", "s2"), src.mass),
        Factor.deterministic(("s1",), "x", np.array([0, 1]), 2),
    )
    assert np.allclose(law.marginal("s2", "s1"), src.mass.T)
    assert law.cmi(["x"], ["s1"], ["s2"]) == pytest.approx(2 / 3, abs=1e-12)
    assert law.expect(("s1", "x"), 1.0 - np.eye(2)) == pytest.approx(0.0)


def test_joint_law_rejects_unnormalized_factor():
    with pytest.raises(ValidationError):
        join(Factor.prior(("a",), np.array([0.5, 0.6])))


def test_simplex_grid_counts():
    g = simplex_grid(3, 4)
    assert g.shape == (15, 3)
    assert np.allclose(g.sum(axis=1), 1.0)
    pts = simplex_points(4, 200, seed=1, cap=500)
    assert pts.shape == (500, 4)
    assert np.allclose(pts[:4], np.eye(4))


def test_hull_and_envelope():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])
    assert len(convex_hull(pts)) == 4
    env = lower_envelope(np.array([0.0, 0.5, 1.0]), np.array([1.0, 0.9, 0.0]))
    assert env[1] == pytest.approx(0.5)
    assert pareto_max(np.empty((0, 2))).shape == (0, 2)
    front = pareto_min(np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]))
    assert sorted(map(tuple, front)) == [(0.0, 1.0), (1.0, 0.0)]


def test_worker_count_sources(monkeypatch):
    assert worker_count(3) == 3
    monkeypatch.setenv("TWJSCC_THREADS", "5")
    assert worker_count(None) == 5
    monkeypatch.setenv("TWJSCC_THREADS", "lots")
    assert worker_count(None) >= 1


def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(10), workers=4) == [x * x for x in range(10)]


def test_example1_mutual_information():
    src = example1_source()
    assert conditional_entropy(src, given=0) == pytest.approx(2 / 3, abs=1e-12)
    assert mutual_information(src) == pytest.approx(binary_entropy(1 / 3) - 2 / 3, abs=1e-12)


def test_cmi_with_xor_condition():
    m = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            m[a, b, a ^ b] = 0.25
    assert mutual_information(m.sum(axis=2)) == pytest.approx(0.0, abs=1e-12)
    assert conditional_mutual_information(m) == pytest.approx(1.0, abs=1e-12)
