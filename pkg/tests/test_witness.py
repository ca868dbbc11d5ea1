"""Minimax Procrustes witnesses and quality reports."""

from __future__ import annotations

import numpy as np
import pytest

from circlet.circle import O2, o2_compose, s1_point
from circlet.cochains import Cochain, act_by_potential, cocycle_defect
from circlet.errors import DiameterTooLarge, ShapeMismatch, TooFewSamples
from circlet.nerve import CoverSet, build_nerve
from circlet.witness import (
    Trivialization,
    assemble_witness,
    coverage_gap,
    procrustes_o2,
    triv_distance,
    triv_quality,
)

from oracles import grid_procrustes


def points(turns):
    return np.stack([s1_point(t) for t in np.atleast_1d(turns)])


class TestProcrustes:
    def test_identical_gives_identity(self):
        f = points([0.1, 0.3, 0.7])
        om, err = procrustes_o2(f, f)
        assert om.sign == 1
        assert om.turn == pytest.approx(0.0, abs=1e-12)
        assert err == pytest.approx(0.0, abs=1e-12)

    def test_pure_conjugation(self):
        alpha = np.array([0.05, 0.2, 0.4])
        om, err = procrustes_o2(points(alpha), points(-alpha))
        assert om.sign == -1
        assert om.turn == pytest.approx(0.0, abs=1e-12)
        assert err == pytest.approx(0.0, abs=1e-12)

    def test_frozen_rotation_instance(self):
        # frozen derived value: constant offset 0.13 recovered exactly
        alpha = np.array([0.0, 0.10, 0.25, 0.40, 0.77])
        om, err = procrustes_o2(points(alpha), points(alpha - 0.13))
        assert om.sign == 1
        assert om.turn == pytest.approx(0.13, abs=1e-9)
        assert err == pytest.approx(0.0, abs=1e-9)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            procrustes_o2(points([0.1]), points([0.2]))

    def test_diameter_guard(self):
        # beta constant: both residual sets equal alpha, evenly spread
        alpha = np.array([0.0, 0.25, 0.5, 0.75])
        beta = np.zeros(4)
        with pytest.raises(DiameterTooLarge):
            procrustes_o2(points(alpha), points(beta))

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(19)
        for _ in range(30):
            n = int(rng.integers(2, 12))
            alpha = rng.random(n)
            if rng.random() < 0.5:
                true = O2(float(rng.random()), 1)
            else:
                true = O2(float(rng.random()), -1)
            # beta = true^{-1} applied to alpha, plus small noise
            if true.sign == 1:
                beta = (alpha - true.turn) % 1.0
            else:
                beta = (true.turn - alpha) % 1.0
            beta = (beta + rng.normal(0.0, 0.01, n)) % 1.0
            om, err = procrustes_o2(points(alpha), points(beta))
            g_turn, g_sign, g_err = grid_procrustes(alpha, beta)
            assert err <= g_err + 1e-4
            assert om.sign == g_sign

    def test_minimax_beats_all_rotations(self):
        rng = np.random.default_rng(77)
        alpha = rng.random(6) * 0.3
        beta = (alpha - 0.2 + rng.normal(0, 0.02, 6)) % 1.0
        om, err = procrustes_o2(points(alpha), points(beta))
        from circlet.circle import turn_chord

        for t in np.linspace(0, 1, 400, endpoint=False):
            trial = float(np.max(turn_chord(alpha - (t + beta))))
            assert err <= trial + 1e-12


GAUGES = {0: O2(0.0, 1), 1: O2(0.8, 1), 2: O2(0.45, -1)}


def expected_transition(j, k):
    from circlet.circle import o2_inverse

    return o2_compose(GAUGES[j], o2_inverse(GAUGES[k]))


def three_set_nerve_and_charts(n_shared=5, seed=0):
    """Gauged charts of one circle coordinate over a 3-set cover.

    Every chart is a fixed isometry applied to the sample's true angle,
    so the pairwise transitions are exactly the gauge quotients and form
    a cocycle; the cover has pairwise regions plus a triple region.
    """
    rng = np.random.default_rng(seed)
    regions = {
        (0, 1): list(range(0, n_shared)),
        (0, 2): list(range(1000, 1000 + n_shared)),
        (1, 2): list(range(2000, 2000 + n_shared)),
        (0, 1, 2): list(range(3000, 3000 + n_shared)),
    }
    members = {j: set() for j in range(3)}
    for region, ids in regions.items():
        for j in region:
            members[j].update(ids)
    all_ids = sorted(set().union(*regions.values()))
    theta = {s: float(rng.random()) for s in all_ids}
    tables = {
        j: {
            s: (g.turn + g.sign * theta[s]) % 1.0
            for s in members[j]
        }
        for j, g in GAUGES.items()
    }
    cover = [CoverSet(j, members[j]) for j in range(3)]
    nerve = build_nerve(cover)
    return nerve, Trivialization.from_angles(tables)


class TestAssembleWitness:
    def test_recovers_exact_transitions(self):
        nerve, trivs = three_set_nerve_and_charts()
        witness = assemble_witness(trivs, nerve)
        assert witness.values[(0, 1)].turn == pytest.approx(0.2, abs=1e-9)
        for (j, k) in nerve.edges:
            want = expected_transition(j, k)
            got = witness.values[(j, k)]
            assert got.sign == want.sign
            gap = abs(got.turn - want.turn) % 1.0
            assert min(gap, 1.0 - gap) < 1e-9

    def test_single_edge_nerve(self):
        cover = [CoverSet(0, {0, 1, 2}), CoverSet(1, {1, 2, 3})]
        nerve = build_nerve(cover)
        trivs = Trivialization.from_angles(
            {0: {0: 0.1, 1: 0.2, 2: 0.3}, 1: {1: 0.1, 2: 0.2, 3: 0.5}}
        )
        witness = assemble_witness(trivs, nerve)
        om = witness.values[(0, 1)]
        assert om.sign == 1
        assert om.turn == pytest.approx(0.1, abs=1e-9)

    def test_edge_error_carries_edge_identity(self):
        cover = [CoverSet(0, {0, 1}), CoverSet(1, {1, 2})]
        nerve = build_nerve(cover)
        trivs = Trivialization.from_angles({0: {0: 0.1, 1: 0.2}, 1: {1: 0.4, 2: 0.5}})
        with pytest.raises(TooFewSamples, match=r"\(0, 1\)"):
            assemble_witness(trivs, nerve)

    def test_equivariance_under_global_rotation(self):
        nerve, trivs = three_set_nerve_and_charts(seed=3)
        witness = assemble_witness(trivs, nerve)
        c = 0.17
        rotated = Trivialization.from_angles(
            {
                j: {s: (t + c) % 1.0 for s, t in trivs.angle_table(j).items()}
                for j in trivs.sets()
            }
        )
        witness_rot = assemble_witness(rotated, nerve)
        phi = Cochain(
            nerve, 0, "O2", {v: O2(c, 1) for v in nerve.vertices}
        )
        expected = act_by_potential(phi, witness)
        for e in nerve.edges:
            got, want = witness_rot.values[e], expected.values[e]
            assert got.sign == want.sign
            gap = abs(got.turn - want.turn) % 1.0
            assert min(gap, 1.0 - gap) < 1e-9

    def test_defect_bounded_by_alpha(self):
        rng = np.random.default_rng(8)
        nerve, trivs = three_set_nerve_and_charts(n_shared=40, seed=5)
        assert nerve.triangles == [(0, 1, 2)]
        noisy = Trivialization.from_angles(
            {
                j: {
                    s: (t + rng.normal(0.0, 0.005)) % 1.0
                    for s, t in trivs.angle_table(j).items()
                }
                for j in trivs.sets()
            }
        )
        witness = assemble_witness(noisy, nerve)
        report = triv_quality(noisy, witness, nerve)
        assert cocycle_defect(witness) <= 3 * np.sqrt(2) * report.alpha + 1e-9


class TestCoverageGap:
    def test_half_circle_gap(self):
        # image occupying half the circle: g = pi, gap = 2 sin(pi/4)
        turns = np.linspace(0.0, 0.5, 50)
        assert coverage_gap(turns) == pytest.approx(np.sqrt(2.0), abs=1e-2)

    def test_dense_circle_small(self):
        turns = np.linspace(0.0, 1.0, 200, endpoint=False)
        assert coverage_gap(turns) < 0.02

    def test_empty_and_single(self):
        assert coverage_gap(np.array([])) == 2.0
        assert coverage_gap(np.array([0.3])) == pytest.approx(2.0)


class TestTrivQuality:
    def test_perfect_data(self):
        nerve, trivs = three_set_nerve_and_charts(n_shared=200, seed=9)
        witness = assemble_witness(trivs, nerve)
        report = triv_quality(trivs, witness, nerve)
        assert report.epsilon == pytest.approx(0.0, abs=1e-9)
        assert report.cocycle_epsilon == pytest.approx(0.0, abs=1e-9)
        assert report.alpha == pytest.approx(0.0, abs=1e-9)
        assert report.delta < 0.2
        assert report.delta == max(report.delta_pairwise, report.delta_triple)
        assert len(report.edges) == 3
        for row in report.edges:
            assert row.max_err == pytest.approx(0.0, abs=1e-9)

    def test_noise_band(self):
        sigma = 0.01
        rng = np.random.default_rng(21)
        nerve, trivs = three_set_nerve_and_charts(n_shared=150, seed=13)
        noisy = Trivialization.from_angles(
            {
                j: {
                    s: (t + rng.normal(0.0, sigma)) % 1.0
                    for s, t in trivs.angle_table(j).items()
                }
                for j in trivs.sets()
            }
        )
        witness = assemble_witness(noisy, nerve)
        report = triv_quality(noisy, witness, nerve)
        # chord scale of the injected angular noise
        scale = 2 * np.pi * sigma
        assert scale <= report.epsilon <= 8 * scale


class TestTrivDistance:
    def test_identical_zero(self):
        trivs = Trivialization.from_angles({0: {0: 0.1, 1: 0.4}})
        assert triv_distance(trivs, trivs) == 0.0

    def test_quarter_turn_one_set(self):
        a = Trivialization.from_angles({0: {0: 0.1}, 1: {1: 0.2}})
        b = Trivialization.from_angles({0: {0: 0.35}, 1: {1: 0.2}})
        assert triv_distance(a, b) == pytest.approx(np.sqrt(2.0))

    def test_domain_mismatch(self):
        a = Trivialization.from_angles({0: {0: 0.1}})
        b = Trivialization.from_angles({1: {0: 0.1}})
        with pytest.raises(ShapeMismatch):
            triv_distance(a, b)

    def test_matches_scan(self):
        rng = np.random.default_rng(4)
        ta = {j: {s: float(rng.random()) for s in range(6)} for j in range(3)}
        tb = {j: {s: float(rng.random()) for s in range(6)} for j in range(3)}
        a, b = Trivialization.from_angles(ta), Trivialization.from_angles(tb)
        worst = 0.0
        for j in range(3):
            for s in range(6):
                worst = max(
                    worst,
                    float(
                        np.linalg.norm(points(ta[j][s])[0] - points(tb[j][s])[0])
                    ),
                )
        assert triv_distance(a, b) == pytest.approx(worst)
