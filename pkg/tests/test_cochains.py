"""Twisted Cech cochains: coboundaries, distances, defects, gauge action."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlet.circle import O2, IDENTITY, o2_compose, o2_inverse
from circlet.cochains import (
    Cochain,
    act_by_potential,
    check_sign_cocycle,
    cochain_distance,
    cocycle_defect,
    constant_sign_cochain,
    restrict,
    twisted_coboundary,
)
from circlet.errors import DegreeUnsupported, NotACocycle, ShapeMismatch
from circlet.nerve import CoverSet, build_nerve, filtration_order, stage_subcomplex


def triangle_nerve():
    return build_nerve([CoverSet(j, {99, j}) for j in range(3)])


def tetra_nerve():
    return build_nerve([CoverSet(j, {99, j}) for j in range(4)])


def sign_cocycle_from_vertices(nerve, vertex_signs):
    """delta of a vertex sign assignment: always a cocycle."""
    vals = {(j, k): vertex_signs[j] * vertex_signs[k] for (j, k) in nerve.edges}
    return Cochain(nerve, 1, "Z2", vals)


turns = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, width=32)
signs = st.sampled_from([1, -1])


class TestCochainContainer:
    def test_domain_must_match(self):
        nerve = triangle_nerve()
        with pytest.raises(ShapeMismatch):
            Cochain(nerve, 1, "R", {(0, 1): 0.5})

    def test_sign_values_checked(self):
        nerve = triangle_nerve()
        with pytest.raises(ValueError):
            Cochain(nerve, 0, "Z2", {(0,): 1, (1,): 0, (2,): 1})

    def test_permuted_pair_lookup_o2(self):
        nerve = triangle_nerve()
        om = O2(0.3, -1)
        vals = {e: om for e in nerve.edges}
        c = Cochain(nerve, 1, "O2", vals)
        assert c.value((1, 0)) == o2_inverse(om)
        assert c.value((0, 1)) == om

    def test_permuted_pair_lookup_real_untwisted(self):
        nerve = triangle_nerve()
        c = Cochain(nerve, 1, "R", {e: 0.25 for e in nerve.edges})
        assert c.value((2, 0)) == pytest.approx(-0.25)

    def test_permuted_pair_lookup_real_twisted(self):
        nerve = triangle_nerve()
        omega = sign_cocycle_from_vertices(nerve, {0: 1, 1: -1, 2: 1})
        c = Cochain(nerve, 1, "R", {e: 0.25 for e in nerve.edges}, twist=omega)
        # (1,0): stored on (0,1) with twist -1 there
        assert c.value((1, 0)) == pytest.approx(0.25)
        assert c.value((2, 1)) == pytest.approx(0.25)
        assert c.value((2, 0)) == pytest.approx(-0.25)

    def test_permuted_sign_lookup_symmetric(self):
        nerve = triangle_nerve()
        omega = sign_cocycle_from_vertices(nerve, {0: 1, 1: -1, 2: 1})
        assert omega.value((1, 0)) == omega.value((0, 1))


class TestSignCocycleCheck:
    def test_coboundary_signs_pass(self):
        nerve = triangle_nerve()
        omega = sign_cocycle_from_vertices(nerve, {0: 1, 1: -1, 2: -1})
        check_sign_cocycle(omega)

    def test_odd_triangle_fails(self):
        nerve = triangle_nerve()
        vals = {(0, 1): -1, (0, 2): 1, (1, 2): 1}
        with pytest.raises(NotACocycle):
            check_sign_cocycle(Cochain(nerve, 1, "Z2", vals))


class TestTwistedCoboundary:
    def test_zero_cochain_stays_zero(self):
        nerve = tetra_nerve()
        for deg in (0, 1, 2):
            simps = nerve.simplices[deg]
            c = Cochain(nerve, deg, "R", {s: 0.0 for s in simps})
            d = twisted_coboundary(c)
            assert all(v == 0.0 for v in d.values.values())

    def test_triangle_real_lift_defect(self):
        # frozen worked value: 0.4 + 0.4 - (-0.2) = 1.0
        nerve = triangle_nerve()
        theta = Cochain(nerve, 1, "R", {(0, 1): 0.4, (0, 2): -0.2, (1, 2): 0.4})
        d = twisted_coboundary(theta, constant_sign_cochain(nerve))
        assert d.values[(0, 1, 2)] == pytest.approx(1.0)

    def test_twist_flips_leading_term(self):
        nerve = triangle_nerve()
        omega = sign_cocycle_from_vertices(nerve, {0: -1, 1: 1, 2: 1})
        theta = Cochain(nerve, 1, "R", {(0, 1): 0.4, (0, 2): -0.2, (1, 2): 0.4})
        d = twisted_coboundary(theta, omega)
        # omega_01 = -1: -0.4 + 0.2 + 0.4
        assert d.values[(0, 1, 2)] == pytest.approx(0.2)

    def test_degree0_formula(self):
        nerve = triangle_nerve()
        omega = sign_cocycle_from_vertices(nerve, {0: 1, 1: -1, 2: 1})
        c = Cochain(nerve, 0, "R", {(0,): 0.1, (1,): 0.2, (2,): 0.3})
        d = twisted_coboundary(c, omega)
        assert d.values[(0, 1)] == pytest.approx(-1 * 0.2 - 0.1)
        assert d.values[(1, 2)] == pytest.approx(-1 * 0.3 - 0.2)
        assert d.values[(0, 2)] == pytest.approx(1 * 0.3 - 0.1)

    def test_degree0_sign_cochain_multiplicative(self):
        nerve = triangle_nerve()
        c = Cochain(nerve, 0, "Z2", {(0,): 1, (1,): -1, (2,): 1})
        d = twisted_coboundary(c)
        assert d.values == {(0, 1): -1, (0, 2): 1, (1, 2): -1}

    def test_o2_holonomy_defect(self):
        nerve = triangle_nerve()
        a, b = O2(0.15, 1), O2(0.4, -1)
        vals = {(0, 1): a, (1, 2): b, (0, 2): o2_compose(a, b)}
        d = twisted_coboundary(Cochain(nerve, 1, "O2", vals))
        assert d.values[(0, 1, 2)] == IDENTITY

    def test_unsupported_degree(self):
        nerve = tetra_nerve()
        c = Cochain(nerve, 3, "R", {s: 0.0 for s in nerve.tetrahedra})
        with pytest.raises(DegreeUnsupported):
            twisted_coboundary(c)

    @settings(max_examples=60, deadline=None)
    @given(
        vs=st.tuples(signs, signs, signs, signs),
        vals=st.lists(
            st.floats(min_value=-5, max_value=5, width=32), min_size=4, max_size=4
        ),
    )
    def test_coboundary_squares_to_zero_deg0(self, vs, vals):
        nerve = tetra_nerve()
        omega = sign_cocycle_from_vertices(nerve, dict(enumerate(vs)))
        c = Cochain(
            nerve, 0, "R", {(j,): float(vals[j]) for j in range(4)}
        )
        dd = twisted_coboundary(twisted_coboundary(c, omega), omega)
        assert all(abs(v) < 1e-9 for v in dd.values.values())

    @settings(max_examples=60, deadline=None)
    @given(
        vs=st.tuples(signs, signs, signs, signs),
        vals=st.lists(
            st.floats(min_value=-5, max_value=5, width=32), min_size=6, max_size=6
        ),
    )
    def test_coboundary_squares_to_zero_deg1(self, vs, vals):
        nerve = tetra_nerve()
        omega = sign_cocycle_from_vertices(nerve, dict(enumerate(vs)))
        c = Cochain(
            nerve,
            1,
            "R",
            {e: float(v) for e, v in zip(nerve.edges, vals)},
        )
        dd = twisted_coboundary(twisted_coboundary(c, omega), omega)
        assert all(abs(v) < 1e-9 for v in dd.values.values())


class TestCochainDistance:
    def test_identical_zero(self):
        nerve = triangle_nerve()
        c = Cochain(nerve, 1, "R", {e: 0.1 for e in nerve.edges})
        assert cochain_distance(c, c) == 0.0

    def test_half_turn_edge(self):
        nerve = triangle_nerve()
        a = Cochain(nerve, 1, "O2", {e: IDENTITY for e in nerve.edges})
        vals = {e: IDENTITY for e in nerve.edges}
        vals[(0, 1)] = O2(0.5, 1)
        b = Cochain(nerve, 1, "O2", vals)
        assert cochain_distance(a, b) == pytest.approx(2 * np.sqrt(2.0))

    def test_sign_distance_discrete(self):
        nerve = triangle_nerve()
        a = constant_sign_cochain(nerve)
        vals = dict(a.values)
        vals[(0, 2)] = -1
        b = Cochain(nerve, 1, "Z2", vals)
        assert cochain_distance(a, b) == 2.0

    def test_mismatched_domains_raise(self):
        n1, n2 = triangle_nerve(), tetra_nerve()
        a = Cochain(n1, 1, "R", {e: 0.0 for e in n1.edges})
        b = Cochain(n2, 1, "R", {e: 0.0 for e in n2.edges})
        with pytest.raises(ShapeMismatch):
            cochain_distance(a, b)

    @settings(max_examples=40, deadline=None)
    @given(
        va=st.lists(turns, min_size=3, max_size=3),
        vb=st.lists(turns, min_size=3, max_size=3),
        vc=st.lists(turns, min_size=3, max_size=3),
        sa=st.tuples(signs, signs, signs),
        sb=st.tuples(signs, signs, signs),
        sc=st.tuples(signs, signs, signs),
    )
    def test_metric_properties(self, va, vb, vc, sa, sb, sc):
        nerve = triangle_nerve()
        edges = nerve.edges

        def mk(vals, sgns):
            return Cochain(
                nerve,
                1,
                "O2",
                {e: O2(t, s) for e, t, s in zip(edges, vals, sgns)},
            )

        a, b, c = mk(va, sa), mk(vb, sb), mk(vc, sc)
        dab = cochain_distance(a, b)
        assert dab == pytest.approx(cochain_distance(b, a))
        assert cochain_distance(a, a) == 0.0
        assert dab <= cochain_distance(a, c) + cochain_distance(c, b) + 1e-9


class TestCocycleDefect:
    def test_exact_cocycle_zero(self):
        nerve = triangle_nerve()
        a, b = O2(0.15, 1), O2(0.4, -1)
        vals = {(0, 1): a, (1, 2): b, (0, 2): o2_compose(a, b)}
        assert cocycle_defect(Cochain(nerve, 1, "O2", vals)) == pytest.approx(0.0)

    def test_single_perturbed_edge(self):
        nerve = triangle_nerve()
        tau = 0.07
        a, b = O2(0.15, 1), O2(0.4, -1)
        vals = {(0, 1): O2(a.turn + tau, 1), (1, 2): b, (0, 2): o2_compose(a, b)}
        expected = 2 * np.sqrt(2.0) * abs(np.sin(np.pi * tau))
        assert cocycle_defect(Cochain(nerve, 1, "O2", vals)) == pytest.approx(expected)

    def test_no_triangles_returns_zero(self):
        nerve = build_nerve([CoverSet(0, {0, 1}), CoverSet(1, {1, 2})])
        c = Cochain(nerve, 1, "O2", {(0, 1): O2(0.2, -1)})
        assert cocycle_defect(c) == 0.0


class TestActByPotential:
    def test_identity_potential(self):
        nerve = triangle_nerve()
        om = Cochain(nerve, 1, "O2", {e: O2(0.3, -1) for e in nerve.edges})
        phi = Cochain(nerve, 0, "O2", {v: IDENTITY for v in nerve.vertices})
        out = act_by_potential(phi, om)
        assert out.values == om.values

    def test_constant_rotation_fixes_rotation_cochain(self):
        nerve = triangle_nerve()
        om = Cochain(nerve, 1, "O2", {e: O2(0.3, 1) for e in nerve.edges})
        phi = Cochain(nerve, 0, "O2", {v: O2(0.11, 1) for v in nerve.vertices})
        out = act_by_potential(phi, om)
        for e in nerve.edges:
            assert out.values[e].turn == pytest.approx(0.3)
            assert out.values[e].sign == 1

    @settings(max_examples=40, deadline=None)
    @given(
        ts=st.lists(turns, min_size=3, max_size=3),
        ss=st.lists(signs, min_size=3, max_size=3),
        es=st.lists(turns, min_size=3, max_size=3),
        zs=st.lists(signs, min_size=3, max_size=3),
    )
    def test_defect_preserved(self, ts, ss, es, zs):
        nerve = triangle_nerve()
        om = Cochain(
            nerve,
            1,
            "O2",
            {e: O2(t, s) for e, t, s in zip(nerve.edges, es, zs)},
        )
        phi = Cochain(
            nerve,
            0,
            "O2",
            {v: O2(t, s) for v, t, s in zip(nerve.vertices, ts, ss)},
        )
        out = act_by_potential(phi, om)
        assert cocycle_defect(out) == pytest.approx(cocycle_defect(om), abs=1e-10)


class TestRestrict:
    def test_restrict_to_stage(self):
        nerve = filtration_order(tetra_nerve())
        sub = stage_subcomplex(nerve, 8)
        c = Cochain(nerve, 1, "R", {e: float(sum(e)) for e in nerve.edges})
        rc = restrict(c, sub)
        assert set(rc.values) == set(sub.edges)
        for e in sub.edges:
            assert rc.values[e] == c.values[e]
