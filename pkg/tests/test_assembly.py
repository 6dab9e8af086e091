import numpy as np
import pytest

import triodflow as tf
from triodflow.assembly import (
    ConstrainedOperator,
    apply_junction_average,
    apply_stiffness_to_positions,
    assemble_mass,
    assemble_stiffness,
    build_step_system,
)
from triodflow.mesh import element_geometry, triod_geometry

from conftest import make_random_triod, straight_triod


def dense_assembly_oracle(nodes, epsilon, delta, h):
    """Independent dense assembly of mass+stiffness for one curve.

    Entry-by-entry summation over elements using the closed-form integrals of
    hat products; deliberately index-based and slow.
    """
    J = nodes.shape[0] - 1
    n = 2 * (J + 1)
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    for e in range(J):
        d = nodes[e + 1] - nodes[e]
        chord = np.hypot(d[0], d[1])
        ell = chord / h
        tau = d / chord
        nu = np.array([-tau[1], tau[0]])
        dens = (ell * np.outer(nu, nu) + epsilon * ell ** 2 * np.outer(tau, tau)) / delta
        # hat products on the element: diagonal h/3, cross h/6
        for (j, k, w) in ((e, e, h / 3), (e + 1, e + 1, h / 3), (e, e + 1, h / 6), (e + 1, e, h / 6)):
            for a in range(2):
                for b in range(2):
                    M[2 * j + a, 2 * k + b] += w * dens[a, b]
        # derivative products: +1/h on the diagonal pair, -1/h across
        c = epsilon + 1.0 / ell
        for (j, k, w) in ((e, e, 1 / h), (e + 1, e + 1, 1 / h), (e, e + 1, -1 / h), (e + 1, e, -1 / h)):
            for a in range(2):
                S[2 * j + a, 2 * k + a] += w * c
    return M, S


class TestMassAssembly:
    def test_straight_curve_blocks(self):
        # unit-speed horizontal curve, 4 elements, h = 1/4
        c = tf.interpolate_curve(lambda x: np.array([x, 0.0]), 4)
        g = element_geometry(c, tf.SimParams(0.1, 4, 0.01, 1))
        M = assemble_mass(g, 0.1, 0.01, 0.25)
        interior = np.diag([5.0 / 3.0, 50.0 / 3.0])
        off = np.diag([5.0 / 12.0, 25.0 / 6.0])
        assert np.allclose(M.diag[2], interior, atol=1e-12)
        assert np.allclose(M.off[1], off, atol=1e-12)
        assert np.allclose(M.diag[0], interior / 2.0, atol=1e-12)

    def test_tangential_entries_vanish_without_regularisation(self):
        c = tf.interpolate_curve(lambda x: np.array([x, 0.0]), 4)
        g = element_geometry(c, tf.SimParams(0.1, 4, 0.01, 1))
        M = assemble_mass(g, 0.0, 0.01, 0.25)
        assert np.abs(M.diag[:, 0, 0]).max() == 0.0
        assert np.abs(M.diag[:, 1, 1]).min() > 0.0

    def test_exact_symmetry(self, rng):
        tri = make_random_triod(rng)
        params = tf.SimParams(0.23, tri.num_elements, 0.004, 1)
        for i, c in enumerate(tri.curves):
            g = element_geometry(c, params, curve_index=i)
            A = assemble_mass(g, params.epsilon, params.time_step, params.mesh_size).dense()
            assert np.array_equal(A, A.T)


class TestStiffnessAssembly:
    def test_straight_curve_blocks(self):
        c = tf.interpolate_curve(lambda x: np.array([x, 0.0]), 4)
        g = element_geometry(c, tf.SimParams(0.1, 4, 0.01, 1))
        S = assemble_stiffness(g, 0.1, 0.25)
        assert np.allclose(S.diag[1], 8.8 * np.eye(2), atol=1e-12)
        assert np.allclose(S.off[0], -4.4 * np.eye(2), atol=1e-12)

    def test_rows_annihilate_constants(self, rng):
        tri = make_random_triod(rng)
        params = tf.SimParams(0.4, tri.num_elements, 0.01, 1)
        g = element_geometry(tri.curves[0], params)
        S = assemble_stiffness(g, params.epsilon, params.mesh_size)
        const = np.tile([2.0, -3.0], (tri.num_elements + 1, 1))
        res = S.matvec(const)
        assert np.abs(res).max() < 1e-12 * np.abs(S.diag).max()

    def test_halves_when_speed_doubles_without_regularisation(self):
        c1 = tf.interpolate_curve(lambda x: np.array([x, 0.0]), 4)
        c2 = tf.interpolate_curve(lambda x: np.array([2 * x, 0.0]), 4)
        p = tf.SimParams(0.5, 4, 0.01, 1)
        S1 = assemble_stiffness(element_geometry(c1, p), 0.0, 0.25)
        S2 = assemble_stiffness(element_geometry(c2, p), 0.0, 0.25)
        assert np.allclose(S2.dense(), S1.dense() / 2.0, atol=1e-14)


class TestAgainstDenseOracle:
    @pytest.mark.parametrize("J", [3, 5, 8])
    def test_blocks_match_bruteforce(self, rng, J):
        tri = make_random_triod(rng, num_elements=J)
        eps, delta, h = 0.37, 0.013, 1.0 / J
        params = tf.SimParams(eps, J, delta, 1)
        for i, c in enumerate(tri.curves):
            g = element_geometry(c, params, curve_index=i)
            M = assemble_mass(g, eps, delta, h).dense()
            S = assemble_stiffness(g, eps, h).dense()
            M_ref, S_ref = dense_assembly_oracle(c.nodes, eps, delta, h)
            scale = np.abs(M_ref).max()
            assert np.abs(M - M_ref).max() < 1e-13 * scale
            assert np.abs(S - S_ref).max() < 1e-13 * np.abs(S_ref).max()

    def test_fused_step_system_matches_reference_blocks(self, rng):
        for J in (3, 8):
            tri = make_random_triod(rng, num_elements=J)
            params = tf.SimParams(0.21, J, 0.007, 1)
            geoms = triod_geometry(tri, params)
            blocks = [assemble_mass(g, params.epsilon, params.time_step, params.mesh_size)
                      + assemble_stiffness(g, params.epsilon, params.mesh_size)
                      for g in geoms]
            ref = ConstrainedOperator.from_blocks(blocks)
            op, rhs = build_step_system(tri, params)
            scale = np.abs(ref.diag).max()
            assert np.abs(op.diag - ref.diag).max() < 1e-13 * scale
            assert np.abs(op.off - ref.off).max() < 1e-13 * scale
            rhs_ref = ref.restrict(-apply_stiffness_to_positions(tri, geoms, params))
            assert np.abs(rhs - rhs_ref).max() < 1e-13 * np.abs(rhs_ref).max()


class TestJunctionAverage:
    def test_averages_junction_only(self):
        v = np.zeros((3, 3, 2))
        v[0, 0] = [1, 0]
        v[1, 0] = [2, 2]
        v[2, 0] = [3, 4]
        v[:, 1] = [[5, 6]] * 3
        out = apply_junction_average(v)
        assert np.allclose(out[:, 0], [2.0, 2.0])
        assert np.array_equal(out[:, 1:], v[:, 1:])

    def test_idempotent(self, rng):
        v = rng.normal(size=(3, 5, 2))
        once = apply_junction_average(v)
        assert np.array_equal(apply_junction_average(once), once)

    def test_symmetric(self, rng):
        for _ in range(5):
            v = rng.normal(size=(3, 6, 2))
            w = rng.normal(size=(3, 6, 2))
            pv_w = float(np.sum(apply_junction_average(v) * w))
            v_pw = float(np.sum(v * apply_junction_average(w)))
            assert abs(pv_w - v_pw) < 1e-13 * max(abs(pv_w), 1.0)


class TestStepSystem:
    def test_equilateral_is_stationary(self):
        tri = tf.equilateral_initial(6)
        op, rhs = build_step_system(tri, tf.SimParams(0.03, 6, 0.002, 1))
        assert np.linalg.norm(rhs) < 1e-12

    def test_translation_invariance(self, rng):
        tri = make_random_triod(rng)
        params = tf.SimParams(0.1, tri.num_elements, 0.01, 1)
        op1, rhs1 = build_step_system(tri, params)
        op2, rhs2 = build_step_system(tf.translate(tri, [7.5, -3.25]), params)
        assert np.array_equal(rhs1, rhs2)
        assert np.array_equal(op1.diag, op2.diag)
        assert np.array_equal(op1.off, op2.off)

    def test_masks_pinned_directions(self, rng):
        tri = make_random_triod(rng)
        params = tf.SimParams(0.1, tri.num_elements, 0.01, 1)
        op, _ = build_step_system(tri, params)
        v = np.zeros((3, tri.num_elements + 1, 2))
        v[:, -1] = rng.normal(size=(3, 2))
        assert np.abs(op.apply(v)).max() == 0.0

    def test_symmetric_on_subspace(self, rng):
        for _ in range(5):
            tri = make_random_triod(rng)
            params = tf.SimParams(0.05, tri.num_elements, 0.01, 1)
            op, _ = build_step_system(tri, params)
            v = op.restrict(rng.normal(size=(3, tri.num_elements + 1, 2)))
            w = op.restrict(rng.normal(size=(3, tri.num_elements + 1, 2)))
            av_w = float(np.sum(op.apply(v) * w))
            v_aw = float(np.sum(v * op.apply(w)))
            assert abs(av_w - v_aw) < 1e-12 * max(abs(av_w), 1.0)

    def test_positive_definite_on_subspace(self, rng):
        for _ in range(10):
            tri = make_random_triod(rng)
            params = tf.SimParams(0.02, tri.num_elements, 0.01, 1)
            op, _ = build_step_system(tri, params)
            v = op.restrict(rng.normal(size=(3, tri.num_elements + 1, 2)))
            assert float(np.sum(op.apply(v) * v)) > 0.0


class TestMassSpectralBounds:
    def test_rayleigh_bounds_unit_straight(self):
        # scaled by delta, the mass spectrum sits between eps*h/6 and 4h
        J, eps, delta, h = 8, 0.03, 0.002, 1.0 / 8
        c = tf.interpolate_curve(lambda x: np.array([x, 0.0]), J)
        g = element_geometry(c, tf.SimParams(eps, J, delta, 1))
        A = delta * assemble_mass(g, eps, delta, h).dense()
        eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
        assert eigs[0] >= eps * h / 6 * (1 - 1e-12)
        assert eigs[-1] <= 4 * h * (1 + 1e-12)
