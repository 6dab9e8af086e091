import numpy as np
import pytest

import triodflow as tf
from triodflow.assembly import ConstrainedOperator, build_step_system
from triodflow.errors import CgDidNotConvergeError
from triodflow.spectral import constrained_basis
from triodflow.stepper import _cg_python, cg_solve

from conftest import make_random_triod


def identity_operator(num_elements):
    J = num_elements
    diag = np.tile(np.eye(2), (3, J + 1, 1, 1))
    off = np.zeros((3, J, 2, 2))
    return ConstrainedOperator(diag, off)


class TestCg:
    def test_zero_rhs(self):
        op = identity_operator(4)
        x, it, res = cg_solve(op, np.zeros((3, 5, 2)))
        assert it == 0 and res == 0.0
        assert np.abs(x).max() == 0.0

    def test_identity_operator_single_iteration(self, rng):
        op = identity_operator(6)
        rhs = op.restrict(rng.normal(size=(3, 7, 2)))
        x, it, res = cg_solve(op, rhs)
        assert it == 1
        assert np.abs(x - rhs).max() < 1e-12

    @pytest.mark.parametrize("J", [3, 6, 8])
    def test_matches_dense_direct_solve(self, rng, J):
        tri = make_random_triod(rng, num_elements=J)
        params = tf.SimParams(0.15, J, 0.01, 1)
        op, rhs = build_step_system(tri, params)
        x, it, res = cg_solve(op, rhs)
        # reduce to an orthonormal basis of the constrained subspace and
        # solve densely with Gaussian elimination
        B = constrained_basis(J)
        images = np.stack([op.apply(B[:, k].reshape(3, J + 1, 2)).ravel()
                           for k in range(B.shape[1])], axis=1)
        reduced = B.T @ images
        y = np.linalg.solve(reduced, B.T @ rhs.ravel())
        x_ref = (B @ y).reshape(3, J + 1, 2)
        assert np.abs(x - x_ref).max() < 1e-10 * max(np.abs(x_ref).max(), 1.0)

    def test_python_and_compiled_paths_agree(self, rng):
        tri = make_random_triod(rng, num_elements=10)
        params = tf.SimParams(0.05, 10, 0.01, 1)
        op, rhs = build_step_system(tri, params)
        b = op.restrict(rhs)
        x_ref, it_ref, _ = _cg_python(*op.components(), b, 1e-10, 10000)
        assert it_ref > 0
        x, it, res = cg_solve(op, rhs)
        scale = np.abs(x_ref).max()
        assert np.abs(x - x_ref).max() < 1e-9 * scale
        assert res <= 1e-10

    def test_raises_when_budget_exhausted(self, rng):
        tri = make_random_triod(rng, num_elements=8)
        params = tf.SimParams(0.05, 8, 0.01, 1)
        op, rhs = build_step_system(tri, params)
        with pytest.raises(CgDidNotConvergeError):
            cg_solve(op, rhs, tol_rel=1e-14, max_iter=2)


class TestTimeStep:
    def test_equilateral_fixed_point(self):
        tri = tf.equilateral_initial(8)
        params = tf.SimParams(1e-3, 8, 1e-3, 1)
        new, rep = tf.time_step(tri, params)
        assert np.abs(new.nodes - tri.nodes).max() <= 1e-9
        assert new.time == pytest.approx(1e-3)

    def test_relaxation_first_step_symmetry(self):
        # data mirror-symmetric about the first axis: junction slides right,
        # its second coordinate stays put
        tri = tf.epsilon_study_initial(20, z=0.1)
        params = tf.SimParams(1e-3, 20, 0.01, 1)
        new, rep = tf.time_step(tri, params)
        assert new.junction[0] > tri.junction[0]
        assert abs(new.junction[1]) < 1e-12

    def test_translation_equivariance(self, rng):
        tri = make_random_triod(rng)
        params = tf.SimParams(0.07, tri.num_elements, 0.005, 1)
        stepped = tf.time_step(tri, params)[0]
        offset = np.array([3.5, -1.25])
        stepped_translated = tf.time_step(tf.translate(tri, offset), params)[0]
        assert np.abs(stepped_translated.nodes - (stepped.nodes + offset)).max() < 1e-13

    def test_junction_and_endpoints_bit_exact(self, rng):
        tri = make_random_triod(rng)
        params = tf.SimParams(0.07, tri.num_elements, 0.002, 1)
        state = tri
        for _ in range(5):
            state, _ = tf.time_step(state, params)
            assert np.array_equal(state.nodes[0, 0], state.nodes[1, 0])
            assert np.array_equal(state.nodes[0, 0], state.nodes[2, 0])
            assert np.array_equal(state.nodes[:, -1], tri.nodes[:, -1])

    def test_report_fields(self):
        tri = tf.epsilon_study_initial(10)
        params = tf.SimParams(0.1, 10, 0.01, 1)
        new, rep = tf.time_step(tri, params)
        assert rep.cg_iterations > 0
        assert rep.final_relative_residual <= 1e-10
        assert rep.energy_after == pytest.approx(tf.energy(new, 0.1))
        assert rep.min_segment_length_after == pytest.approx(tf.min_segment_length(new))
        assert rep.max_nodal_speed > 0


class TestEvolve:
    def test_zero_steps(self):
        tri = tf.equilateral_initial(4)
        traj = tf.evolve(tri, tf.SimParams(0.1, 4, 0.01, 0))
        assert traj.n_total == 0
        assert len(traj.states) == 1 and traj.states[0] is tri
        assert traj.reports == []

    def test_stride_recording(self):
        tri = tf.epsilon_study_initial(8)
        traj = tf.evolve(tri, tf.SimParams(0.1, 8, 0.01, 10), stride=4)
        assert traj.state_steps == [0, 4, 8, 10]
        assert len(traj.reports) == 10
        assert not traj.records_every_step
        full = tf.evolve(tri, tf.SimParams(0.1, 8, 0.01, 10))
        assert full.records_every_step

    def test_velocity_threshold_stops_run(self):
        tri = tf.epsilon_study_initial(10)
        params = tf.SimParams(1e-5, 10, 0.01, 5000)
        traj = tf.evolve(tri, params, stop=tf.StoppingRule(velocity_threshold=1e-6))
        assert 0 < traj.n_total < 5000
        assert traj.reports[-1].max_nodal_speed < 1e-6
        assert all(r.max_nodal_speed >= 1e-6 for r in traj.reports[:-1])
        assert traj.state_steps[-1] == traj.n_total

    def test_deterministic(self):
        tri = tf.epsilon_study_initial(12)
        params = tf.SimParams(0.01, 12, 0.01, 25)
        t1 = tf.evolve(tri, params)
        t2 = tf.evolve(tri, params)
        for s1, s2 in zip(t1.states, t2.states):
            assert np.array_equal(s1.nodes, s2.nodes)

    def test_reflection_symmetry_preserved(self):
        tri = tf.epsilon_study_initial(16, z=0.1)
        traj = tf.evolve(tri, tf.SimParams(0.01, 16, 0.01, 40))
        for state in traj.states:
            mirrored = state.nodes[2] * np.array([1.0, -1.0])
            assert np.abs(state.nodes[1] - mirrored).max() < 1e-10
            assert np.abs(state.nodes[0, :, 1]).max() < 1e-10

    def test_invalid_stride(self):
        tri = tf.equilateral_initial(4)
        with pytest.raises(ValueError):
            tf.evolve(tri, tf.SimParams(0.1, 4, 0.01, 1), stride=0)
