import numpy as np
import pytest

import triodflow as tf
from triodflow.errors import DegenerateElementError
from triodflow.initial_data import convergence_curve_functions, convergence_initial
from triodflow.mesh import chord_lengths

from conftest import make_random_triod, straight_triod


class TestSimParams:
    def test_mesh_size_derived_from_element_count(self):
        p = tf.SimParams(0.1, 20, 0.01, 5)
        assert p.mesh_size == 1.0 / 20
        assert p.final_time == 0.05

    @pytest.mark.parametrize("kwargs", [
        dict(epsilon=0.0), dict(epsilon=-1.0), dict(epsilon=1.5),
        dict(num_elements=0), dict(time_step=0.0), dict(num_steps=-1),
    ])
    def test_rejects_invalid(self, kwargs):
        base = dict(epsilon=0.1, num_elements=4, time_step=0.01, num_steps=1)
        base.update(kwargs)
        with pytest.raises(ValueError):
            tf.SimParams(**base)


class TestInterpolation:
    def test_affine_sampling(self):
        c = tf.interpolate_curve(lambda x: np.array([x, 0.0]), 4)
        expected = np.array([[0, 0], [0.25, 0], [0.5, 0], [0.75, 0], [1, 0]], dtype=float)
        assert np.array_equal(c.nodes, expected)
        assert np.array_equal(c.endpoint, [1.0, 0.0])

    def test_vertical_segment_sampling(self):
        zt = np.sqrt(0.99)
        c = tf.interpolate_curve(lambda x: np.array([-zt, 0.1 * x]), 2)
        assert np.allclose(c.nodes, [[-zt, 0.0], [-zt, 0.05], [-zt, 0.1]], atol=1e-15)

    def test_constant_curve_accepted_then_rejected_by_geometry(self):
        c = tf.interpolate_curve(lambda x: np.array([0.3, 0.7]), 4)
        assert c.num_elements == 4
        with pytest.raises(DegenerateElementError):
            tf.element_geometry(c, tf.SimParams(0.1, 4, 0.01, 1))


class TestElementGeometry:
    def test_unit_speed_straight(self):
        c = tf.interpolate_curve(lambda x: np.array([x, 0.0]), 5)
        g = tf.element_geometry(c, tf.SimParams(0.1, 5, 0.01, 1))
        assert np.allclose(g.length_element, 1.0, atol=1e-15)
        assert np.allclose(g.tangent, [1.0, 0.0], atol=1e-15)
        assert np.allclose(g.normal, [0.0, 1.0], atol=1e-15)

    def test_speed_scaling(self):
        c = tf.interpolate_curve(lambda x: np.array([2 * x, 0.0]), 4)
        g = tf.element_geometry(c, tf.SimParams(0.1, 4, 0.01, 1))
        assert np.allclose(g.length_element, 2.0, atol=1e-14)

    def test_rotation_convention(self):
        # single element along the diagonal; normal is the tangent turned +90
        c = tf.CurveChain(np.array([[0.0, 0.0], [1.0, 1.0]]))
        g = tf.element_geometry(c, tf.SimParams(0.1, 1, 0.01, 1))
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(g.length_element, np.sqrt(2.0), atol=1e-15)
        assert np.allclose(g.tangent[0], [s, s], atol=1e-15)
        assert np.allclose(g.normal[0], [-s, s], atol=1e-15)

    def test_unit_frames_on_random_triods(self, rng):
        for _ in range(10):
            tri = make_random_triod(rng)
            params = tf.SimParams(0.3, tri.num_elements, 0.01, 1)
            for i, c in enumerate(tri.curves):
                g = tf.element_geometry(c, params, curve_index=i)
                assert np.abs(np.linalg.norm(g.tangent, axis=1) - 1).max() < 1e-14
                assert np.abs(np.linalg.norm(g.normal, axis=1) - 1).max() < 1e-14
                assert np.abs(np.einsum("jk,jk->j", g.tangent, g.normal)).max() < 1e-14


class TestEnergy:
    def test_three_unit_segments(self):
        tri = straight_triod([90, 210, 330], num_elements=4)
        assert tf.energy(tri, 0.01) == pytest.approx(3.015, abs=1e-12)

    def test_single_segment_contribution_without_regularisation(self):
        # a triod of three straight segments of lengths L, 1, 1 at epsilon 0
        tri = straight_triod([0, 120, 240], num_elements=3, lengths=(2.5, 1.0, 1.0))
        assert tf.energy(tri, 0.0) == pytest.approx(4.5, abs=1e-12)

    def test_benchmark_regression_against_quadrature(self):
        # frozen discrete value at 20 elements; the quadrature reference uses
        # midpoint sampling of the continuous integrand at 10000 points
        e20 = tf.energy(convergence_initial(20, rotation_deg=0.0), 1e-3)
        assert e20 == pytest.approx(3.199338522707168, rel=1e-12)
        fns = convergence_curve_functions()
        xs = (np.arange(10000) + 0.5) / 10000
        quad = 0.0
        for f in fns:
            d = np.array([(np.asarray(f(x + 1e-7)) - np.asarray(f(x - 1e-7))) / 2e-7 for x in xs])
            sp = np.linalg.norm(d, axis=1)
            quad += np.mean(sp + 0.5e-3 * sp * sp)
        assert abs(e20 - quad) < 5e-4

    def test_rotation_invariance(self, rng):
        tri = make_random_triod(rng)
        e0 = tf.energy(tri, 0.05)
        for ang in (17.0, 90.0, 213.4):
            assert tf.energy(tf.rotate(tri, ang), 0.05) == pytest.approx(e0, rel=1e-12)

    def test_translation_exact(self, rng):
        tri = make_random_triod(rng)
        moved = tf.translate(tri, [123.25, -0.5])
        assert tf.energy(moved, 0.05) == tf.energy(tri, 0.05)


class TestJunctionSectors:
    def test_equilateral(self):
        tri = straight_triod([90, 210, 330])
        assert np.allclose(tf.junction_sector_angles(tri), [120, 120, 120], atol=1e-12)

    def test_right_angles(self):
        tri = straight_triod([0, 90, 180])
        assert sorted(tf.junction_sector_angles(tri)) == pytest.approx([90, 90, 180], abs=1e-12)

    def test_generic_labeling(self):
        # the sector opposite a curve lies between the other two tangents
        tri = straight_triod([0, 100, 210])
        sectors = tf.junction_sector_angles(tri)
        assert sectors == pytest.approx([110, 150, 100], abs=1e-12)

    def test_sectors_sum_to_full_turn(self, rng):
        for _ in range(20):
            tri = make_random_triod(rng)
            s = tf.junction_sector_angles(tri)
            assert abs(s.sum() - 360.0) < 1e-9
            assert np.all(s > 0) and np.all(s < 360)


class TestMinSegment:
    def test_uniform_segments(self):
        tri = straight_triod([90, 210, 330], num_elements=4)
        assert tf.min_segment_length(tri) == pytest.approx(0.25, abs=1e-15)

    def test_scaling_homogeneity(self, rng):
        tri = make_random_triod(rng)
        doubled = tf.TriodState(tri.nodes * 2.0, tri.time)
        assert tf.min_segment_length(doubled) == pytest.approx(2 * tf.min_segment_length(tri), rel=1e-14)

    def test_spiral_minimum_on_innermost_elements(self):
        tri = tf.spiral_initial(60)
        chords = chord_lengths(tri.nodes)
        assert tf.min_segment_length(tri) == pytest.approx(chords.min())
        assert np.all(chords.argmin(axis=1) == 0)


class TestRigidMotions:
    def test_rotate_identity(self, rng):
        tri = make_random_triod(rng)
        assert np.array_equal(tf.rotate(tri, 0.0).nodes, tri.nodes)

    def test_rotate_quarter_turn(self):
        tri = straight_triod([0, 120, 240])
        rot = tf.rotate(tri, 90.0)
        assert np.allclose(rot.nodes[0, -1], [0.0, 1.0], atol=1e-15)

    def test_rotate_inverse(self, rng):
        tri = make_random_triod(rng)
        back = tf.rotate(tf.rotate(tri, 18.0), -18.0)
        assert np.abs(back.nodes - tri.nodes).max() < 1e-14


class TestTriodState:
    def test_rejects_junction_mismatch(self):
        nodes = np.zeros((3, 3, 2))
        nodes[1, 0, 0] = 1e-16
        with pytest.raises(ValueError, match="junction"):
            tf.TriodState(nodes)

    def test_nodes_immutable(self):
        tri = straight_triod([0, 120, 240])
        with pytest.raises(ValueError):
            tri.nodes[0, 0, 0] = 1.0

    def test_endpoint_is_last_node(self, rng):
        tri = make_random_triod(rng)
        for c in tri.curves:
            assert np.array_equal(c.endpoint, c.nodes[-1])
