import numpy as np
import pytest

import triodflow as tf


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_random_triod(rng, num_elements=6, scale=1.0):
    """Nondegenerate random triod: three random walks from a common junction."""
    steps = rng.normal(size=(3, num_elements, 2)) * scale
    lengths = np.linalg.norm(steps, axis=2)
    steps /= np.maximum(lengths, 0.2 * scale)[:, :, None] / scale
    nodes = np.zeros((3, num_elements + 1, 2))
    nodes[:, 0] = rng.normal(size=2)
    nodes[:, 1:] = nodes[:, :1] + np.cumsum(steps, axis=1)
    return tf.TriodState(nodes)


def straight_triod(angles_deg, num_elements=4, lengths=(1.0, 1.0, 1.0), junction=(0.0, 0.0)):
    """Three straight curves leaving a common junction at the given angles."""
    j = np.asarray(junction, dtype=float)
    curves = []
    for a, L in zip(angles_deg, lengths):
        d = L * np.array([np.cos(np.radians(a)), np.sin(np.radians(a))])
        curves.append(tf.interpolate_curve(lambda x, d=d: j + x * d, num_elements))
    return tf.TriodState.from_curves(curves)
