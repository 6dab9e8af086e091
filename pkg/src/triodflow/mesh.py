"""Discrete triods on the uniform reference mesh.

A triod is three piecewise-linear planar curves over [0, 1] that share the
node at parameter 0 (the triple junction) while the node at parameter 1 of
each curve stays pinned. All geometric quantities used by the solver are
element-wise constant, so everything here is exact arithmetic on chords.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateElementError

# Chords at or below this length abort the computation instead of letting a
# collapsed segment poison the linear algebra.
ELL_MIN = 1e-12


@dataclass(frozen=True)
class SimParams:
    """Discretisation parameters of a single run.

    epsilon weighs the tangential-redistribution term, num_elements is the
    element count per curve (mesh size is its exact reciprocal), time_step
    and num_steps fix the time grid.
    """

    epsilon: float
    num_elements: int
    time_step: float
    num_steps: int

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.num_elements < 1 or int(self.num_elements) != self.num_elements:
            raise ValueError(f"num_elements must be a positive integer, got {self.num_elements}")
        if self.time_step <= 0.0:
            raise ValueError(f"time_step must be positive, got {self.time_step}")
        if self.num_steps < 0:
            raise ValueError(f"num_steps must be nonnegative, got {self.num_steps}")

    @property
    def mesh_size(self) -> float:
        return 1.0 / self.num_elements

    @property
    def final_time(self) -> float:
        return self.num_steps * self.time_step


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CurveChain:
    """Nodal positions of one curve; node 0 is the junction end."""

    nodes: np.ndarray  # (J+1, 2)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 2:
            raise ValueError(f"nodes must have shape (J+1, 2) with J >= 1, got {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("nodes contain non-finite values")
        object.__setattr__(self, "nodes", _readonly(nodes))

    @property
    def num_elements(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def endpoint(self) -> np.ndarray:
        """The pinned outer end, identically nodes[-1]."""
        return self.nodes[-1]


@dataclass(frozen=True, eq=False)
class TriodState:
    """Three curve chains joined at a common junction node, plus time."""

    nodes: np.ndarray  # (3, J+1, 2)
    time: float = 0.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 3 or nodes.shape[0] != 3 or nodes.shape[2] != 2:
            raise ValueError(f"nodes must have shape (3, J+1, 2), got {nodes.shape}")
        if not (np.array_equal(nodes[0, 0], nodes[1, 0]) and np.array_equal(nodes[0, 0], nodes[2, 0])):
            raise ValueError(f"junction nodes differ between curves: {nodes[:, 0]}")
        object.__setattr__(self, "nodes", _readonly(nodes))

    @classmethod
    def from_curves(cls, curves, time: float = 0.0) -> "TriodState":
        if len(curves) != 3:
            raise ValueError(f"a triod has exactly 3 curves, got {len(curves)}")
        return cls(np.stack([c.nodes for c in curves]), time)

    @property
    def curves(self) -> tuple[CurveChain, CurveChain, CurveChain]:
        return tuple(CurveChain(self.nodes[i]) for i in range(3))

    @property
    def num_elements(self) -> int:
        return self.nodes.shape[1] - 1

    @property
    def junction(self) -> np.ndarray:
        return self.nodes[0, 0]


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Element-wise length element, unit tangent, and unit normal of one curve.

    The length element is the chord length divided by the mesh size, i.e. the
    magnitude of the spatial derivative of the interpolant. The normal is the
    tangent rotated by +90 degrees.
    """

    length_element: np.ndarray  # (J,)
    tangent: np.ndarray  # (J, 2)
    normal: np.ndarray  # (J, 2)


def interpolate_curve(curve_fn, num_elements: int) -> CurveChain:
    """Sample a map [0,1] -> R^2 at the uniform mesh nodes."""
    J = int(num_elements)
    nodes = np.array([curve_fn(j / J) for j in range(J + 1)], dtype=float)
    return CurveChain(nodes)


def chord_vectors(nodes: np.ndarray) -> np.ndarray:
    return nodes[..., 1:, :] - nodes[..., :-1, :]


def chord_lengths(nodes: np.ndarray) -> np.ndarray:
    d = chord_vectors(nodes)
    return np.sqrt(np.einsum("...k,...k->...", d, d))


def element_geometry(curve: CurveChain, params: SimParams, curve_index: int | None = None) -> ElementGeometry:
    """Per-element length element, tangent and normal; rejects collapsed chords."""
    d = chord_vectors(curve.nodes)
    chords = np.sqrt(np.einsum("jk,jk->j", d, d))
    bad = np.flatnonzero(chords <= ELL_MIN)
    if bad.size:
        j = int(bad[0])
        raise DegenerateElementError(j, curve_index, float(chords[j]))
    tangent = d / chords[:, None]
    normal = np.empty_like(tangent)
    normal[:, 0] = -tangent[:, 1]
    normal[:, 1] = tangent[:, 0]
    return ElementGeometry(chords / params.mesh_size, tangent, normal)


def triod_geometry(triod: TriodState, params: SimParams) -> list[ElementGeometry]:
    return [element_geometry(c, params, curve_index=i) for i, c in enumerate(triod.curves)]


def energy(triod: TriodState, epsilon: float) -> float:
    """Length-type energy, exact for piecewise-linear curves.

    Per element the integrand is constant, so the integral reduces to
    chord + epsilon/2 * chord^2 / h summed over all elements.
    """
    h = 1.0 / triod.num_elements
    chords = chord_lengths(triod.nodes)
    bad = np.argwhere(chords <= ELL_MIN)
    if bad.size:
        i, j = bad[0]
        raise DegenerateElementError(int(j), int(i), float(chords[i, j]))
    return float(chords.sum() + (epsilon / (2.0 * h)) * (chords * chords).sum())


def junction_sector_angles(triod: TriodState) -> np.ndarray:
    """Sector angles at the junction in degrees, one per curve.

    The polar angles of the three outgoing junction tangents are sorted and
    differenced; the sector spanned by two tangents is reported under the
    index of the remaining curve (the sector opposite that curve). The three
    values sum to 360.
    """
    d = triod.nodes[:, 1, :] - triod.nodes[:, 0, :]
    chords = np.sqrt(np.einsum("ik,ik->i", d, d))
    bad = np.flatnonzero(chords <= ELL_MIN)
    if bad.size:
        raise DegenerateElementError(0, int(bad[0]), float(chords[bad[0]]))
    angles = np.degrees(np.arctan2(d[:, 1], d[:, 0])) % 360.0
    order = np.argsort(angles)
    a = angles[order]
    sectors_sorted = np.array([a[1] - a[0], a[2] - a[1], 360.0 - (a[2] - a[0])])
    out = np.empty(3)
    for q in range(3):
        out[order[(q + 2) % 3]] = sectors_sorted[q]
    return out


def min_segment_length(triod: TriodState) -> float:
    return float(chord_lengths(triod.nodes).min())


def rotation_matrix(angle_deg: float) -> np.ndarray:
    a = np.radians(angle_deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def rotate(triod: TriodState, angle_deg: float) -> TriodState:
    """Rotate all nodes counter-clockwise about the origin."""
    R = rotation_matrix(angle_deg)
    return TriodState(triod.nodes @ R.T, triod.time)


def translate(triod: TriodState, offset) -> TriodState:
    return TriodState(triod.nodes + np.asarray(offset, dtype=float), triod.time)
