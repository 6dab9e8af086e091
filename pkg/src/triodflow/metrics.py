"""Error functionals between nested runs, convergence orders, and the
relaxation-study error measures.

A coarse run and a reference run are comparable when the reference mesh
refines the coarse mesh by an integer factor in space and in time. Index maps
then identify matching nodes and time levels without any interpolation in
the coarse-to-reference direction except the exact piecewise-linear embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, InvalidSequenceError
from .mesh import SimParams, TriodState, junction_sector_angles
from .stepper import Trajectory

_REL_TOL = 1e-9


@dataclass(frozen=True)
class NestedGridMap:
    """Integer index maps between a coarse grid and a nested reference grid."""

    space_ratio: int  # J_ref / J
    time_ratio: int  # delta / delta_ref
    coarse_elements: int
    ref_elements: int
    coarse_steps: int
    ref_steps: int

    @classmethod
    def from_params(cls, coarse: SimParams, ref: SimParams) -> "NestedGridMap":
        if ref.num_elements % coarse.num_elements != 0:
            raise GridMismatchError(
                f"element counts not nested: {ref.num_elements} vs {coarse.num_elements}"
            )
        m = ref.num_elements // coarse.num_elements
        k = round(coarse.time_step / ref.time_step)
        if k < 1 or abs(k * ref.time_step - coarse.time_step) > _REL_TOL * coarse.time_step:
            raise GridMismatchError(
                f"time steps not nested: {coarse.time_step} vs {ref.time_step}"
            )
        if abs(coarse.final_time - ref.final_time) > _REL_TOL * max(coarse.final_time, ref.final_time):
            raise GridMismatchError(
                f"final times differ: {coarse.final_time} vs {ref.final_time}"
            )
        return cls(m, k, coarse.num_elements, ref.num_elements,
                   coarse.num_steps, ref.num_steps)

    def ref_time_index(self, n: int) -> int:
        return n * self.time_ratio

    def ref_node_index(self, j: int) -> int:
        return j * self.space_ratio

    def coarse_time_index(self, n_ref: int) -> int:
        """Largest n with n * delta <= n_ref * delta_ref."""
        return n_ref // self.time_ratio

    def coarse_node_index(self, j_ref: int) -> int:
        return j_ref // self.space_ratio


def _require_every_step(traj: Trajectory, name: str):
    if not traj.records_every_step:
        raise GridMismatchError(f"{name} trajectory must be recorded at every step")


def _check_pair(traj: Trajectory, ref: Trajectory, grid_map: NestedGridMap):
    if traj.params.num_elements != grid_map.coarse_elements or ref.params.num_elements != grid_map.ref_elements:
        raise GridMismatchError("grid map does not match the trajectories")
    if traj.n_total * grid_map.time_ratio != ref.n_total:
        raise GridMismatchError(
            f"step counts not aligned: {traj.n_total} x {grid_map.time_ratio} != {ref.n_total}"
        )


# Per-time-sample kernels. Coarse and reference nodal arrays have shapes
# (3, J+1, 2) and (3, J_ref+1, 2).

def _position_term(coarse_nodes: np.ndarray, ref_nodes: np.ndarray, m: int) -> float:
    d = coarse_nodes - ref_nodes[:, ::m, :]
    return float(np.einsum("cjk,cjk->cj", d, d).max())

def _derivative_term(coarse_nodes: np.ndarray, ref_nodes: np.ndarray, m: int,
                     h: float, h_ref: float) -> float:
    dc = (coarse_nodes[:, 1:, :] - coarse_nodes[:, :-1, :]) / h
    dr = (ref_nodes[:, 1:, :] - ref_nodes[:, :-1, :]) / h_ref
    d = np.repeat(dc, m, axis=1) - dr
    return float(h_ref * np.einsum("cjk,cjk->", d, d))

def refine_nodal(values: np.ndarray, m: int) -> np.ndarray:
    """Evaluate a coarse piecewise-linear nodal field at the nested fine nodes."""
    J = values.shape[1] - 1
    idx = np.arange(J * m + 1)
    q, r = idx // m, idx % m
    w = r / m
    qp = np.minimum(q + 1, J)
    return values[:, q, :] * (1.0 - w)[None, :, None] + values[:, qp, :] * w[None, :, None]

def _velocity_interval_term(coarse_velocity_fine: np.ndarray, ref_velocity: np.ndarray,
                            h_ref: float) -> float:
    """Exact integral of |difference|^2; the integrand is quadratic per element."""
    d = coarse_velocity_fine - ref_velocity
    a = d[:, :-1, :]
    b = d[:, 1:, :]
    return float((h_ref / 3.0) * (
        np.einsum("cjk,cjk->", a, a)
        + np.einsum("cjk,cjk->", a, b)
        + np.einsum("cjk,cjk->", b, b)
    ))


class NestedErrorAccumulator:
    """Accumulates the three reference-based errors while the reference run is
    streamed one step at a time, so the reference trajectory is never stored.

    Feed the reference state at every time level in order via feed_state; the
    position and derivative errors update at coarse-aligned levels and the
    velocity error integrates over every reference interval.
    """

    def __init__(self, coarse: Trajectory, ref_params: SimParams):
        _require_every_step(coarse, "coarse")
        self.grid_map = NestedGridMap.from_params(coarse.params, ref_params)
        if coarse.n_total * self.grid_map.time_ratio != ref_params.num_steps:
            raise GridMismatchError("coarse run length does not match the reference run")
        self._coarse_nodes = np.stack([s.nodes for s in coarse.states])
        self._h = coarse.params.mesh_size
        self._h_ref = ref_params.mesh_size
        self._delta = coarse.params.time_step
        self._delta_ref = ref_params.time_step
        # coarse velocities refined onto the fine nodes, one per coarse interval
        vel = (self._coarse_nodes[1:] - self._coarse_nodes[:-1]) / self._delta
        self._coarse_velocity_fine = np.stack(
            [refine_nodal(v, self.grid_map.space_ratio) for v in vel]
        ) if len(vel) else np.zeros((0,))
        self._prev_ref = None
        self._next_index = 0
        self.e_position = 0.0
        self.e_derivative = 0.0
        self.e_velocity = 0.0

    def feed_state(self, n_ref: int, ref_nodes: np.ndarray):
        if n_ref != self._next_index:
            raise GridMismatchError(f"reference states must arrive in order, expected {self._next_index}")
        self._next_index += 1
        m = self.grid_map.space_ratio
        k = self.grid_map.time_ratio
        if n_ref % k == 0:
            n = n_ref // k
            coarse = self._coarse_nodes[n]
            self.e_position = max(self.e_position, _position_term(coarse, ref_nodes, m))
            self.e_derivative = max(
                self.e_derivative,
                _derivative_term(coarse, ref_nodes, m, self._h, self._h_ref),
            )
        if self._prev_ref is not None:
            interval = n_ref - 1
            n = self.grid_map.coarse_time_index(interval)
            ref_vel = (ref_nodes - self._prev_ref) / self._delta_ref
            self.e_velocity += self._delta_ref * _velocity_interval_term(
                self._coarse_velocity_fine[n], ref_vel, self._h_ref
            )
        self._prev_ref = ref_nodes

    def results(self) -> tuple[float, float, float]:
        if self._next_index != self.grid_map.ref_steps + 1:
            raise GridMismatchError(
                f"reference run incomplete: saw {self._next_index} of {self.grid_map.ref_steps + 1} states"
            )
        return self.e_position, self.e_derivative, self.e_velocity


def _drive(traj: Trajectory, ref: Trajectory, grid_map: NestedGridMap) -> NestedErrorAccumulator:
    _require_every_step(ref, "reference")
    _check_pair(traj, ref, grid_map)
    acc = NestedErrorAccumulator(traj, ref.params)
    for n_ref, state in enumerate(ref.states):
        acc.feed_state(n_ref, state.nodes)
    return acc


def position_error_sup(traj: Trajectory, ref: Trajectory, grid_map: NestedGridMap) -> float:
    """Largest squared nodal position mismatch over shared times and nodes."""
    return _drive(traj, ref, grid_map).results()[0]


def derivative_error_sup(traj: Trajectory, ref: Trajectory, grid_map: NestedGridMap) -> float:
    """Largest over shared times of the integrated squared derivative mismatch."""
    return _drive(traj, ref, grid_map).results()[1]


def velocity_error_l2(traj: Trajectory, ref: Trajectory, grid_map: NestedGridMap) -> float:
    """Squared space-time norm of the discrete velocity mismatch."""
    return _drive(traj, ref, grid_map).results()[2]


def angle_error_sup(traj: Trajectory) -> float:
    """Largest deviation of any junction sector from 120 degrees, over all
    recorded states, in degrees."""
    if not traj.states:
        raise InvalidSequenceError("trajectory has no recorded states")
    worst = 0.0
    for state in traj.states:
        sectors = junction_sector_angles(state)
        worst = max(worst, float(np.abs(sectors - 120.0).max()))
    return worst


def eoc(pairs) -> list[float]:
    """Convergence orders between consecutive (resolution, error) pairs.

    The slope convention is (log e_prev - log e_cur) / (log x_cur - log
    x_prev), so errors shrinking with growing resolution give positive
    orders. For studies in a small parameter pass its reciprocal as the
    resolution.
    """
    pts = list(pairs)
    if len(pts) < 2:
        raise InvalidSequenceError("need at least two (resolution, error) pairs")
    for x, e in pts:
        if x <= 0.0 or e <= 0.0:
            raise InvalidSequenceError(f"resolutions and errors must be positive, got ({x}, {e})")
    out = []
    for (x0, e0), (x1, e1) in zip(pts[:-1], pts[1:]):
        if x0 == x1:
            raise InvalidSequenceError("consecutive resolutions must differ")
        out.append(float((np.log(e0) - np.log(e1)) / (np.log(x1) - np.log(x0))))
    return out


def steiner_point(z: float) -> np.ndarray:
    """Limit position of the triple junction for the relaxation study data."""
    return np.array([-np.sqrt(1.0 - z * z) + z / np.sqrt(3.0), 0.0])


def equilibrium_errors(final: TriodState, epsilon: float, z: float) -> tuple[float, float]:
    """Angle and position error of a relaxed state.

    Returns the largest junction-sector deviation from 120 degrees and the
    distance of the junction to the zero-regularisation limit position.
    """
    sectors = junction_sector_angles(final)
    e_ang = float(np.abs(sectors - 120.0).max())
    e_pos = float(np.linalg.norm(final.junction - steiner_point(z)))
    return e_ang, e_pos


def junction_coefficients(triod: TriodState, epsilon: float) -> tuple[np.ndarray, float]:
    """Effective tension coefficients at the junction and the sine-law residual.

    Each coefficient is 1 + epsilon times the length element of the
    junction-adjacent segment; in equilibrium the sines of the opposite
    sector angles are proportional to them.
    """
    h = 1.0 / triod.num_elements
    d = triod.nodes[:, 1, :] - triod.nodes[:, 0, :]
    ell = np.sqrt(np.einsum("ik,ik->i", d, d)) / h
    sigma = 1.0 + epsilon * ell
    sectors = junction_sector_angles(triod)
    ratios = np.sin(np.radians(sectors)) / sigma
    return sigma, float(ratios.max() - ratios.min())
