"""Time stepping: one linearly-implicit step per call, solved by conjugate
gradients on the constrained subspace, plus full evolutions with per-step
diagnostics.

The CG inner loop is compiled with numba when available (set
TRIODFLOW_NO_NUMBA=1 to force the pure numpy path); both paths implement the
same iteration and meet the same tolerance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .assembly import ConstrainedOperator, build_step_system
from .errors import CgDidNotConvergeError
from .mesh import SimParams, TriodState, chord_lengths, energy

CG_TOL_REL = 1e-10
CG_MAX_ITER_FACTOR = 20

_HAVE_NUMBA = False
if not os.environ.get("TRIODFLOW_NO_NUMBA"):
    try:
        from numba import njit as _njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        pass


@dataclass(frozen=True)
class StepReport:
    """Diagnostics of one executed step."""

    cg_iterations: int
    final_relative_residual: float
    energy_after: float
    min_segment_length_after: float
    max_nodal_speed: float


@dataclass(frozen=True)
class StoppingRule:
    """Stop at num_steps, or earlier once the largest nodal speed over the
    non-junction nodes drops below velocity_threshold (when set)."""

    velocity_threshold: float | None = None


@dataclass(eq=False)
class Trajectory:
    """Recorded states and per-step diagnostics of one evolution.

    states[i] is the state after step state_steps[i]; reports has one entry
    per executed step. n_total is the index of the last executed step.
    """

    params: SimParams
    states: list[TriodState]
    reports: list[StepReport]
    state_steps: list[int]
    stride: int = 1
    n_total: int = 0

    @property
    def records_every_step(self) -> bool:
        return self.state_steps == list(range(self.n_total + 1))


def _cg_python(d00, d01, d11, o00, o01, o11, b, tol_rel, max_iter):
    """Reference CG on the constrained subspace; see the jitted twin below."""

    def restrict(v):
        v[:, 0, 0] = (v[0, 0, 0] + v[1, 0, 0] + v[2, 0, 0]) / 3.0
        v[:, 0, 1] = (v[0, 0, 1] + v[1, 0, 1] + v[2, 0, 1]) / 3.0
        v[:, -1, :] = 0.0

    def matvec(v):
        v0, v1 = v[..., 0], v[..., 1]
        y = np.empty_like(v)
        y0, y1 = y[..., 0], y[..., 1]
        np.multiply(d00, v0, out=y0)
        y0 += d01 * v1
        np.multiply(d01, v0, out=y1)
        y1 += d11 * v1
        a0, a1 = v0[:, 1:], v1[:, 1:]
        y0[:, :-1] += o00 * a0 + o01 * a1
        y1[:, :-1] += o01 * a0 + o11 * a1
        c0, c1 = v0[:, :-1], v1[:, :-1]
        y0[:, 1:] += o00 * c0 + o01 * c1
        y1[:, 1:] += o01 * c0 + o11 * c1
        restrict(y)
        return y

    x = np.zeros_like(b)
    b_norm = float(np.linalg.norm(b.ravel()))
    if b_norm == 0.0:
        return x, 0, 0.0
    r = b.copy()
    p = r.copy()
    rs = float(np.dot(r.ravel(), r.ravel()))
    it = 0
    while it < max_iter:
        Ap = matvec(p)
        alpha = rs / float(np.dot(p.ravel(), Ap.ravel()))
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(np.dot(r.ravel(), r.ravel()))
        it += 1
        if np.sqrt(rs_new) <= tol_rel * b_norm:
            return x, it, np.sqrt(rs_new) / b_norm
        p = r + (rs_new / rs) * p
        restrict(p)
        rs = rs_new
    return x, -it, np.sqrt(rs) / b_norm


if _HAVE_NUMBA:

    @_njit(cache=True, fastmath=False)
    def _cg_numba(d00, d01, d11, o00, o01, o11, b, tol_rel, max_iter):  # pragma: no cover
        C = b.shape[0]
        n = b.shape[1]
        x = np.zeros((C, n, 2))
        b_norm_sq = 0.0
        for c in range(C):
            for j in range(n):
                b_norm_sq += b[c, j, 0] * b[c, j, 0] + b[c, j, 1] * b[c, j, 1]
        if b_norm_sq == 0.0:
            return x, 0, 0.0
        b_norm = np.sqrt(b_norm_sq)
        r = b.copy()
        p = b.copy()
        Ap = np.zeros((C, n, 2))
        rs = b_norm_sq
        it = 0
        while it < max_iter:
            # Ap = restrict(blocks @ p); p is kept in the subspace
            for c in range(C):
                for j in range(n):
                    v0 = p[c, j, 0]
                    v1 = p[c, j, 1]
                    y0 = d00[c, j] * v0 + d01[c, j] * v1
                    y1 = d01[c, j] * v0 + d11[c, j] * v1
                    if j > 0:
                        w0 = p[c, j - 1, 0]
                        w1 = p[c, j - 1, 1]
                        y0 += o00[c, j - 1] * w0 + o01[c, j - 1] * w1
                        y1 += o01[c, j - 1] * w0 + o11[c, j - 1] * w1
                    if j < n - 1:
                        w0 = p[c, j + 1, 0]
                        w1 = p[c, j + 1, 1]
                        y0 += o00[c, j] * w0 + o01[c, j] * w1
                        y1 += o01[c, j] * w0 + o11[c, j] * w1
                    Ap[c, j, 0] = y0
                    Ap[c, j, 1] = y1
            m0 = (Ap[0, 0, 0] + Ap[1, 0, 0] + Ap[2, 0, 0]) / 3.0
            m1 = (Ap[0, 0, 1] + Ap[1, 0, 1] + Ap[2, 0, 1]) / 3.0
            for c in range(C):
                Ap[c, 0, 0] = m0
                Ap[c, 0, 1] = m1
                Ap[c, n - 1, 0] = 0.0
                Ap[c, n - 1, 1] = 0.0
            pAp = 0.0
            for c in range(C):
                for j in range(n):
                    pAp += p[c, j, 0] * Ap[c, j, 0] + p[c, j, 1] * Ap[c, j, 1]
            alpha = rs / pAp
            rs_new = 0.0
            for c in range(C):
                for j in range(n):
                    x[c, j, 0] += alpha * p[c, j, 0]
                    x[c, j, 1] += alpha * p[c, j, 1]
                    r[c, j, 0] -= alpha * Ap[c, j, 0]
                    r[c, j, 1] -= alpha * Ap[c, j, 1]
                    rs_new += r[c, j, 0] * r[c, j, 0] + r[c, j, 1] * r[c, j, 1]
            it += 1
            if np.sqrt(rs_new) <= tol_rel * b_norm:
                return x, it, np.sqrt(rs_new) / b_norm
            beta = rs_new / rs
            for c in range(C):
                for j in range(n):
                    p[c, j, 0] = r[c, j, 0] + beta * p[c, j, 0]
                    p[c, j, 1] = r[c, j, 1] + beta * p[c, j, 1]
            m0 = (p[0, 0, 0] + p[1, 0, 0] + p[2, 0, 0]) / 3.0
            m1 = (p[0, 0, 1] + p[1, 0, 1] + p[2, 0, 1]) / 3.0
            for c in range(C):
                p[c, 0, 0] = m0
                p[c, 0, 1] = m1
                p[c, n - 1, 0] = 0.0
                p[c, n - 1, 1] = 0.0
            rs = rs_new
        return x, -it, np.sqrt(rs) / b_norm


def cg_solve(op: ConstrainedOperator, rhs: np.ndarray, tol_rel: float = CG_TOL_REL,
             max_iter: int | None = None):
    """Conjugate gradients for op x = rhs on the constrained subspace.

    Returns (x, iterations, final_relative_residual). Every search direction
    is restricted to the subspace, so the iterates stay admissible. A zero
    right-hand side returns the zero vector in zero iterations.
    """
    if max_iter is None:
        max_iter = CG_MAX_ITER_FACTOR * rhs.size
    b = op.restrict(rhs)
    d00, d01, d11, o00, o01, o11 = op.components()
    core = _cg_numba if _HAVE_NUMBA else _cg_python
    x, it, res = core(d00, d01, d11, o00, o01, o11, b, tol_rel, max_iter)
    if it < 0:
        raise CgDidNotConvergeError(-it, res)
    return x, it, res


def time_step(triod: TriodState, params: SimParams) -> tuple[TriodState, StepReport]:
    """Advance one step.

    The junction value of the new state is written once and broadcast to all
    three curves, and the pinned endpoints are copied over verbatim, so both
    invariants hold bit-exactly.
    """
    op, rhs = build_step_system(triod, params)
    inc, iters, res = cg_solve(op, rhs)

    new_nodes = triod.nodes + inc
    new_nodes[:, 0, :] = triod.nodes[0, 0, :] + inc[0, 0, :]
    new_nodes[:, -1, :] = triod.nodes[:, -1, :]
    new_state = TriodState(new_nodes, triod.time + params.time_step)

    speeds_sq = np.einsum("cjk,cjk->cj", inc[:, 1:, :], inc[:, 1:, :])
    report = StepReport(
        cg_iterations=iters,
        final_relative_residual=res,
        energy_after=energy(new_state, params.epsilon),
        min_segment_length_after=float(chord_lengths(new_nodes).min()),
        max_nodal_speed=float(np.sqrt(speeds_sq.max())) / params.time_step,
    )
    return new_state, report


def evolve(initial: TriodState, params: SimParams, stop: StoppingRule | None = None,
           stride: int = 1) -> Trajectory:
    """Run up to params.num_steps steps, recording every stride-th state.

    The initial and final states are always recorded. With a velocity
    threshold, the run ends at the first step whose largest non-junction
    nodal speed falls below it; that step index is n_total.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    states = [initial]
    state_steps = [0]
    reports: list[StepReport] = []
    state = initial
    n = 0
    threshold = stop.velocity_threshold if stop is not None else None
    while n < params.num_steps:
        state, report = time_step(state, params)
        n += 1
        reports.append(report)
        if n % stride == 0:
            states.append(state)
            state_steps.append(n)
        if threshold is not None and report.max_nodal_speed < threshold:
            break
    if state_steps[-1] != n:
        states.append(state)
        state_steps.append(n)
    return Trajectory(params, states, reports, state_steps, stride, n)
