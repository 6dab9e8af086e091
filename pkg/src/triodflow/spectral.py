"""Conditioning studies: extreme eigenvalues of the row-equilibrated mass
block and condition numbers of the constrained step matrix.

All spectra are computed densely; the largest matrix in scope has a few
hundred rows. The default eigensolver is LAPACK via numpy; a cyclic Jacobi
implementation is kept alongside as an independent reference path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble_mass, assemble_stiffness, ConstrainedOperator
from .errors import InvalidSequenceError, NonpositiveDiagonalError
from .mesh import SimParams, TriodState, triod_geometry


@dataclass(frozen=True)
class SpectrumReport:
    lambda_max: float
    lambda_min: float
    cond2: float
    eoc_vs_previous: float | None = None

    def with_eoc(self, eoc: float | None) -> "SpectrumReport":
        return SpectrumReport(self.lambda_max, self.lambda_min, self.cond2, eoc)


def jacobi_eigenvalues(matrix: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Reference implementation used to cross-check the LAPACK path; quadratic
    cost per sweep keeps it for small matrices only.
    """
    A = np.array(matrix, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A * A) - np.sum(np.diag(A) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
    return np.sort(np.diag(A))


def symmetric_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(matrix)


def mass_block_dense(triod: TriodState, params: SimParams) -> np.ndarray:
    """Block-diagonal of the three per-curve velocity-form matrices."""
    geoms = triod_geometry(triod, params)
    h = params.mesh_size
    mats = [assemble_mass(g, params.epsilon, params.time_step, h).dense() for g in geoms]
    n = mats[0].shape[0]
    A = np.zeros((3 * n, 3 * n))
    for i, M in enumerate(mats):
        A[i * n : (i + 1) * n, i * n : (i + 1) * n] = M
    return A


def equilibrated_mass_spectrum(triod: TriodState, params: SimParams) -> SpectrumReport:
    """Extreme eigenvalues of the mass block after row equilibration.

    Dividing each row by its diagonal entry gives D^-1 A, which is similar to
    the symmetric D^-1/2 A D^-1/2; the spectrum is computed from the latter.
    """
    A = mass_block_dense(triod, params)
    d = np.diag(A)
    if np.any(d <= 0.0):
        raise NonpositiveDiagonalError(f"mass diagonal has nonpositive entries (min {d.min():.3e})")
    inv_sqrt = 1.0 / np.sqrt(d)
    S = A * np.outer(inv_sqrt, inv_sqrt)
    S = 0.5 * (S + S.T)
    eigs = symmetric_eigenvalues(S)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    return SpectrumReport(lam_max, lam_min, lam_max / lam_min)


def constrained_basis(num_elements: int) -> np.ndarray:
    """Orthonormal basis of the constrained subspace, shape (6(J+1), 6J-4).

    Coordinates are ordered curve-major, node-minor, component-last. The
    first two columns span the shared junction (equal entries on all three
    curves); the rest are unit vectors on the interior nodes. The pinned node
    J carries no basis vector.
    """
    J = int(num_elements)
    n = 3 * (J + 1) * 2
    dim = 6 * J - 4
    B = np.zeros((n, dim))

    def idx(curve, node, comp):
        return (curve * (J + 1) + node) * 2 + comp

    col = 0
    for comp in range(2):
        for curve in range(3):
            B[idx(curve, 0, comp), col] = 1.0 / np.sqrt(3.0)
        col += 1
    for curve in range(3):
        for node in range(1, J):
            for comp in range(2):
                B[idx(curve, node, comp), col] = 1.0
                col += 1
    assert col == dim
    return B


def system_condition(triod: TriodState, params: SimParams) -> SpectrumReport:
    """Condition number of the step matrix on the constrained subspace.

    The full averaged matrix is singular by construction, so the spectrum is
    taken from the reduced matrix B^T (avg (M+S) avg) B over an explicit
    orthonormal basis B of the subspace.
    """
    geoms = triod_geometry(triod, params)
    h = params.mesh_size
    blocks = [
        assemble_mass(g, params.epsilon, params.time_step, h)
        + assemble_stiffness(g, params.epsilon, h)
        for g in geoms
    ]
    op = ConstrainedOperator.from_blocks(blocks)
    J = params.num_elements
    B = constrained_basis(J)
    dim = B.shape[1]
    images = np.empty_like(B)
    for col in range(dim):
        v = B[:, col].reshape(3, J + 1, 2)
        images[:, col] = op.apply(v).ravel()
    reduced = B.T @ images
    reduced = 0.5 * (reduced + reduced.T)
    eigs = symmetric_eigenvalues(reduced)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    return SpectrumReport(lam_max, lam_min, lam_max / lam_min)


def conditioning_eoc(values) -> list[float]:
    """Log-log slopes of condition numbers between consecutive parameters.

    values is a sequence of (parameter, cond2) pairs; the slope convention is
    (log c_prev - log c_cur) / (log p_prev - log p_cur).
    """
    pts = list(values)
    if len(pts) < 2:
        raise InvalidSequenceError("need at least two (parameter, cond) pairs")
    for p, c in pts:
        if p <= 0.0 or c <= 0.0:
            raise InvalidSequenceError(f"parameters and conds must be positive, got ({p}, {c})")
    out = []
    for (p0, c0), (p1, c1) in zip(pts[:-1], pts[1:]):
        if p0 == p1:
            raise InvalidSequenceError("consecutive parameters must differ")
        out.append(float((np.log(c0) - np.log(c1)) / (np.log(p0) - np.log(p1))))
    return out
