"""Assembly of the per-curve mass and stiffness matrices and the constrained
step operator.

Each matrix is symmetric block tridiagonal with 2x2 blocks over the nodes of
one curve. Because the discrete curves are piecewise linear, every geometric
factor is constant per element and the integrals of hat-function products are
evaluated in closed form; no quadrature rule is involved.

assemble_mass and assemble_stiffness are the readable reference assembly;
build_step_system uses a fused vectorised path over all three curves that
produces the same matrices (tested against the reference entry-wise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateElementError
from .mesh import ELL_MIN, ElementGeometry, SimParams, TriodState, triod_geometry


@dataclass(frozen=True, eq=False)
class BlockTridiag:
    """Symmetric block-tridiagonal matrix of 2x2 blocks.

    diag holds the J+1 diagonal blocks, off the J super-diagonal blocks; the
    sub-diagonal block (j+1, j) is the transpose of off[j].
    """

    diag: np.ndarray  # (J+1, 2, 2)
    off: np.ndarray  # (J, 2, 2)

    def __add__(self, other: "BlockTridiag") -> "BlockTridiag":
        return BlockTridiag(self.diag + other.diag, self.off + other.off)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply to a nodal vector of shape (J+1, 2)."""
        y = np.einsum("jab,jb->ja", self.diag, v)
        y[:-1] += np.einsum("jab,jb->ja", self.off, v[1:])
        y[1:] += np.einsum("jba,jb->ja", self.off, v[:-1])
        return y

    def dense(self) -> np.ndarray:
        n = self.diag.shape[0]
        A = np.zeros((2 * n, 2 * n))
        for j in range(n):
            A[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = self.diag[j]
        for j in range(n - 1):
            A[2 * j : 2 * j + 2, 2 * j + 2 : 2 * j + 4] = self.off[j]
            A[2 * j + 2 : 2 * j + 4, 2 * j : 2 * j + 2] = self.off[j].T
        return A


def mass_density(geom: ElementGeometry, epsilon: float, delta: float) -> np.ndarray:
    """Per-element 2x2 density of the weighted velocity inner product.

    Normal motion is weighted by the length element, tangential motion by
    epsilon times its square; the leading 1/delta comes from the backward
    difference quotient in time. Each off-diagonal entry is computed once so
    the blocks are bitwise symmetric.
    """
    a = geom.length_element / delta
    b = epsilon * geom.length_element ** 2 / delta
    n0, n1 = geom.normal[:, 0], geom.normal[:, 1]
    t0, t1 = geom.tangent[:, 0], geom.tangent[:, 1]
    dens = np.empty((geom.length_element.shape[0], 2, 2))
    dens[:, 0, 0] = a * n0 * n0 + b * t0 * t0
    dens[:, 1, 1] = a * n1 * n1 + b * t1 * t1
    dens[:, 0, 1] = dens[:, 1, 0] = a * n0 * n1 + b * t0 * t1
    return dens


def assemble_mass(geom: ElementGeometry, epsilon: float, delta: float, h: float) -> BlockTridiag:
    """Velocity-form matrix; hat products contribute h/3 on-diagonal and h/6 off."""
    dens = mass_density(geom, epsilon, delta)
    J = dens.shape[0]
    diag = np.zeros((J + 1, 2, 2))
    diag[:-1] += (h / 3.0) * dens
    diag[1:] += (h / 3.0) * dens
    off = (h / 6.0) * dens
    return BlockTridiag(diag, off)


def stiffness_coefficients(geom: ElementGeometry, epsilon: float, h: float) -> np.ndarray:
    """Per-element scalar weight (epsilon + 1/length_element) / h."""
    return (epsilon + 1.0 / geom.length_element) / h


def assemble_stiffness(geom: ElementGeometry, epsilon: float, h: float) -> BlockTridiag:
    """Second-difference matrix; every block is a multiple of the identity."""
    c = stiffness_coefficients(geom, epsilon, h)
    J = c.shape[0]
    eye = np.eye(2)
    diag = np.zeros((J + 1, 2, 2))
    diag[:-1] += c[:, None, None] * eye
    diag[1:] += c[:, None, None] * eye
    off = -c[:, None, None] * eye
    return BlockTridiag(diag, off)


def apply_junction_average(vec: np.ndarray) -> np.ndarray:
    """Replace the junction entries of all three curves by their mean.

    The input has shape (3, J+1, 2); only node 0 is touched. The map is a
    symmetric idempotent projection.
    """
    out = np.array(vec, dtype=float)
    out[:, 0, :] = out[:, 0, :].mean(axis=0)
    return out


def apply_fixed_end_mask(vec: np.ndarray) -> np.ndarray:
    """Zero the entries of the pinned node J of every curve."""
    out = np.array(vec, dtype=float)
    out[:, -1, :] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class ConstrainedOperator:
    """The step matrix restricted to the constrained subspace.

    Applies mask . average . blockdiag(M+S) . average . mask, where the mask
    zeroes the pinned-node entries and the average couples the three junction
    copies. On vectors with equal junction entries and zero pinned entries
    the operator is symmetric positive definite.

    All blocks of the combined matrix are themselves symmetric 2x2, so the
    operator stores the three independent components of each block.
    """

    diag: np.ndarray  # (3, J+1, 2, 2)
    off: np.ndarray  # (3, J, 2, 2)
    average_junction: bool = True
    mask_fixed_end: bool = True

    def __post_init__(self):
        for name in ("diag", "off"):
            a = getattr(self, name)
            if not np.array_equal(a, a.transpose(0, 1, 3, 2)):
                raise ValueError(f"{name} blocks must be symmetric 2x2")

    @classmethod
    def from_blocks(cls, blocks, average_junction: bool = True, mask_fixed_end: bool = True) -> "ConstrainedOperator":
        """Build from one BlockTridiag per curve (already summed M+S)."""
        return cls(
            np.stack([b.diag for b in blocks]),
            np.stack([b.off for b in blocks]),
            average_junction,
            mask_fixed_end,
        )

    @classmethod
    def from_components(cls, d00, d01, d11, o00, o01, o11,
                        average_junction: bool = True, mask_fixed_end: bool = True) -> "ConstrainedOperator":
        diag = np.stack([np.stack([d00, d01], axis=-1), np.stack([d01, d11], axis=-1)], axis=-2)
        off = np.stack([np.stack([o00, o01], axis=-1), np.stack([o01, o11], axis=-1)], axis=-2)
        return cls(diag, off, average_junction, mask_fixed_end)

    @property
    def num_elements(self) -> int:
        return self.off.shape[1]

    def components(self):
        """(d00, d01, d11, o00, o01, o11) as contiguous scalar arrays."""
        d, o = self.diag, self.off
        return tuple(np.ascontiguousarray(a) for a in
                     (d[..., 0, 0], d[..., 0, 1], d[..., 1, 1],
                      o[..., 0, 0], o[..., 0, 1], o[..., 1, 1]))

    def restrict(self, v: np.ndarray) -> np.ndarray:
        """Project onto the constrained subspace (junction averaged, pinned zeroed)."""
        out = np.array(v, dtype=float)
        self.restrict_inplace(out)
        return out

    def restrict_inplace(self, v: np.ndarray):
        if self.average_junction:
            v[:, 0, :] = v[:, 0, :].mean(axis=0)
        if self.mask_fixed_end:
            v[:, -1, :] = 0.0

    def matvec_blocks(self, v: np.ndarray) -> np.ndarray:
        d, o = self.diag, self.off
        v0, v1 = v[..., 0], v[..., 1]
        y = np.empty_like(v)
        y0, y1 = y[..., 0], y[..., 1]
        d00, d01, d11 = d[..., 0, 0], d[..., 0, 1], d[..., 1, 1]
        o00, o01, o11 = o[..., 0, 0], o[..., 0, 1], o[..., 1, 1]
        np.multiply(d00, v0, out=y0)
        y0 += d01 * v1
        np.multiply(d01, v0, out=y1)
        y1 += d11 * v1
        a0, a1 = v0[:, 1:], v1[:, 1:]
        y0[:, :-1] += o00 * a0 + o01 * a1
        y1[:, :-1] += o01 * a0 + o11 * a1
        b0, b1 = v0[:, :-1], v1[:, :-1]
        y0[:, 1:] += o00 * b0 + o01 * b1
        y1[:, 1:] += o01 * b0 + o11 * b1
        return y

    def apply(self, v: np.ndarray) -> np.ndarray:
        y = self.matvec_blocks(self.restrict(v))
        self.restrict_inplace(y)
        return y


def apply_stiffness_to_positions(triod: TriodState, geoms, params: SimParams) -> np.ndarray:
    """Evaluate the stiffness term on the current nodal positions.

    Written in first-difference form, so the result depends only on chord
    vectors and is bit-invariant under translation of the whole triod.
    """
    d = triod.nodes[:, 1:, :] - triod.nodes[:, :-1, :]
    c = np.stack([stiffness_coefficients(g, params.epsilon, params.mesh_size) for g in geoms])
    w = c[:, :, None] * d
    out = np.zeros_like(triod.nodes)
    out[:, 1:, :] += w
    out[:, :-1, :] -= w
    return out


def build_step_system(triod: TriodState, params: SimParams):
    """Operator and right-hand side of one implicit step in increment form.

    The unknown is the nodal increment; the right-hand side is minus the
    restricted stiffness action on the previous positions, so a configuration
    with vanishing right-hand side is stationary. Fused vectorised assembly
    over all three curves; equals the reference assembly entry-wise.
    """
    nodes = triod.nodes
    eps, delta, h = params.epsilon, params.time_step, params.mesh_size

    d = nodes[:, 1:, :] - nodes[:, :-1, :]
    chords = np.sqrt(np.einsum("cjk,cjk->cj", d, d))
    bad = np.argwhere(chords <= ELL_MIN)
    if bad.size:
        i, j = bad[0]
        raise DegenerateElementError(int(j), int(i), float(chords[i, j]))
    ell = chords / h
    tx = d[..., 0] / chords
    ty = d[..., 1] / chords

    # mass density components (normal weight ell, tangential eps*ell^2)
    a = ell / delta
    b = eps * ell * ell / delta
    m00 = a * ty * ty + b * tx * tx
    m01 = (b - a) * tx * ty
    m11 = a * tx * tx + b * ty * ty

    c = (eps + 1.0 / ell) / h

    third, sixth = h / 3.0, h / 6.0
    shape = (3, params.num_elements + 1)
    d00 = np.zeros(shape)
    d01 = np.zeros(shape)
    d11 = np.zeros(shape)
    e00 = third * m00 + c
    e01 = third * m01
    e11 = third * m11 + c
    d00[:, :-1] += e00
    d00[:, 1:] += e00
    d01[:, :-1] += e01
    d01[:, 1:] += e01
    d11[:, :-1] += e11
    d11[:, 1:] += e11
    o00 = sixth * m00 - c
    o01 = sixth * m01
    o11 = sixth * m11 - c

    op = ConstrainedOperator.from_components(d00, d01, d11, o00, o01, o11)

    w = c[:, :, None] * d
    rhs = np.zeros_like(nodes)
    rhs[:, 1:, :] -= w
    rhs[:, :-1, :] += w
    op.restrict_inplace(rhs)
    return op, rhs
