"""Assembly of stiffness, mass, and load on P1 meshes, coarse restriction,
and Dirichlet elimination.

Quadrature is 2-point Gauss on segments and the 3-point edge-midpoint rule
on triangles; both are exact for P1 mass matrices and for linear coefficient
fields, which keeps the Galerkin identities Kc = Phi^T K Phi and g = Phi^T f
exact to rounding for the supported test problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .mesh import DofPartition, Mesh, partition_dofs

# 2-point Gauss on [0, 1]
_GAUSS_1D = (
    np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]),
    np.array([0.5, 0.5]),
)
# edge midpoints on the reference triangle, weights sum to 1
_MIDPOINT_TRI = (
    np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
    np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
)


@dataclass(frozen=True)
class Poisson1D:
    """1D operator -d/dx( coefficient(x) du/dx ); coefficient must be positive."""

    coefficient: object  # callable x -> stiffness coefficient

    @property
    def dofs_per_node(self):
        return 1


@dataclass(frozen=True)
class PlaneStress:
    """2D plane-stress elasticity with engineering shear strain convention."""

    youngs_modulus: float
    poisson_ratio: float
    thickness: float = 1.0

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise InvalidArgumentError("youngs_modulus must be positive")
        if not 0 <= self.poisson_ratio < 0.5:
            raise InvalidArgumentError("poisson_ratio must be in [0, 0.5)")
        if self.thickness <= 0:
            raise InvalidArgumentError("thickness must be positive")

    @property
    def dofs_per_node(self):
        return 2

    def constitutive(self):
        e, nu = self.youngs_modulus, self.poisson_ratio
        return e / (1.0 - nu**2) * np.array(
            [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]]
        )


@dataclass(frozen=True)
class AssembledSystem:
    """Interior-block system after Dirichlet elimination.

    K, M: interior fine blocks; f: interior fine load; Phi: interior
    prolongation block; Kc, Mc, g: coarse interior quantities; K_id: the
    interior x Dirichlet stiffness coupling kept for inhomogeneous BC priors.
    """

    K: sp.csc_matrix
    M: sp.csc_matrix
    f: np.ndarray
    Phi: sp.csc_matrix
    Kc: sp.csc_matrix
    Mc: sp.csc_matrix
    g: np.ndarray
    K_id: sp.csc_matrix
    fine_partition: DofPartition
    coarse_partition: DofPartition

    @property
    def n_interior(self):
        return self.K.shape[0]

    @property
    def m_interior(self):
        return self.Phi.shape[1]


def _triplets_to_csc(rows, cols, vals, n):
    A = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_stiffness(mesh, op):
    """Fine stiffness over the full DOF set for the given operator."""
    if isinstance(op, Poisson1D):
        if mesh.dim != 1:
            raise InvalidArgumentError("Poisson1D operator needs a 1D mesh")
        return _stiffness_1d(mesh, op)
    if isinstance(op, PlaneStress):
        if mesh.dim != 2:
            raise InvalidArgumentError("PlaneStress operator needs a 2D mesh")
        return _stiffness_plane_stress(mesh, op)
    raise InvalidArgumentError(f"unknown operator {op!r}")


def _stiffness_1d(mesh, op):
    pts, wts = _GAUSS_1D
    rows, cols, vals = [], [], []
    for i, j in mesh.elements:
        x0, x1 = mesh.nodes[i, 0], mesh.nodes[j, 0]
        h = x1 - x0
        xq = x0 + pts * h
        coeff = np.asarray([op.coefficient(x) for x in xq], dtype=float)
        if (coeff <= 0).any():
            raise InvalidArgumentError(f"coefficient non-positive on element ({i},{j})")
        k = float((wts * coeff).sum()) * h / h**2
        rows.extend([i, i, j, j])
        cols.extend([i, j, i, j])
        vals.extend([k, -k, -k, k])
    return _triplets_to_csc(rows, cols, vals, mesh.n_nodes)


def _element_gradients(p):
    """Constant P1 shape gradients on a triangle with vertex coords p (3x2)."""
    det = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
    area = 0.5 * det
    bvec = np.array([p[1, 1] - p[2, 1], p[2, 1] - p[0, 1], p[0, 1] - p[1, 1]]) / det
    cvec = np.array([p[2, 0] - p[1, 0], p[0, 0] - p[2, 0], p[1, 0] - p[0, 0]]) / det
    return area, bvec, cvec


def _stiffness_plane_stress(mesh, op):
    D = op.constitutive() * op.thickness
    rows, cols, vals = [], [], []
    for elem in mesh.elements:
        p = mesh.nodes[elem]
        area, bvec, cvec = _element_gradients(p)
        B = np.zeros((3, 6))
        B[0, 0::2] = bvec
        B[1, 1::2] = cvec
        B[2, 0::2] = cvec
        B[2, 1::2] = bvec
        ke = area * B.T @ D @ B
        dofs = np.repeat(elem * 2, 2) + np.tile([0, 1], 3)
        rows.extend(np.repeat(dofs, 6))
        cols.extend(np.tile(dofs, 6))
        vals.extend(ke.ravel())
    return _triplets_to_csc(rows, cols, vals, mesh.n_nodes * 2)


def assemble_mass(mesh, dofs_per_node=1):
    """Fine mass matrix, exact for P1 x P1; block diagonal per component."""
    rows, cols, vals = [], [], []
    if mesh.dim == 1:
        me_ref = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
        for i, j in mesh.elements:
            h = mesh.nodes[j, 0] - mesh.nodes[i, 0]
            me = me_ref * h
            for a, ga in enumerate((i, j)):
                for b, gb in enumerate((i, j)):
                    rows.append(ga)
                    cols.append(gb)
                    vals.append(me[a, b])
    else:
        me_ref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        for elem in mesh.elements:
            area, _, _ = _element_gradients(mesh.nodes[elem])
            me = me_ref * area
            for a in range(3):
                for b in range(3):
                    rows.append(elem[a])
                    cols.append(elem[b])
                    vals.append(me[a, b])
    M = _triplets_to_csc(rows, cols, vals, mesh.n_nodes)
    return expand_dofs(M, dofs_per_node)


def assemble_load(mesh, load, dofs_per_node=1):
    """Load vector f_j = integral of load * phi_j by the element quadrature.

    1D: load(x) -> scalar.  2D with 2 DOFs/node: load(x, y) -> (fx, fy).
    """
    n_dofs = mesh.n_nodes * dofs_per_node
    f = np.zeros(n_dofs)
    if mesh.dim == 1:
        pts, wts = _GAUSS_1D
        for i, j in mesh.elements:
            x0, x1 = mesh.nodes[i, 0], mesh.nodes[j, 0]
            h = x1 - x0
            for t, w in zip(pts, wts):
                x = x0 + t * h
                val = w * h * float(load(x))
                f[i] += val * (1.0 - t)
                f[j] += val * t
    else:
        pts, wts = _MIDPOINT_TRI
        for elem in mesh.elements:
            p = mesh.nodes[elem]
            area, _, _ = _element_gradients(p)
            for (l1, l2), w in zip(pts, wts):
                shape = np.array([1.0 - l1 - l2, l1, l2])
                x, y = shape @ p
                val = np.atleast_1d(np.asarray(load(x, y), dtype=float))
                if len(val) != dofs_per_node:
                    raise InvalidArgumentError(
                        f"load returned {len(val)} components, expected {dofs_per_node}"
                    )
                for a in range(3):
                    for comp in range(dofs_per_node):
                        f[elem[a] * dofs_per_node + comp] += w * area * shape[a] * val[comp]
    return f


def expand_dofs(A, dofs_per_node):
    """Blockwise expansion of a scalar nodal matrix to interleaved vector DOFs."""
    if dofs_per_node == 1:
        return A.tocsc()
    return sp.kron(A, sp.identity(dofs_per_node), format="csc")


def restrict_to_coarse(K, M, f, Phi):
    """Galerkin restriction: Kc = Phi^T K Phi, Mc = Phi^T M Phi, g = Phi^T f."""
    if K.shape[0] != Phi.shape[0] or len(f) != Phi.shape[0]:
        raise InvalidArgumentError("prolongation shape does not match fine system")
    Kc = (Phi.T @ K @ Phi).tocsc()
    Mc = (Phi.T @ M @ Phi).tocsc()
    g = Phi.T @ f
    return Kc, Mc, g


def eliminate_dirichlet(K, M, f, Phi, fine_partition, coarse_partition):
    """Extract interior blocks (homogeneous Dirichlet data)."""
    i_f = fine_partition.interior
    d_f = fine_partition.dirichlet
    i_c = coarse_partition.interior
    if len(i_f) == 0:
        raise InvalidArgumentError("empty interior DOF set")
    K = K.tocsr()
    M = M.tocsr()
    Phi = Phi.tocsr()
    K_ii = K[i_f][:, i_f].tocsc()
    M_ii = M[i_f][:, i_f].tocsc()
    K_id = K[i_f][:, d_f].tocsc()
    Phi_ii = Phi[i_f][:, i_c].tocsc()
    f_i = f[i_f]
    Kc, Mc, g = restrict_to_coarse(K_ii, M_ii, f_i, Phi_ii)
    return AssembledSystem(
        K=K_ii, M=M_ii, f=f_i, Phi=Phi_ii, Kc=Kc, Mc=Mc, g=g, K_id=K_id,
        fine_partition=fine_partition, coarse_partition=coarse_partition,
    )


def build_system(hierarchy, op, load, dirichlet_tags):
    """Assemble the fine operators on a hierarchy and eliminate Dirichlet DOFs."""
    dpn = op.dofs_per_node
    fine = hierarchy.fine
    K = assemble_stiffness(fine, op)
    M = assemble_mass(fine, dpn)
    f = assemble_load(fine, load, dpn)
    Phi = expand_dofs(hierarchy.prolongation, dpn)
    fine_part = partition_dofs(fine, dirichlet_tags, dpn)
    coarse_part = partition_dofs(hierarchy.coarse, dirichlet_tags, dpn)
    return eliminate_dirichlet(K, M, f, Phi, fine_part, coarse_part)
