"""Shared fixtures and independent oracles used across the test suite.

The oracles here deliberately re-derive quantities from scratch (closed-form
solutions, direct per-element integration) rather than calling the code paths
under test.
"""

import numpy as np
import pytest
import scipy.sparse as sp

import bayesfem as bf

BAR_A = 0.1
BAR_B = 0.099


def bar_coefficient(x):
    """Linearly decreasing axial stiffness of the reference bar."""
    return BAR_A - BAR_B * x


def bar_exact(x):
    """Closed-form solution of -(EA u')' = 1, u(0)=u(1)=0, EA = a - b x.

    Twice integrating and fitting the boundary conditions gives
    u(x) = (x - ln((a-bx)/a) / ln((a-b)/a)) / b.
    """
    a, b = BAR_A, BAR_B
    x = np.asarray(x, dtype=float)
    return (x - np.log((a - b * x) / a) / np.log((a - b) / a)) / b


def bar_operator():
    return bf.Poisson1D(coefficient=bar_coefficient)


def unit_load(x):
    return 1.0


def build_bar(m, levels):
    """Bar system: m coarse elements refined `levels` times, both ends clamped."""
    coarse = bf.generate_interval_mesh(m, 0.0, 1.0)
    hier = bf.refine_hierarchical(coarse, levels) if levels else bf.identity_hierarchy(coarse)
    system = bf.build_system(hier, bar_operator(), unit_load, ["left", "right"])
    return hier, system


def plate_operator():
    return bf.PlaneStress(youngs_modulus=3.0, poisson_ratio=0.2)


def plate_load(x, y):
    return (1.0, 0.0)


@pytest.fixture(scope="session")
def plate_hierarchy():
    from bayesfem.cli import packaged_plate_mesh

    return bf.refine_hierarchical(packaged_plate_mesh(), 1)


@pytest.fixture(scope="session")
def plate_system(plate_hierarchy):
    return bf.build_system(plate_hierarchy, plate_operator(), plate_load, ["left"])


# ---------------------------------------------------------------------------
# Independent direct-assembly oracles
# ---------------------------------------------------------------------------

def _tri_geometry(p):
    det = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
    area = 0.5 * det
    dNdx = np.array([p[1, 1] - p[2, 1], p[2, 1] - p[0, 1], p[0, 1] - p[1, 1]]) / det
    dNdy = np.array([p[2, 0] - p[1, 0], p[0, 0] - p[2, 0], p[1, 0] - p[0, 0]]) / det
    return area, dNdx, dNdy


def _b_matrix(dNdx, dNdy):
    B = np.zeros((3, 6))
    B[0, 0::2] = dNdx
    B[1, 1::2] = dNdy
    B[2, 0::2] = dNdy
    B[2, 1::2] = dNdx
    return B


def mixed_stiffness_oracle(hierarchy, op):
    """Direct assembly of H with coarse test functions and fine trial functions.

    Integrates operator(coarse basis, fine basis) element by element on the
    fine mesh, using the parent map to pick the (constant) coarse gradient on
    each fine element.  Entirely independent of the Phi^T K route.
    """
    coarse, fine = hierarchy.coarse, hierarchy.fine
    if fine.dim == 1:
        H = np.zeros((coarse.n_nodes, fine.n_nodes))
        g1 = (np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]), np.array([0.5, 0.5]))
        for e, (i, j) in enumerate(fine.elements):
            x0, x1 = fine.nodes[i, 0], fine.nodes[j, 0]
            h = x1 - x0
            pts, wts = g1
            ea_int = sum(w * op.coefficient(x0 + t * h) for t, w in zip(pts, wts)) * h
            ci, cj = coarse.elements[hierarchy.parent_map[e]]
            hc = coarse.nodes[cj, 0] - coarse.nodes[ci, 0]
            grad_c = {ci: -1.0 / hc, cj: 1.0 / hc}
            grad_f = {i: -1.0 / h, j: 1.0 / h}
            for cn, gc in grad_c.items():
                for fn, gf in grad_f.items():
                    H[cn, fn] += ea_int * gc * gf
        return H
    D = op.constitutive() * op.thickness
    H = np.zeros((coarse.n_nodes * 2, fine.n_nodes * 2))
    for e, elem in enumerate(fine.elements):
        area, dNdx, dNdy = _tri_geometry(fine.nodes[elem])
        Bf = _b_matrix(dNdx, dNdy)
        celem = coarse.elements[hierarchy.parent_map[e]]
        _, cdNdx, cdNdy = _tri_geometry(coarse.nodes[celem])
        Bc = _b_matrix(cdNdx, cdNdy)
        he = area * Bc.T @ D @ Bf
        cd = np.repeat(celem * 2, 2) + np.tile([0, 1], 3)
        fd = np.repeat(elem * 2, 2) + np.tile([0, 1], 3)
        H[np.ix_(cd, fd)] += he
    return H


def coarse_oracle(hierarchy, op, load, dirichlet_tags):
    """Direct coarse-mesh assembly of (Kc, g) over the interior DOFs."""
    dpn = op.dofs_per_node
    Kc_full = bf.assemble_stiffness(hierarchy.coarse, op)
    g_full = bf.assemble_load(hierarchy.coarse, load, dpn)
    part = bf.partition_dofs(hierarchy.coarse, dirichlet_tags, dpn)
    i = part.interior
    return Kc_full.tocsr()[i][:, i].toarray(), g_full[i]


def dense_posterior_oracle(prior, system):
    """Brute-force dense posterior moments from the defining formulas."""
    K = system.K.toarray()
    Kinv = np.linalg.inv(K)
    Sigma_f = (prior.alpha**2 * system.M.toarray() if prior.kind == "white_noise"
               else K.copy())
    Phi = system.Phi.toarray()
    S = Phi.T @ Sigma_f @ Phi + prior.sigma_e**2 * np.eye(Phi.shape[1])
    Sinv = np.linalg.inv(S)
    mean = Kinv @ (Sigma_f @ Phi @ Sinv @ (Phi.T @ system.f))
    Sigma_prior = Kinv @ Sigma_f @ Kinv
    Sigma_post = Kinv @ (Sigma_f - Sigma_f @ Phi @ Sinv @ Phi.T @ Sigma_f) @ Kinv
    return mean, Sigma_prior, 0.5 * (Sigma_post + Sigma_post.T), Sigma_f


def spd_random(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    return sp.csc_matrix(A @ A.T + n * np.eye(n))
