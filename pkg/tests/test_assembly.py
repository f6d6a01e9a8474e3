"""Stiffness/mass/load assembly, Galerkin restriction, Dirichlet elimination."""

import numpy as np
import pytest

import bayesfem as bf
from conftest import (
    bar_coefficient,
    bar_exact,
    bar_operator,
    build_bar,
    coarse_oracle,
    mixed_stiffness_oracle,
    plate_load,
    plate_operator,
    unit_load,
)


class TestStiffness1D:
    def test_two_elements_constant_coefficient(self):
        mesh = bf.generate_interval_mesh(2, 0.0, 1.0)
        op = bf.Poisson1D(coefficient=lambda x: 1.0)
        K = bf.assemble_stiffness(mesh, op).toarray()
        # interior entry 1/h + 1/h with h = 0.5
        assert np.isclose(K[1, 1], 4.0)
        assert np.isclose(K[0, 1], -2.0)

    def test_linear_coefficient_exact_per_element(self):
        mesh = bf.generate_interval_mesh(64, 0.0, 1.0)
        K = bf.assemble_stiffness(mesh, bar_operator()).toarray()
        for i, j in mesh.elements:
            x0, x1 = mesh.nodes[i, 0], mesh.nodes[j, 0]
            h = x1 - x0
            # closed-form integral of the linear coefficient over the element
            ea_int = (bar_coefficient(x0) + bar_coefficient(x1)) / 2 * h
            assert np.isclose(K[i, j], -ea_int / h**2, rtol=1e-13)

    def test_coefficient_scaling(self):
        mesh = bf.generate_interval_mesh(8, 0.0, 1.0)
        K1 = bf.assemble_stiffness(mesh, bf.Poisson1D(coefficient=lambda x: 1 + x))
        K3 = bf.assemble_stiffness(mesh, bf.Poisson1D(coefficient=lambda x: 3 * (1 + x)))
        assert np.allclose(K3.toarray(), 3 * K1.toarray(), rtol=1e-13)

    def test_nonpositive_coefficient_rejected(self):
        mesh = bf.generate_interval_mesh(4, 0.0, 1.0)
        with pytest.raises(bf.InvalidArgumentError):
            bf.assemble_stiffness(mesh, bf.Poisson1D(coefficient=lambda x: x - 0.5))


class TestStiffnessPlaneStress:
    def test_single_triangle_against_direct_integration(self):
        mesh = bf.Mesh(dim=2, nodes=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                       elements=[[0, 1, 2]])
        op = plate_operator()
        K = bf.assemble_stiffness(mesh, op).toarray()
        # independent: constant B over the element, area 1/2
        D = op.constitutive()
        B = np.array([
            [-1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0, 0.0, 1.0],
            [-1.0, -1.0, 0.0, 1.0, 1.0, 0.0],
        ])
        assert np.allclose(K, 0.5 * B.T @ D @ B, rtol=1e-13)

    def test_rigid_body_modes_in_kernel(self):
        mesh = bf.Mesh(
            dim=2,
            nodes=[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            elements=[[0, 1, 2], [0, 2, 3]],
        )
        K = bf.assemble_stiffness(mesh, plate_operator()).toarray()
        tx = np.tile([1.0, 0.0], 4)
        ty = np.tile([0.0, 1.0], 4)
        rot = np.column_stack([-mesh.nodes[:, 1], mesh.nodes[:, 0]]).ravel()
        for mode in (tx, ty, rot):
            assert np.linalg.norm(K @ mode) < 1e-12 * np.abs(K).max()

    def test_invalid_material(self):
        with pytest.raises(bf.InvalidArgumentError):
            bf.PlaneStress(youngs_modulus=-1.0, poisson_ratio=0.2)
        with pytest.raises(bf.InvalidArgumentError):
            bf.PlaneStress(youngs_modulus=1.0, poisson_ratio=0.5)


class TestMass:
    def test_1d_entries(self):
        mesh = bf.generate_interval_mesh(2, 0.0, 1.0)
        M = bf.assemble_mass(mesh).toarray()
        assert np.isclose(M[1, 1], 1.0 / 3.0)   # 2h/3 with h = 0.5
        assert np.isclose(M[0, 1], 1.0 / 12.0)  # h/6

    def test_triangle_element_matrix(self):
        mesh = bf.Mesh(dim=2, nodes=[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]],
                       elements=[[0, 1, 2]])
        M = bf.assemble_mass(mesh).toarray()
        area = 2.0
        expected = area / 12.0 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]], dtype=float)
        assert np.allclose(M, expected, rtol=1e-13)

    def test_total_mass_is_domain_measure(self, plate_hierarchy):
        mesh = plate_hierarchy.fine
        M = bf.assemble_mass(mesh, dofs_per_node=2)
        ones = np.ones(M.shape[0])
        total = ones @ (M @ ones)
        area = mesh.signed_areas().sum()
        assert np.isclose(total, 2 * area, rtol=1e-12)  # per scalar component


class TestLoad:
    def test_uniform_1d(self):
        mesh = bf.generate_interval_mesh(8, 0.0, 1.0)
        f = bf.assemble_load(mesh, unit_load)
        assert np.allclose(f[1:-1], 1.0 / 8.0, rtol=1e-13)
        assert np.allclose(f[[0, -1]], 1.0 / 16.0, rtol=1e-13)

    def test_zero_load(self):
        mesh = bf.generate_interval_mesh(4, 0.0, 1.0)
        assert not bf.assemble_load(mesh, lambda x: 0.0).any()

    def test_horizontal_body_load_has_zero_y_component(self, plate_hierarchy):
        f = bf.assemble_load(plate_hierarchy.fine, plate_load, dofs_per_node=2)
        assert not f[1::2].any()
        assert f[0::2].sum() > 0


class TestRestriction:
    def test_bar_matches_direct_coarse_assembly(self):
        hier, system = build_bar(16, 2)  # n = 64, m = 16
        Kc_direct, g_direct = coarse_oracle(hier, bar_operator(), unit_load,
                                            ["left", "right"])
        assert np.abs(system.Kc.toarray() - Kc_direct).max() <= 1e-12 * np.abs(Kc_direct).max()
        assert np.abs(system.g - g_direct).max() <= 1e-12 * np.abs(g_direct).max()

    def test_identity_hierarchy(self):
        _, system = build_bar(8, 0)
        assert (system.Kc != system.K).nnz == 0
        assert np.array_equal(system.g, system.f)

    def test_mixed_assembly_oracle_bar(self):
        hier, system = build_bar(16, 2)
        H_full = mixed_stiffness_oracle(hier, bar_operator())
        i_f = system.fine_partition.interior
        i_c = system.coarse_partition.interior
        H = (system.Phi.T @ system.K).toarray()
        assert np.abs(H - H_full[np.ix_(i_c, i_f)]).max() <= 1e-12 * np.abs(H).max()


class TestElimination:
    def test_bar_interior_size(self):
        _, system = build_bar(16, 2)
        assert system.n_interior == 63
        assert system.m_interior == 15

    def test_no_dirichlet_keeps_full_blocks(self):
        coarse = bf.generate_interval_mesh(4, 0.0, 1.0)
        hier = bf.identity_hierarchy(coarse)
        system = bf.build_system(hier, bar_operator(), unit_load, [])
        assert system.K.shape == (5, 5)

    def test_empty_interior_rejected(self):
        mesh = bf.generate_interval_mesh(1, 0.0, 1.0)
        hier = bf.identity_hierarchy(mesh)
        with pytest.raises(bf.InvalidArgumentError):
            bf.build_system(hier, bar_operator(), unit_load, ["left", "right"])

    def test_coupling_block_shape(self):
        _, system = build_bar(4, 2)
        assert system.K_id.shape == (system.n_interior, 2)


class TestPhysicsOracle:
    def test_bar_solution_converges_second_order(self):
        errs = []
        for levels in (2, 4, 6):
            hier, system = build_bar(16, levels)
            u = bf.cholesky(system.K).solve(system.f)
            x = hier.fine.nodes[system.fine_partition.interior, 0]
            exact = bar_exact(x)
            errs.append(np.linalg.norm(u - exact) / np.linalg.norm(exact))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:])) / 2
        assert (rates > 1.8).all() and (rates < 2.2).all()
