"""Gramian assembly, regularized resolvent, control law, sweeps."""

import math

import numpy as np
import pytest

from fracctrl.errors import DomainError
from fracctrl.gramian import (
    ControlLaw,
    ControlMap,
    GramianBundle,
    assemble_gramian,
    control_energy_quadrature,
    eval_control,
    linear_terminal_state,
    regularize,
    simulate_linear_terminal,
    sweep_regularization,
)
from fracctrl.spectral import SpectralOperator, kernel_values


def scalar_op(mu=0.0):
    return SpectralOperator(eigenvalues=np.array([mu]))


def random_psd_bundle(rng, dim):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    lam = 10.0 ** rng.uniform(-3, 0, dim)
    mat = (q * lam) @ q.T
    mat = 0.5 * (mat + mat.T)
    return GramianBundle(
        matrix=mat, horizon=1.0, quad_nodes=0, eig_min=float(np.linalg.eigvalsh(mat)[0])
    )


class TestControlMap:
    def test_identity(self):
        B = ControlMap.identity(3)
        assert B.norm == pytest.approx(1.0, abs=1e-14)
        assert (B.n_states, B.n_controls) == (3, 3)

    def test_modes(self):
        B = ControlMap.modes(8, [1, 3])
        assert B.matrix.shape == (8, 2)
        assert B.matrix[0, 0] == 1.0 and B.matrix[2, 1] == 1.0
        assert B.matrix.sum() == 2.0

    def test_norm_is_largest_singular_value(self):
        mat = np.array([[3.0, 0.0], [0.0, 4.0], [0.0, 0.0]])
        assert ControlMap(matrix=mat).norm == pytest.approx(4.0, abs=1e-12)

    def test_bad_mode_index(self):
        with pytest.raises(DomainError):
            ControlMap.modes(4, [0])


class TestAssembly:
    def test_flat_integrand(self):
        gram = assemble_gramian(scalar_op(0.0), 1.5, ControlMap.identity(1), 2.0, 16)
        assert gram.matrix[0, 0] == pytest.approx(2.0, abs=1e-13)

    def test_classical_limit(self):
        """alpha -> 1 recovers the semigroup Gramian int_0^1 e^{2 mu s} ds."""
        gram = assemble_gramian(scalar_op(-1.0), 1.0 + 1e-4, ControlMap.identity(1), 1.0, 64)
        assert gram.matrix[0, 0] == pytest.approx(0.4323323583816936, abs=1e-3)

    def test_node_refinement(self):
        op = SpectralOperator.dirichlet_diffusion(4, shift=1.0)
        B = ControlMap.identity(4)
        g64 = assemble_gramian(op, 1.5, B, 1.0, 64).matrix
        g128 = assemble_gramian(op, 1.5, B, 1.0, 128).matrix
        assert np.max(np.abs(g64 - g128)) <= 1e-10

    def test_symmetry_and_psd(self):
        op = SpectralOperator.dirichlet_diffusion(6, shift=1.0)
        gram = assemble_gramian(op, 1.4, ControlMap.identity(6), 1.5, 64)
        assert np.max(np.abs(gram.matrix - gram.matrix.T)) <= 1e-12
        assert gram.eig_min >= -1e-10

    def test_rank_deficient_control(self):
        op = SpectralOperator.dirichlet_diffusion(8, shift=1.0)
        gram = assemble_gramian(op, 1.5, ControlMap.modes(8, [1, 2]), 1.0, 64)
        # unactuated modes contribute nothing
        assert np.allclose(gram.matrix[2:, :], 0.0, atol=1e-15)
        assert abs(gram.eig_min) <= 1e-12


class TestResolvent:
    def test_scalar(self):
        gram = GramianBundle(matrix=np.array([[2.0]]), horizon=1.0, quad_nodes=16, eig_min=2.0)
        r = regularize(gram, 1.0)
        assert r.solve(np.array([1.0]))[0] == pytest.approx(1.0 / 3.0, abs=1e-14)

    def test_rejects_nonpositive_a(self):
        gram = GramianBundle(matrix=np.eye(2), horizon=1.0, quad_nodes=16, eig_min=1.0)
        with pytest.raises(DomainError):
            regularize(gram, 0.0)

    @pytest.mark.parametrize("a", [1.0, 1e-3, 1e-6])
    def test_identity_and_contraction(self, a):
        rng = np.random.default_rng(11)
        for _ in range(5):
            gram = random_psd_bundle(rng, 16)
            res = regularize(gram, a)
            eye = np.eye(16)
            r_mat = res.solve(eye)
            assert np.max(np.abs(a * r_mat + gram.matrix @ r_mat - eye)) <= 1e-10
            bound = a / (a + gram.eig_min)
            for _ in range(10):
                x = rng.standard_normal(16)
                lhs = a * np.linalg.norm(res.solve(x))
                assert lhs <= bound * np.linalg.norm(x) * (1.0 + 1e-10)

    def test_orthogonal_defect_split(self):
        """p - Y R p = a R p, the algebraic complement identity."""
        rng = np.random.default_rng(3)
        gram = random_psd_bundle(rng, 12)
        res = regularize(gram, 1e-4)
        p = rng.standard_normal(12)
        rp = res.solve(p)
        lhs = p - gram.matrix @ rp
        assert np.max(np.abs(lhs - 1e-4 * rp)) <= 1e-12


class TestControlLawAndTerminal:
    def test_zero_defect(self):
        op = scalar_op(0.0)
        res = linear_terminal_state(op, 1.5, ControlMap.identity(1), 1.0,
                                    np.array([1.0]), np.array([1.0]), 0.1)
        assert res.error_norm == 0.0
        assert res.control_energy == 0.0

    def test_scalar_closed_form(self):
        op = scalar_op(0.0)
        res = linear_terminal_state(op, 1.5, ControlMap.identity(1), 1.0,
                                    np.array([0.0]), np.array([1.0]), 0.1)
        assert res.terminal[0] == pytest.approx(1.0 - 0.1 / 1.1, abs=1e-12)
        assert res.error_norm == pytest.approx(0.1 / 1.1, abs=1e-12)

    def test_eval_control_constant_for_zero_mode(self):
        op = scalar_op(0.0)
        gram = assemble_gramian(op, 1.5, ControlMap.identity(1), 1.0, 16)
        res = regularize(gram, 0.1)
        law = ControlLaw(resolvent=res, target_defect=np.array([1.0]), horizon=1.0, alpha=1.5)
        for t in (0.0, 0.3, 1.0):
            u = eval_control(law, op, ControlMap.identity(1), t)
            assert u[0] == pytest.approx(1.0 / 1.1, abs=1e-12)

    def test_eval_control_domain(self):
        op = scalar_op(0.0)
        gram = assemble_gramian(op, 1.5, ControlMap.identity(1), 1.0, 16)
        law = ControlLaw(resolvent=regularize(gram, 0.1),
                         target_defect=np.array([1.0]), horizon=1.0, alpha=1.5)
        with pytest.raises(DomainError):
            eval_control(law, op, ControlMap.identity(1), 1.2)

    def test_terminal_at_b_uses_identity_kernel(self):
        op = SpectralOperator.dirichlet_diffusion(3, shift=1.0)
        B = ControlMap.identity(3)
        gram = assemble_gramian(op, 1.5, B, 1.0, 32)
        res = regularize(gram, 0.5)
        p = np.array([1.0, -1.0, 2.0])
        law = ControlLaw(resolvent=res, target_defect=p, horizon=1.0, alpha=1.5)
        u_end = eval_control(law, op, B, 1.0)
        np.testing.assert_allclose(u_end, B.matrix.T @ res.solve(p), atol=1e-14)

    def test_monotone_error_matches_eigen_oracle(self):
        op = SpectralOperator.dirichlet_diffusion(8, shift=1.0)
        B = ControlMap.identity(8)
        x0 = np.zeros(8)
        xb = 1.0 / (1.0 + np.arange(8.0)) ** 2
        gram = assemble_gramian(op, 1.5, B, 1.0, 64)
        lam, vec = np.linalg.eigh(gram.matrix)
        p = xb - kernel_values(1.5, op.eigenvalues * 1.0) * x0
        p_hat = vec.T @ p
        errors = []
        for a in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
            res = linear_terminal_state(op, 1.5, B, 1.0, x0, xb, a)
            oracle = math.sqrt(float((((a / (a + lam)) * p_hat) ** 2).sum()))
            assert res.error_norm == pytest.approx(oracle, rel=1e-8)
            errors.append(res.error_norm)
        assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))

    def test_closed_form_matches_simulated_trajectory(self):
        op = SpectralOperator.dirichlet_diffusion(8, shift=1.0)
        B = ControlMap.identity(8)
        x0 = np.full(8, 0.3)
        xb = 1.0 / (1.0 + np.arange(8.0)) ** 2
        a = 1e-3
        res = linear_terminal_state(op, 1.5, B, 1.0, x0, xb, a)
        gram = assemble_gramian(op, 1.5, B, 1.0, 64)
        p = xb - kernel_values(1.5, op.eigenvalues) * x0
        law = ControlLaw(resolvent=regularize(gram, a), target_defect=p,
                         horizon=1.0, alpha=1.5)
        sim = simulate_linear_terminal(op, 1.5, B, 1.0, x0, law)
        assert np.linalg.norm(sim - res.terminal) <= 1e-6

    def test_energy_routes_agree(self):
        op = SpectralOperator.dirichlet_diffusion(4, shift=1.0)
        B = ControlMap.identity(4)
        gram = assemble_gramian(op, 1.5, B, 1.0, 64)
        res = regularize(gram, 1e-2)
        p = np.array([1.0, 0.5, -0.25, 0.125])
        law = ControlLaw(resolvent=res, target_defect=p, horizon=1.0, alpha=1.5)
        quad = control_energy_quadrature(law, op, B, 64)
        form = float(law.gain @ (gram.matrix @ law.gain))
        assert quad == pytest.approx(form, rel=1e-5)


class TestSweep:
    def test_trivial_scalar_rows(self):
        rows = sweep_regularization(
            scalar_op(0.0), 1.5, ControlMap.identity(1), 1.0,
            np.array([0.0]), np.array([1.0]), [1.0, 0.1, 0.01],
        )
        got = [r.error_norm for r in rows]
        want = [0.5, 0.1 / 1.1, 0.01 / 1.01]
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_zero_defect_rows(self):
        rows = sweep_regularization(
            scalar_op(0.0), 1.5, ControlMap.identity(1), 1.0,
            np.array([2.0]), np.array([2.0]), [1.0, 0.1],
        )
        assert all(r.error_norm == 0.0 for r in rows)

    def test_requires_decreasing_a(self):
        with pytest.raises(DomainError):
            sweep_regularization(
                scalar_op(0.0), 1.5, ControlMap.identity(1), 1.0,
                np.array([0.0]), np.array([1.0]), [0.1, 0.2],
            )

    def test_error_floor_bound_per_row(self):
        op = SpectralOperator.dirichlet_diffusion(8, shift=1.0)
        B = ControlMap.identity(8)
        xb = 1.0 / (1.0 + np.arange(8.0)) ** 2
        gram = assemble_gramian(op, 1.5, B, 1.0, 64)
        rows = sweep_regularization(
            op, 1.5, B, 1.0, np.zeros(8), xb, [1e-1, 1e-3, 1e-6],
        )
        pnorm = np.linalg.norm(xb)
        for row in rows:
            assert row.error_norm <= row.a / (row.a + gram.eig_min) * pnorm * (1 + 1e-10)

    def test_rank_deficient_plateau(self):
        """With only two actuated modes the error floors at the unactuated
        defect mass, demonstrating where approximate steering fails."""
        op = SpectralOperator.dirichlet_diffusion(8, shift=1.0)
        B = ControlMap.modes(8, [1, 2])
        xb = 1.0 / (1.0 + np.arange(8.0)) ** 2
        x0 = np.zeros(8)
        rows = sweep_regularization(op, 1.5, B, 1.0, x0, xb, [1e-2, 1e-4, 1e-6])
        p = xb - kernel_values(1.5, op.eigenvalues) * x0
        plateau = np.linalg.norm(p[2:])
        assert rows[-1].error_norm == pytest.approx(plateau, rel=1e-2)
        assert rows[-1].error_norm >= plateau * (1 - 1e-10)
