import numpy as np
import pytest

from conftest import grid_nodes, random_feasible_q, random_symmetric
from specest.lagset import (IndexSet, SymmetricMultisequence, vec_position,
                            vectorize)
from specest.spectral import (FeasibilityError, FrequencyGrid, GridFunction,
                              TbtGenerators, assemble_dense_hessian,
                              directional_derivative, dual_gradient,
                              dual_objective, eval_trig_poly,
                              fourier_coefficients, hessian_generators,
                              is_divergence, primal_recover, quadrature)


def unit_psi_inv(N1=16, N2=16):
    return GridFunction.constant(FrequencyGrid(N1, N2), 1.0)


class TestEvalTrigPoly:
    def test_constant(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.from_entries(s, {(0, 0): 2.5})
        f = eval_trig_poly(q, FrequencyGrid(8, 8))
        assert np.allclose(f.values, 2.5)

    def test_cosine(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.from_entries(s, {(1, 0): 0.5})
        g = FrequencyGrid(8, 6)
        f = eval_trig_poly(q, g)
        t1, _ = grid_nodes(g)
        assert np.allclose(f.values, np.cos(t1))

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_double_sum(self, seed):
        rng = np.random.default_rng(seed)
        s = IndexSet(1, 1)
        q = random_symmetric(s, rng)
        g = FrequencyGrid(4, 4)
        f = eval_trig_poly(q, g)
        t1, t2 = grid_nodes(g)
        direct = np.zeros(g.shape, dtype=complex)
        for k1, k2 in s.lags():
            direct += q.value((k1, k2)) * np.exp(-1j * (k1 * t1 + k2 * t2))
        assert np.max(np.abs(direct.imag)) < 1e-12
        assert np.allclose(f.values, direct.real, atol=1e-12)

    def test_aliased_grid_still_exact(self):
        # lags wrap modulo the grid; evaluation stays exact on the nodes
        rng = np.random.default_rng(1)
        s = IndexSet(3, 3)
        q = random_symmetric(s, rng)
        g = FrequencyGrid(5, 5)
        f = eval_trig_poly(q, g)
        t1, t2 = grid_nodes(g)
        direct = sum(q.value((k1, k2)) * np.exp(-1j * (k1 * t1 + k2 * t2))
                     for k1, k2 in s.lags())
        assert np.allclose(f.values, direct.real, atol=1e-10)


class TestQuadrature:
    def test_constant(self):
        assert quadrature(GridFunction.constant(FrequencyGrid(5, 7), 3.0)) == 3.0

    def test_cosine_integrates_to_zero(self):
        g = FrequencyGrid(8, 4)
        t1, _ = grid_nodes(g)
        assert quadrature(GridFunction(g, np.cos(t1))) == pytest.approx(0.0, abs=1e-14)

    def test_matches_loop_mean(self):
        rng = np.random.default_rng(2)
        g = FrequencyGrid(6, 9)
        vals = rng.standard_normal(g.shape)
        total = 0.0
        for i in range(6):
            for j in range(9):
                total += vals[i, j]
        assert quadrature(GridFunction(g, vals)) == pytest.approx(total / 54)

    def test_rejects_complex(self):
        g = FrequencyGrid(4, 4)
        with pytest.raises(ValueError):
            quadrature(GridFunction(g, np.ones(g.shape, dtype=complex) * 1j))


class TestFourierCoefficients:
    def test_constant(self):
        f = GridFunction.constant(FrequencyGrid(8, 8), 1.0)
        c = fourier_coefficients(f, 2, 2)
        expected = np.zeros((5, 5))
        expected[2, 2] = 1.0
        assert np.allclose(c, expected, atol=1e-14)

    def test_cosine_theta2(self):
        g = FrequencyGrid(8, 8)
        _, t2 = grid_nodes(g)
        c = fourier_coefficients(GridFunction(g, np.cos(t2)), 1, 1)
        assert c[1, 2] == pytest.approx(0.5)   # (0, +1)
        assert c[1, 0] == pytest.approx(0.5)   # (0, -1)
        assert abs(c[1, 1]) < 1e-14

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_direct_sum(self, seed):
        rng = np.random.default_rng(seed)
        g = FrequencyGrid(8, 8)
        vals = rng.standard_normal(g.shape)
        c = fourier_coefficients(GridFunction(g, vals), 2, 2)
        t1, t2 = grid_nodes(g)
        for k1 in range(-2, 3):
            for k2 in range(-2, 3):
                direct = np.mean(np.exp(1j * (k1 * t1 + k2 * t2)) * vals)
                assert abs(c[k1 + 2, k2 + 2] - direct) < 1e-12

    def test_real_input_conjugate_symmetric_output(self):
        rng = np.random.default_rng(9)
        g = FrequencyGrid(10, 12)
        c = fourier_coefficients(GridFunction(g, rng.standard_normal(g.shape)), 3, 4)
        assert np.allclose(c, np.conj(c[::-1, ::-1]), atol=1e-13)

    def test_aliasing_precondition(self):
        f = GridFunction.constant(FrequencyGrid(8, 8), 1.0)
        with pytest.raises(ValueError, match="aliasing"):
            fourier_coefficients(f, 4, 1)


class TestDualObjective:
    def test_zero_point(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.zeros(s)
        sigma = SymmetricMultisequence.from_entries(s, {(0, 0): 1.0})
        assert dual_objective(q, sigma, unit_psi_inv()) == pytest.approx(0.0)

    def test_constant_integrand(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.from_entries(s, {(0, 0): 1.0})
        sigma = SymmetricMultisequence.from_entries(s, {(0, 0): 1.0})
        expected = 1.0 - np.log(2.0)
        assert dual_objective(q, sigma, unit_psi_inv()) == pytest.approx(expected)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_per_node_oracle(self, seed):
        rng = np.random.default_rng(seed)
        s = IndexSet(1, 2)
        psi_inv = unit_psi_inv(12, 16)
        q = random_feasible_q(s, psi_inv, rng)
        sigma = random_symmetric(s, rng)
        # independent evaluation: explicit loops over lags and nodes
        t1, t2 = grid_nodes(psi_inv.grid)
        acc = 0.0
        for k1, k2 in s.lags():
            acc += (q.value((k1, k2)) * np.conj(sigma.value((k1, k2)))).real
        logsum = 0.0
        for i in range(psi_inv.grid.N1):
            for j in range(psi_inv.grid.N2):
                Q = sum(q.value((k1, k2)) * np.exp(-1j * (k1 * t1[i, j] + k2 * t2[i, j]))
                        for k1, k2 in s.lags())
                logsum += np.log(psi_inv.values[i, j] + Q.real)
        expected = acc - logsum / psi_inv.grid.N1 / psi_inv.grid.N2
        assert dual_objective(q, sigma, psi_inv) == pytest.approx(expected, rel=1e-12)

    def test_infeasible_reports_min(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.from_entries(s, {(0, 0): -2.0})
        sigma = SymmetricMultisequence.from_entries(s, {(0, 0): 1.0})
        with pytest.raises(FeasibilityError) as exc:
            dual_objective(q, sigma, unit_psi_inv())
        assert exc.value.min_value == pytest.approx(-1.0)


class TestDualGradient:
    def test_zero_gradient_at_optimum(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.zeros(s)
        sigma = SymmetricMultisequence.from_entries(s, {(0, 0): 1.0})
        g = dual_gradient(q, sigma, unit_psi_inv())
        assert np.max(np.abs(g.values)) < 1e-14

    def test_constant_prior_offset(self):
        rng = np.random.default_rng(4)
        s = IndexSet(1, 1)
        sigma = random_symmetric(s, rng)
        c = 2.0
        psi_inv = GridFunction.constant(FrequencyGrid(16, 16), 1.0 / c)
        g = dual_gradient(SymmetricMultisequence.zeros(s), sigma, psi_inv)
        for k1, k2 in s.lags():
            expected = np.conj(sigma.value((k1, k2)))
            if (k1, k2) == (0, 0):
                expected -= c
            assert g.value((k1, k2)) == pytest.approx(expected, abs=1e-12)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(8)
        s = IndexSet(2, 2)
        psi_inv = unit_psi_inv()
        q = random_feasible_q(s, psi_inv, rng)
        g = dual_gradient(q, random_symmetric(s, rng), psi_inv)
        assert np.max(np.abs(g.values - np.conj(g.values[::-1, ::-1]))) < 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_finite_difference_factors(self, seed):
        # real pair perturbation -> 2*Re(g_k); imaginary -> -2*Im(g_k); center -> g_0
        rng = np.random.default_rng(seed)
        s = IndexSet(1, 1)
        psi_inv = unit_psi_inv()
        q = random_feasible_q(s, psi_inv, rng)
        sigma = random_symmetric(s, rng)
        g = dual_gradient(q, sigma, psi_inv)
        h = 1e-6

        def J(point):
            return dual_objective(point, sigma, psi_inv)

        for k1, k2 in s.lags():
            if (k1, k2) < (0, 0):
                continue
            gk = g.value((k1, k2))
            e_r = SymmetricMultisequence.from_entries(s, {(k1, k2): 1.0})
            fd = (J(q.add_scaled(e_r, h)) - J(q.add_scaled(e_r, -h))) / (2 * h)
            expected = gk.real if (k1, k2) == (0, 0) else 2 * gk.real
            assert fd == pytest.approx(expected, rel=1e-6, abs=1e-9)
            if (k1, k2) != (0, 0):
                e_i = SymmetricMultisequence.from_entries(s, {(k1, k2): 1.0j})
                fd = (J(q.add_scaled(e_i, h)) - J(q.add_scaled(e_i, -h))) / (2 * h)
                assert fd == pytest.approx(-2 * gk.imag, rel=1e-6, abs=1e-9)

    def test_directional_derivative_pairing(self):
        rng = np.random.default_rng(12)
        s = IndexSet(1, 2)
        psi_inv = unit_psi_inv()
        q = random_feasible_q(s, psi_inv, rng)
        sigma = random_symmetric(s, rng)
        d = random_symmetric(s, rng, scale=0.1)
        g = dual_gradient(q, sigma, psi_inv)
        h = 1e-6
        fd = (dual_objective(q.add_scaled(d, h), sigma, psi_inv)
              - dual_objective(q.add_scaled(d, -h), sigma, psi_inv)) / (2 * h)
        assert directional_derivative(g, d) == pytest.approx(fd, rel=1e-6)


class TestHessianGenerators:
    def test_identity_case(self):
        s = IndexSet(1, 1)
        gen = hessian_generators(SymmetricMultisequence.zeros(s), unit_psi_inv())
        assert gen.h[0, 2] == pytest.approx(1.0)
        table = gen.h.copy()
        table[0, 2] = 0.0
        assert np.max(np.abs(table)) < 1e-14

    def test_constant_prior_squares(self):
        s = IndexSet(1, 1)
        c = 3.0
        psi_inv = GridFunction.constant(FrequencyGrid(16, 16), 1.0 / c)
        gen = hessian_generators(SymmetricMultisequence.zeros(s), psi_inv)
        assert gen.h[0, 2] == pytest.approx(c * c)

    def test_grid_too_small(self):
        s = IndexSet(2, 2)
        psi_inv = GridFunction.constant(FrequencyGrid(8, 16), 1.0)
        with pytest.raises(ValueError, match="aliasing"):
            hessian_generators(SymmetricMultisequence.zeros(s), psi_inv)

    def test_infeasible(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.from_entries(s, {(0, 0): -1.5})
        with pytest.raises(FeasibilityError):
            hessian_generators(q, unit_psi_inv())

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_gradient_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        s = IndexSet(1, 1)
        psi_inv = unit_psi_inv()
        q = random_feasible_q(s, psi_inv, rng)
        sigma = random_symmetric(s, rng)
        H = assemble_dense_hessian(hessian_generators(q, psi_inv))
        Hfd = hessian_by_finite_differences(q, sigma, psi_inv)
        assert np.linalg.norm(Hfd - H) / np.linalg.norm(H) < 1e-5


def hessian_by_finite_differences(q, sigma, psi_inv, h=1e-6):
    """Columns of the Hessian from central differences of the gradient.

    Along a symmetric direction d the gradient moves by H conj(vec(d)), so
    column l is recovered from the pair of real/imaginary perturbations of
    the lag pair (l, -l).
    """
    s = q.index_set
    L = s.size
    H = np.zeros((L, L), dtype=complex)

    def gvec(point):
        return vectorize(dual_gradient(point, sigma, psi_inv))

    for k1, k2 in s.lags():
        pos = vec_position((k1, k2), s) - 1
        e_r = SymmetricMultisequence.from_entries(s, {(k1, k2): 1.0})
        fd_r = (gvec(q.add_scaled(e_r, h)) - gvec(q.add_scaled(e_r, -h))) / (2 * h)
        if (k1, k2) == (0, 0):
            H[:, pos] = fd_r
            continue
        e_i = SymmetricMultisequence.from_entries(s, {(k1, k2): 1.0j})
        fd_i = (gvec(q.add_scaled(e_i, h)) - gvec(q.add_scaled(e_i, -h))) / (2 * h)
        H[:, pos] = 0.5 * (fd_r + 1j * fd_i)
    return H


class TestAssembleDenseHessian:
    def test_identity_generators(self):
        h = np.zeros((3, 5), dtype=complex)
        h[0, 2] = 1.0
        H = assemble_dense_hessian(TbtGenerators(1, 1, h))
        assert np.array_equal(H, np.eye(9))

    def test_single_block_lag_structure(self):
        x = 0.7 - 0.2j
        h = np.zeros((3, 5), dtype=complex)
        h[0, 2] = 1.0
        h[1, 2] = x  # lag (1, 0): constant on the superdiagonal blocks' diagonals
        H = assemble_dense_hessian(TbtGenerators(1, 1, h))
        p = 3
        for a in range(2):
            blk = H[a * p:(a + 1) * p, (a + 1) * p:(a + 2) * p]
            assert np.allclose(blk, x * np.eye(p))
            blk_low = H[(a + 1) * p:(a + 2) * p, a * p:(a + 1) * p]
            assert np.allclose(blk_low, np.conj(x) * np.eye(p))

    def test_entry_is_lag_difference(self):
        rng = np.random.default_rng(6)
        s = IndexSet(1, 1)
        psi_inv = unit_psi_inv()
        q = random_feasible_q(s, psi_inv, rng)
        gen = hessian_generators(q, psi_inv)
        H = assemble_dense_hessian(gen)
        full = fourier_coefficients(
            GridFunction(psi_inv.grid,
                         1.0 / (psi_inv.values + eval_trig_poly(q, psi_inv.grid).values) ** 2),
            2, 2)
        for k in s.lags():
            for l in s.lags():
                i, j = vec_position(k, s) - 1, vec_position(l, s) - 1
                diff = (l[0] - k[0], l[1] - k[1])
                assert H[i, j] == pytest.approx(full[diff[0] + 2, diff[1] + 2])

    @pytest.mark.parametrize("n1,n2", [(1, 1), (2, 1), (1, 3)])
    def test_hermitian_and_persymmetric(self, n1, n2):
        from specest.tbt import random_pd_generators
        rng = np.random.default_rng(13)
        H = assemble_dense_hessian(random_pd_generators(n1, n2, rng))
        assert np.linalg.norm(H - H.conj().T) < 1e-10 * np.linalg.norm(H)
        J = np.eye(H.shape[0])[::-1]
        assert np.linalg.norm(J @ H.T @ J - H) < 1e-10 * np.linalg.norm(H)


class TestHessianInvariants:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_positive_definite_at_feasible_points(self, n):
        rng = np.random.default_rng(n)
        s = IndexSet(n, n)
        psi_inv = GridFunction.constant(FrequencyGrid(4 * n + 4, 4 * n + 4), 1.0)
        for _ in range(3):
            q = random_feasible_q(s, psi_inv, rng)
            H = assemble_dense_hessian(hessian_generators(q, psi_inv))
            assert np.linalg.eigvalsh(H).min() > 0

    def test_quarter_submatrix_hermitian_and_sized(self):
        rng = np.random.default_rng(21)
        s = IndexSet(1, 1)
        psi_inv = unit_psi_inv()
        q = random_feasible_q(s, psi_inv, rng)
        H = assemble_dense_hessian(hessian_generators(q, psi_inv))
        r = s.n2 + 1 + s.n1 * (2 * s.n2 + 1)
        assert r == 5
        sub = H[-r:, -r:]
        assert np.allclose(sub, sub.conj().T)

    def test_objective_convex_along_lines(self):
        rng = np.random.default_rng(30)
        s = IndexSet(1, 1)
        psi_inv = unit_psi_inv()
        sigma = random_symmetric(s, rng)
        q = random_feasible_q(s, psi_inv, rng, margin=0.5)
        for _ in range(3):
            d = random_symmetric(s, rng, scale=0.05)
            ts = np.linspace(-1.0, 1.0, 5)
            vals = [dual_objective(q.add_scaled(d, t), sigma, psi_inv) for t in ts]
            second = np.diff(vals, 2)
            assert np.all(second >= -1e-8)


class TestPrimalRecover:
    def test_unit_case(self):
        s = IndexSet(1, 1)
        phi = primal_recover(SymmetricMultisequence.zeros(s), unit_psi_inv())
        assert np.allclose(phi.values, 1.0)

    def test_half_case(self):
        s = IndexSet(1, 1)
        q = SymmetricMultisequence.from_entries(s, {(0, 0): 1.0})
        phi = primal_recover(q, unit_psi_inv())
        assert np.allclose(phi.values, 0.5)

    def test_grid_mismatch_rejected(self):
        s = IndexSet(1, 1)
        with pytest.raises(ValueError):
            primal_recover(SymmetricMultisequence.zeros(s), unit_psi_inv(),
                           FrequencyGrid(8, 8))


class TestIsDivergence:
    def test_identical_spectra(self):
        f = GridFunction.constant(FrequencyGrid(6, 6), 2.0)
        assert is_divergence(f, f) == pytest.approx(0.0)

    def test_constant_case(self):
        g = FrequencyGrid(6, 6)
        phi = GridFunction.constant(g, 2.0)
        psi = GridFunction.constant(g, 1.0)
        assert is_divergence(phi, psi) == pytest.approx(np.log(0.5) + 1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        g = FrequencyGrid(8, 8)
        phi = GridFunction(g, 0.1 + rng.random(g.shape))
        psi = GridFunction(g, 0.1 + rng.random(g.shape))
        assert is_divergence(phi, psi) >= 0.0

    def test_rejects_nonpositive(self):
        g = FrequencyGrid(4, 4)
        bad = GridFunction(g, np.zeros(g.shape))
        with pytest.raises(ValueError):
            is_divergence(bad, GridFunction.constant(g, 1.0))
