import numpy as np
import pytest

from heatq import (
    IntegrationError,
    InterlacingError,
    Potential,
    check_transmutation,
    compute_spectra,
    goursat_kernel,
    solve_phi,
)
from heatq.errors import BracketingError
from heatq.sturm_liouville import _bracketed_roots, _end_values

from conftest import random_smooth_potential

# phi(1, 5) and phi'(1, 5) for q = sin(2 pi x), from a DOP853 integration
# of the same initial-value problem at rtol 1e-13 on the analytic q.
PHI_SIN_NU5 = 0.350819050768322
DPHI_SIN_NU5 = -0.735251155234678

# Dirichlet eigenvalues of q = sin(2 pi x), j <= 8, from a second-order
# central finite-difference matrix eigensolver with 2000 and 4000
# interior nodes, Richardson-extrapolated.
FD_RICHARDSON_SIN = np.array(
    [
        9.8537797580,
        39.4889646938,
        88.8280231466,
        157.9145146428,
        246.7406375378,
        355.3061198642,
        483.6108786936,
        631.6548813030,
    ]
)


class TestSolvePhi:
    def test_free_at_pi_squared(self, q_free):
        ev = solve_phi(q_free, np.pi**2)
        assert abs(ev.phi_end) < 1e-12
        np.testing.assert_allclose(ev.dphi_end, -1.0, rtol=1e-12)

    def test_free_at_one(self, q_free):
        ev = solve_phi(q_free, 1.0)
        np.testing.assert_allclose(ev.phi_end, np.sin(1.0), rtol=1e-12)
        np.testing.assert_allclose(ev.dphi_end, np.cos(1.0), rtol=1e-12)

    def test_free_negative_nu(self, q_free):
        ev = solve_phi(q_free, -4.0)
        np.testing.assert_allclose(ev.phi_end, np.sinh(2.0) / 2.0, rtol=1e-10)

    def test_constant_shift_identity(self):
        # phi_{q+c}(x, nu) = phi_q(x, nu - c); exact for this integrator.
        q0 = Potential.constant(0.0, 201)
        qc = Potential.constant(3.7, 201)
        for nu in (2.0, 17.5, -3.0):
            a = solve_phi(qc, nu)
            b = solve_phi(q0, nu - 3.7)
            assert a.phi_end == b.phi_end
            assert a.dphi_end == b.dphi_end

    def test_sin_potential_against_reference(self, q_sin):
        ev = solve_phi(q_sin, 5.0)
        assert abs(ev.phi_end - PHI_SIN_NU5) < 5e-6
        assert abs(ev.dphi_end - DPHI_SIN_NU5) < 5e-5

    def test_grid_refinement_second_order(self):
        # The piecewise-linear potential model dominates the error: O(h^2).
        errs = []
        for n in (201, 401, 801):
            q = Potential.from_function(lambda x: np.sin(2 * np.pi * x), n)
            errs.append(abs(solve_phi(q, 5.0).phi_end - PHI_SIN_NU5))
        assert errs[0] > 2.5 * errs[1] > 2.5 * 2.5 * errs[2]

    def test_profile_matches_end_values(self, q_sin):
        ev = solve_phi(q_sin, 11.0, return_profile=True)
        assert ev.profile.shape == (q_sin.n_nodes,)
        assert ev.profile[0] == 0.0
        np.testing.assert_allclose(ev.profile[-1], ev.phi_end, rtol=1e-12)

    def test_overflow_raises_integration_error(self, q_free):
        with pytest.raises(IntegrationError):
            solve_phi(q_free, -1e8)


class TestComputeSpectra:
    def test_free_closed_form(self, q_free):
        sp = compute_spectra(q_free, 10)
        j = np.arange(1, 11)
        np.testing.assert_allclose(sp.dirichlet, (j * np.pi) ** 2, rtol=1e-10)
        np.testing.assert_allclose(
            sp.dirichlet_neumann, ((j - 0.5) * np.pi) ** 2, rtol=1e-10
        )

    @pytest.mark.parametrize("c", [2.0, -1.0])
    def test_constant_shift(self, q_free, c):
        sp0 = compute_spectra(q_free, 6)
        spc = compute_spectra(Potential.constant(c, 201), 6)
        np.testing.assert_allclose(spc.dirichlet, sp0.dirichlet + c, atol=1e-9)
        np.testing.assert_allclose(
            spc.dirichlet_neumann, sp0.dirichlet_neumann + c, atol=1e-9
        )

    def test_sin_against_fd_matrix_oracle(self, q_sin):
        sp = compute_spectra(q_sin, 8)
        np.testing.assert_allclose(sp.dirichlet, FD_RICHARDSON_SIN, atol=1e-4)

    def test_reflection_invariance_of_dirichlet(self, rng):
        q = random_smooth_potential(rng, amplitude=3.0)
        a = compute_spectra(q, 8).dirichlet
        b = compute_spectra(q.reflected(), 8).dirichlet
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_interlacing_random(self, rng):
        for _ in range(3):
            q = random_smooth_potential(rng, amplitude=4.0)
            sp = compute_spectra(q, 8)
            sp.check_interlacing()  # raises on violation

    def test_shift_invariance_random(self, rng):
        q = random_smooth_potential(rng, amplitude=2.0)
        qc = Potential(q.values + 1.3)
        a = compute_spectra(q, 6)
        b = compute_spectra(qc, 6)
        np.testing.assert_allclose(b.dirichlet - a.dirichlet, 1.3, atol=1e-8)
        np.testing.assert_allclose(
            b.dirichlet_neumann - a.dirichlet_neumann, 1.3, atol=1e-8
        )

    def test_eigenvalue_sensitivity_sign(self, rng):
        # phi(1) d/dnu phi'(1) - phi'(1) d/dnu phi(1) = -int phi^2 < 0,
        # the simplicity identity for this operator convention.
        q = random_smooth_potential(rng, amplitude=3.0)
        for nu in (1.0, 30.0, 77.0):
            d = 1e-5
            phi, dphi = _end_values(q, np.array([nu - d, nu, nu + d]))
            w = phi[1] * (dphi[2] - dphi[0]) / (2 * d) - dphi[1] * (
                phi[2] - phi[0]
            ) / (2 * d)
            assert w < 0.0

    def test_bracket_failure_raises(self):
        with pytest.raises(BracketingError):
            _bracketed_roots(
                lambda x: x * x + 1.0,
                np.array([0.5]),
                np.array([1.5]),
                1e-10,
                3,
                "test",
            )

    def test_interlacing_error_fields(self):
        from heatq import SpectralPair

        pair = SpectralPair(
            dirichlet=np.array([1.0, 5.0]), dirichlet_neumann=np.array([2.0, 7.0])
        )
        with pytest.raises(InterlacingError) as err:
            pair.check_interlacing()
        assert err.value.indices


class TestGoursatKernel:
    def test_zero_potential_gives_zero_kernel(self, q_free):
        assert np.max(np.abs(goursat_kernel(q_free).values)) == 0.0

    def test_diagonal_condition(self, rng):
        q = random_smooth_potential(rng, amplitude=3.0)
        K = goursat_kernel(q)
        x = q.grid
        running = np.concatenate(
            [[0.0], np.cumsum(0.5 * q.h * (q.values[1:] + q.values[:-1]))]
        )
        np.testing.assert_allclose(K.diagonal(), 0.5 * running, atol=1e-12)

    def test_edge_condition(self, q_sin):
        K = goursat_kernel(q_sin)
        np.testing.assert_allclose(K.values[:, 0], 0.0, atol=1e-14)

    def test_richardson_refinement(self):
        vals = []
        for n in (201, 401):
            K = goursat_kernel(Potential.constant(1.0, n))
            vals.append(K.values[-1, (n - 1) // 2])
        assert abs(vals[1] - vals[0]) < 1e-4

    def test_against_exact_constant_kernel(self):
        from heatq.kernel_recovery import constant_kernel_trace

        n = 401
        K = goursat_kernel(Potential.constant(1.7, n))
        y = np.linspace(0, 1, n)
        np.testing.assert_allclose(
            K.boundary_row(), constant_kernel_trace(1.7, y), atol=1e-7
        )

    def test_diagonal_derivative_recovers_potential(self, q_sin):
        K = goursat_kernel(q_sin)
        h = q_sin.h
        d = np.gradient(K.diagonal(), h, edge_order=2)
        assert np.max(np.abs(2.0 * d - q_sin.values)) < 1e-2


class TestTransmutation:
    def test_free_case_exact(self, q_free):
        for nu in (3.0, 25.0, 80.0):
            assert check_transmutation(q_free, nu) < 1e-12

    def test_constant_potential(self):
        q = Potential.constant(1.0, 401)
        assert check_transmutation(q, 4.0) < 1e-4

    def test_sin_at_first_eigenvalue(self):
        q = Potential.from_function(lambda x: np.sin(2 * np.pi * x), 401)
        lam1 = compute_spectra(q, 1).dirichlet[0]
        assert abs(solve_phi(q, lam1).phi_end) < 1e-6
        assert check_transmutation(q, lam1) < 1e-4
