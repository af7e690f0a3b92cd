import numpy as np
import pytest
from scipy.integrate import quad
from scipy.interpolate import RegularGridInterpolator

from heatq import (
    BoundaryKernel,
    DivergenceError,
    IterationState,
    NonConvergenceError,
    Potential,
    SourceTerm,
    apply_W,
    build_source,
    extract_potential,
    goursat_kernel,
    solve_fixed_point,
)
from heatq.kernel_recovery import (
    constant_kernel_trace,
    constant_kernel_trace_dx,
    constant_kernel_trace_dy,
)


def constant_boundary_kernel(c, n):
    """Exact boundary traces of the constant-potential kernel."""
    y = np.linspace(0.0, 1.0, n)
    return BoundaryKernel(
        K1=constant_kernel_trace(c, y),
        K1x=constant_kernel_trace_dx(c, y),
        K1y=constant_kernel_trace_dy(c, y),
    )


def zero_boundary_kernel(n):
    z = np.zeros(n)
    return BoundaryKernel(K1=z, K1x=z.copy(), K1y=z.copy())


class TestBuildSource:
    def test_zero_data(self):
        src = build_source(zero_boundary_kernel(101))
        assert np.max(np.abs(src.f_values)) == 0.0
        assert np.max(np.abs(src.g_values)) == 0.0

    def test_boundary_identities(self):
        bk = constant_boundary_kernel(1.0, 201)
        src = build_source(bk)
        # f(1) = 2[K_y(1,1) + K_x(1,1)] and g(1, y) = K(1, y) exactly.
        np.testing.assert_allclose(
            src.f_values[-1], 2.0 * (bk.K1y[-1] + bk.K1x[-1]), rtol=1e-14
        )
        np.testing.assert_allclose(src.g_values[-1, :], bk.K1, atol=1e-15)

    def test_grid_refinement(self):
        vals = []
        for n in (201, 401):
            src = build_source(constant_boundary_kernel(1.0, n))
            i, j = int(0.75 * (n - 1)), int(0.5 * (n - 1))
            vals.append(src.g_values[i, j])
        assert abs(vals[1] - vals[0]) < 1e-4

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SourceTerm(f_values=np.zeros(5), g_values=np.zeros((4, 4)))


class TestApplyW:
    def test_zero_state(self):
        n = 101
        st = IterationState(q_part=np.zeros(n), k_part=np.zeros((n, n)))
        w = apply_W(st)
        assert np.max(np.abs(w.q_part)) == 0.0
        assert np.max(np.abs(w.k_part)) == 0.0

    def test_zero_potential_part(self):
        # Both components carry a factor q.
        n = 101
        K = goursat_kernel(Potential.constant(1.0, n))
        st = IterationState(q_part=np.zeros(n), k_part=K.values.copy())
        w = apply_W(st)
        assert np.max(np.abs(w.q_part)) == 0.0
        assert np.max(np.abs(w.k_part)) == 0.0

    def test_first_component_against_quadrature(self):
        # -2 int_{0.9}^1 K(s, 1.8 - s) ds with an independent adaptive
        # quadrature on the interpolated kernel.
        n = 201
        q = Potential.constant(1.0, n)
        K = goursat_kernel(q)
        st = IterationState(q_part=q.values.copy(), k_part=K.values.copy())
        w = apply_W(st)
        xg = q.grid
        interp = RegularGridInterpolator((xg, xg), K.values, method="linear")

        def integrand(s):
            t = 1.8 - s
            sgn = 1.0 if t >= 0 else -1.0
            return sgn * float(interp((s, abs(t))))

        ref, _ = quad(integrand, 0.9, 1.0, epsabs=1e-13, limit=200)
        i = int(round(0.9 * (n - 1)))
        assert abs(w.q_part[i] + 2.0 * ref) < 1e-5


class TestFixedPoint:
    def test_zero_source_converges_immediately(self):
        n = 101
        src = SourceTerm(f_values=np.zeros(n), g_values=np.zeros((n, n)))
        state, diag = solve_fixed_point(src)
        assert diag.converged and diag.iterations == 1
        assert np.max(np.abs(state.q_part)) == 0.0

    def test_constant_potential_oracle_data(self):
        n = 201
        src = build_source(constant_boundary_kernel(1.0, n))
        state, diag = solve_fixed_point(src)
        q_rec, resid = extract_potential(state)
        assert np.max(np.abs(q_rec.values - 1.0)) < 2e-2
        assert resid < 5e-2
        # geometric decay of the update norms after burn-in
        norms = diag.update_norms
        for k in range(3, len(norms) - 1):
            if norms[k] > 0:
                assert norms[k + 1] / norms[k] <= 0.9
        # boundary row reproduced exactly
        np.testing.assert_allclose(
            state.k_part[-1, :], src.g_values[-1, :], atol=1e-15
        )

    def test_fixed_point_residual(self):
        n = 201
        src = build_source(constant_boundary_kernel(1.0, n))
        tol = 1e-8
        state, _ = solve_fixed_point(src, tol=tol)
        w = apply_W(state)
        rq = np.max(np.abs(state.q_part - w.q_part - src.f_values))
        rk = np.max(np.abs(state.k_part - w.k_part - src.g_values))
        assert max(rq, rk) <= 2.0 * tol

    def test_causality(self):
        # Data perturbed only near y = 1 changes q only near x = 1.
        n = 201
        y = np.linspace(0, 1, n)
        bump = 1e-2 * np.exp(-(((y - 0.9) / 0.05) ** 2))
        bump[y < 0.75] = 0.0
        h = y[1] - y[0]
        d = np.gradient(bump, h, edge_order=2)
        src = build_source(BoundaryKernel(K1=bump, K1x=d, K1y=d))
        state, _ = solve_fixed_point(src)
        q_rec, _ = extract_potential(state)
        full = np.max(np.abs(q_rec.values))
        assert full > 0
        assert np.max(np.abs(q_rec.values[y <= 0.5])) < 1e-2 * full

    def test_non_convergence_error(self):
        n = 201
        src = build_source(constant_boundary_kernel(1.0, n))
        with pytest.raises(NonConvergenceError) as err:
            solve_fixed_point(src, tol=1e-30, max_iter=3)
        assert len(err.value.norm_history) == 3

    def test_divergence_error(self):
        n = 101
        y = np.linspace(0, 1, n)
        f = 4e3 * np.sin(np.pi * y)
        g = np.tril(np.outer(f, y))
        with pytest.raises(DivergenceError):
            solve_fixed_point(SourceTerm(f_values=f, g_values=g))


class TestExtractPotential:
    def test_zero_state(self):
        n = 101
        st = IterationState(q_part=np.zeros(n), k_part=np.zeros((n, n)))
        q, resid = extract_potential(st)
        assert np.max(np.abs(q.values)) == 0.0 and resid == 0.0

    def test_goursat_state_is_consistent(self):
        n = 201
        q = Potential.constant(1.0, n)
        K = goursat_kernel(q)
        st = IterationState(q_part=q.values.copy(), k_part=K.values.copy())
        _, resid = extract_potential(st)
        assert resid < 5e-2
