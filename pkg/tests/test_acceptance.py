"""Acceptance suite: one test per criterion, each printing a verdict line.

Every tolerance is pinned here; oracle-derived reference values carry a
comment naming the oracle that produced them.
"""

import time

import numpy as np
import pytest

from heatq import (
    NonConvergenceError,
    Potential,
    Pulse,
    build_source,
    compute_spectra,
    extract_potential,
    goursat_kernel,
    laplace_transform,
    recover_boundary_kernel,
    recover_K1,
    recover_K1x,
    simulate,
    solve_fixed_point,
    solve_phi,
)
from heatq.config import ExperimentConfig
from heatq.kernel_recovery import (
    constant_kernel_trace,
    constant_kernel_trace_dx,
    constant_kernel_trace_dy,
    constraint_residuals,
)
from heatq import BoundaryKernel
from heatq.pipeline import run_nonuniqueness, run_roundtrip

from conftest import random_smooth_potential

# Max index-wise |mu_j(x) - mu_j(1-x)| for j <= 10, tabulated with the
# forward eigenvalue solver at n_nodes = 401 (first-order perturbation
# theory puts it at 4/pi^2 = 0.4053).
MU_GAP_LINEAR = 0.4052500440


def _verdict(num, label, ok):
    print("[acceptance] criterion %d (%s): %s" % (num, label, "PASS" if ok else "FAIL"))


def test_criterion_1_free_case_exactness():
    t0 = time.perf_counter()
    q = Potential.constant(0.0, 201)
    sp = compute_spectra(q, 10)
    j = np.arange(1, 11)
    rel_lam = np.max(np.abs(sp.dirichlet / (j * np.pi) ** 2 - 1.0))
    rel_mu = np.max(np.abs(sp.dirichlet_neumann / ((j - 0.5) * np.pi) ** 2 - 1.0))

    cfg = ExperimentConfig(potential_spec="0", j_max=10, n_nodes=201, figures=False)
    res = run_roundtrip(cfg)
    q_max = float(np.max(np.abs(res.q_recovered.values)))
    elapsed = time.perf_counter() - t0

    ok = rel_lam < 1e-8 and rel_mu < 1e-8 and q_max < 1e-6 and elapsed < 5.0
    _verdict(1, "free-case exactness", ok)
    assert rel_lam < 1e-8
    assert rel_mu < 1e-8
    assert q_max < 1e-6
    assert elapsed < 5.0


def test_criterion_2_shift_symmetry():
    t0 = time.perf_counter()
    free = compute_spectra(Potential.constant(0.0, 201), 10)
    shift_ok = True
    for c in (-1.0, 2.0):
        sp = compute_spectra(Potential.constant(c, 201), 10)
        shift_ok &= np.max(np.abs(sp.dirichlet - free.dirichlet - c)) < 1e-8
        shift_ok &= np.max(np.abs(sp.dirichlet_neumann - free.dirichlet_neumann - c)) < 1e-8

    rt_ok = True
    errs = {}
    for c in (-1.0, 2.0):
        cfg = ExperimentConfig(
            potential_spec="%g" % c, j_max=16, n_nodes=201, figures=False
        )
        res = run_roundtrip(cfg)
        errs[c] = res.err_max
        rt_ok &= res.err_max < 2e-2
    elapsed = time.perf_counter() - t0

    ok = shift_ok and rt_ok and elapsed < 30.0
    _verdict(2, "shift symmetry", ok)
    assert shift_ok
    assert rt_ok, errs
    assert elapsed < 30.0


def test_criterion_3_interlacing_suite():
    rng = np.random.default_rng(112358)
    violations = 0
    for _ in range(20):
        q = random_smooth_potential(rng, n_nodes=201, amplitude=5.0)
        sp = compute_spectra(q, 12)
        lam, mu = sp.dirichlet, sp.dirichlet_neumann
        strict = np.all(mu < lam) and np.all(lam[:-1] < mu[1:])
        if not strict:
            violations += 1
    ok = violations == 0
    _verdict(3, "interlacing suite", ok)
    assert violations == 0


@pytest.fixture(scope="module")
def fine_linear_record():
    t0 = time.perf_counter()
    q = Potential.from_function(lambda x: 1.0 + x, 401)
    # t_end by the tail rule with lambda_min = 1
    rec = simulate(q, Pulse(), t_end=3.0, m_steps=8000)
    return q, rec, time.perf_counter() - t0


def test_criterion_4_far_ratio_identity(fine_linear_record):
    t0 = time.perf_counter()
    q, rec, build_seconds = fine_linear_record
    worst = 0.0
    for lam in (1.0, 2.0, 4.0, 8.0):
        s = laplace_transform(rec, lam)
        ev = solve_phi(q, -lam)
        ref = ev.dphi_end / ev.phi_end
        worst = max(worst, abs(s.B_value / s.A_value - ref) / abs(ref))

    q0 = Potential.constant(0.0, 401)
    rec0 = simulate(q0, Pulse(), t_end=3.0, m_steps=8000)
    worst_free = 0.0
    for lam in (1.0, 2.0, 4.0, 8.0):
        s = laplace_transform(rec0, lam)
        rt = np.sqrt(lam)
        closed = rt * np.cosh(rt) / np.sinh(rt)
        worst_free = max(worst_free, abs(s.B_value / s.A_value - closed) / closed)
    elapsed = time.perf_counter() - t0 + build_seconds

    ok = worst < 1e-2 and worst_free < 1e-2 and elapsed < 120.0
    _verdict(4, "far-flux ratio identity", ok)
    assert worst < 1e-2, worst
    assert worst_free < 1e-2, worst_free
    assert elapsed < 120.0


def test_criterion_5_near_ratio_identity(fine_linear_record):
    q, rec, _ = fine_linear_record
    worst = 0.0
    for lam in (1.0, 2.0, 4.0, 8.0):
        s = laplace_transform(rec, lam)
        ref = 1.0 / solve_phi(q, -lam).phi_end
        worst = max(worst, abs(s.B0_value / s.A_value - ref) / abs(ref))
    ok = worst < 1e-2
    _verdict(5, "near-flux ratio identity", ok)
    assert worst < 1e-2, worst


def test_criterion_6_nonuniqueness():
    t0 = time.perf_counter()
    tol_root = 1e-10
    cfg = ExperimentConfig(
        potential_spec="x",
        j_max=10,
        n_nodes=401,
        tol_root=tol_root,
        figures=False,
    )
    res = run_nonuniqueness(cfg)
    elapsed = time.perf_counter() - t0

    dir_ok = res.dirichlet_gap < 1e-8
    mu_ok = res.neumann_gap > 10.0 * tol_root
    gap_ok = abs(res.neumann_gap - MU_GAP_LINEAR) < 1e-4
    flux_ok = res.near_ratio_diff < 1e-3 and res.far_ratio_diff > 1e-2
    ok = dir_ok and mu_ok and gap_ok and flux_ok and elapsed < 10.0
    _verdict(6, "non-uniqueness demonstration", ok)
    assert dir_ok, res.dirichlet_gap
    assert mu_ok and gap_ok, res.neumann_gap
    assert flux_ok, (res.near_ratio_diff, res.far_ratio_diff)
    assert elapsed < 10.0


def test_criterion_7_kernel_boundary_recovery():
    results = {}
    for label, qfun in (
        ("q=2", lambda x: 2.0 + 0.0 * x),
        ("q=sin", lambda x: np.sin(2 * np.pi * x)),
    ):
        q = Potential.from_function(qfun, 201)
        sp = compute_spectra(q, 16)
        bk, s1, s2 = recover_boundary_kernel(sp, 201)
        K = goursat_kernel(q)
        h = q.h
        k1_err = np.max(np.abs(bk.K1 - K.boundary_row()))
        dxo = (3 * K.values[-1] - 4 * K.values[-2] + K.values[-3]) / (2 * h)
        k1x_err = np.max(np.abs(bk.K1x[:-2] - dxo[:-2]))
        e1, _ = recover_K1(sp.dirichlet)
        e2, _ = recover_K1x(sp.dirichlet_neumann, e1)
        r1, r2 = constraint_residuals(e1, e2, sp.dirichlet, sp.dirichlet_neumann)
        results[label] = dict(
            k1=k1_err,
            k1x=k1x_err,
            res=max(np.max(np.abs(r1)), np.max(np.abs(r2))),
            cond=max(s1.condition_estimate, s2.condition_estimate),
        )
    ok = all(
        r["k1"] < 5e-3 and r["k1x"] < 3e-2 and r["res"] < 1e-10 and r["cond"] < 1e3
        for r in results.values()
    )
    _verdict(7, "kernel boundary recovery", ok)
    for label, r in results.items():
        assert r["k1"] < 5e-3, (label, r)
        assert r["k1x"] < 3e-2, (label, r)
        assert r["res"] < 1e-10, (label, r)
        assert r["cond"] < 1e3, (label, r)


def test_criterion_8_volterra_convergence():
    n = 201
    y = np.linspace(0, 1, n)
    bk = BoundaryKernel(
        K1=constant_kernel_trace(1.0, y),
        K1x=constant_kernel_trace_dx(1.0, y),
        K1y=constant_kernel_trace_dy(1.0, y),
    )
    src = build_source(bk)
    state, diag = solve_fixed_point(src)
    q_rec, _ = extract_potential(state)
    err = np.max(np.abs(q_rec.values - 1.0))

    norms = diag.update_norms
    ratios = [
        norms[k + 1] / norms[k] for k in range(3, len(norms) - 1) if norms[k] > 0
    ]
    ratio_ok = all(r <= 0.9 for r in ratios)

    # Non-convergence must surface as an error, never a silent success.
    reported = False
    try:
        solve_fixed_point(src, tol=1e-30, max_iter=3)
    except NonConvergenceError:
        reported = True

    ok = err < 2e-2 and ratio_ok and reported
    _verdict(8, "fixed-point convergence", ok)
    assert err < 2e-2, err
    assert ratio_ok, ratios
    assert reported


def test_criterion_9_end_to_end_roundtrip():
    t0 = time.perf_counter()
    errs = {}
    for J in (16, 32):
        cfg = ExperimentConfig(
            potential_spec="sin(2*pi*x)",
            j_max=J,
            n_nodes=201,
            mode="synthetic",
            figures=False,
        )
        res = run_roundtrip(cfg)
        errs[J] = (res.err_max, res.err_rms)
    elapsed = time.perf_counter() - t0

    max16, rms16 = errs[16]
    max32, rms32 = errs[32]
    ok = (
        max16 < 0.1
        and rms16 < 0.05
        and max32 < max16
        and rms32 < rms16
        and elapsed < 120.0
    )
    _verdict(9, "end-to-end round trip", ok)
    assert max16 < 0.1 and rms16 < 0.05, errs
    assert max32 < max16 and rms32 < rms16, errs
    assert elapsed < 120.0


def test_criterion_10_mean_identity():
    gaps = {}
    for label, qfun, mean in (
        ("q=2", lambda x: 2.0 + 0.0 * x, 2.0),
        ("q=sin", lambda x: np.sin(2 * np.pi * x), 0.0),
    ):
        q = Potential.from_function(qfun, 201)
        sp = compute_spectra(q, 16)
        bk, _, _ = recover_boundary_kernel(sp, 201)
        gaps[label] = abs(2.0 * bk.k11 - mean)
    ok = all(g < 1e-2 for g in gaps.values())
    _verdict(10, "mean identity", ok)
    assert all(g < 1e-2 for g in gaps.values()), gaps
