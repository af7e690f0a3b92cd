"""End-to-end experiment drivers used by the command-line front end.

Each driver returns a plain result object; serialization and figure
rendering live in the report module so the drivers stay testable.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, HeatqError


@contextmanager
def _stage(name: str):
    """Prefix escaping toolkit errors with the pipeline stage name."""
    try:
        yield
    except HeatqError as exc:
        exc.args = ("stage '%s': %s" % (name, exc.args[0] if exc.args else ""),) + tuple(
            exc.args[1:]
        )
        raise
from .heat_sim import Pulse, laplace_transform, simulate
from .kernel_recovery import BoundaryKernel, GramSystem, recover_boundary_kernel
from .spectral_extract import (
    FLUX_FAR,
    extract_two_spectra,
    measured_trace,
    nu_ceiling,
    synthetic_trace,
)
from .sturm_liouville import Potential, SpectralPair, compute_spectra
from .volterra_solver import build_source, extract_potential, solve_fixed_point


def free_spectra(j_max: int) -> SpectralPair:
    """Exact spectra of the zero potential."""
    j = np.arange(1, j_max + 1, dtype=float)
    return SpectralPair(
        dirichlet=(j * np.pi) ** 2,
        dirichlet_neumann=((j - 0.5) * np.pi) ** 2,
    )


@dataclass
class ForwardResult:
    config: ExperimentConfig
    q: Potential
    spectra: SpectralPair
    record: object
    laplace: list
    timings: dict = field(default_factory=dict)


@dataclass
class InvertResult:
    config: ExperimentConfig
    spectra: SpectralPair
    boundary: BoundaryKernel
    gram_dirichlet: GramSystem
    gram_neumann: GramSystem
    q_recovered: Potential
    diag_residual: float
    update_norms: list
    contraction_ratio: Optional[float]
    q_true: Optional[Potential] = None
    err_max: Optional[float] = None
    err_rms: Optional[float] = None
    fitted_potential: Optional[Potential] = None
    timings: dict = field(default_factory=dict)

    def mean_identity_gap(self) -> float:
        """|2 K(1,1) - int q_recovered| diagnostic."""
        return abs(2.0 * self.boundary.k11 - self.q_recovered.mean)


@dataclass
class NonUniquenessResult:
    config: ExperimentConfig
    spectra: SpectralPair
    spectra_reflected: SpectralPair
    dirichlet_gap: float
    neumann_gap: float
    lambdas: np.ndarray
    far_ratio: np.ndarray
    far_ratio_reflected: np.ndarray
    near_ratio: np.ndarray
    near_ratio_reflected: np.ndarray
    timings: dict = field(default_factory=dict)

    @property
    def far_ratio_diff(self) -> float:
        return float(np.max(np.abs(self.far_ratio - self.far_ratio_reflected)
                            / np.abs(self.far_ratio)))

    @property
    def near_ratio_diff(self) -> float:
        return float(np.max(np.abs(self.near_ratio - self.near_ratio_reflected)
                            / np.abs(self.near_ratio)))


def _laplace_table(record, lambdas, tol_tail):
    return [laplace_transform(record, lam, tol_tail=tol_tail) for lam in lambdas]


def run_forward(cfg: ExperimentConfig) -> ForwardResult:
    """Spectra, pulse simulation and Laplace table for the configured q."""
    cfg.validate()
    timings = {}
    q = cfg.potential()
    t0 = time.perf_counter()
    with _stage("spectra"):
        spectra = compute_spectra(q, cfg.j_max, tol_root=cfg.tol_root)
    timings["spectra"] = time.perf_counter() - t0
    pulse = Pulse(duration=cfg.pulse_T, shape=cfg.pulse_shape, amplitude=cfg.pulse_amplitude)
    t0 = time.perf_counter()
    with _stage("simulate"):
        record = simulate(q, pulse, t_end=cfg.effective_t_end(), m_steps=cfg.m_steps)
    timings["simulate"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    with _stage("laplace"):
        laplace = _laplace_table(record, cfg.lambdas, cfg.tol_quad)
    timings["laplace"] = time.perf_counter() - t0
    return ForwardResult(
        config=cfg, q=q, spectra=spectra, record=record, laplace=laplace,
        timings=timings,
    )


def _spectra_for_inversion(cfg: ExperimentConfig, spectra, record, q_true):
    """Resolve the eigenvalue input for an inversion run."""
    fitted = None
    if spectra is not None:
        return spectra, fitted
    if cfg.seed_free:
        return free_spectra(cfg.j_max), fitted
    if cfg.mode == "measured":
        if record is None:
            if q_true is None:
                raise ConfigError("measured mode needs a pulse record or a potential")
            pulse = Pulse(
                duration=cfg.pulse_T,
                shape=cfg.pulse_shape,
                amplitude=cfg.pulse_amplitude,
            )
            t_end = max(5.0 * cfg.pulse_T, 3.0 / min(cfg.fit_lambdas))
            record = simulate(q_true, pulse, t_end=t_end, m_steps=cfg.m_steps)
        samples = _laplace_table(record, cfg.fit_lambdas, cfg.tol_quad)
        trace = measured_trace(
            samples,
            FLUX_FAR,
            record=record,
            n_nodes=cfg.n_nodes,
            fourier_modes=cfg.fit_modes,
            nu_max=nu_ceiling(cfg.j_max, 0.0) + 20.0,
        )
        fitted = trace.fitted_potential
    else:
        if q_true is None:
            raise ConfigError("synthetic mode needs a known potential")
        trace = synthetic_trace(
            q_true, FLUX_FAR, nu_max=nu_ceiling(cfg.j_max, q_true.mean)
        )
    return extract_two_spectra(trace, cfg.j_max), fitted


def run_invert(
    cfg: ExperimentConfig,
    spectra: Optional[SpectralPair] = None,
    record=None,
    q_true: Optional[Potential] = None,
) -> InvertResult:
    """Spectra (given or extracted) -> boundary kernel -> potential."""
    cfg.validate()
    timings = {}
    t0 = time.perf_counter()
    with _stage("extraction"):
        spectra, fitted = _spectra_for_inversion(cfg, spectra, record, q_true)
    timings["extraction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("kernel recovery"):
        bk, sys1, sys2 = recover_boundary_kernel(spectra, cfg.n_nodes, ridge=cfg.ridge)
    timings["kernel_recovery"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("volterra"):
        source = build_source(bk)
        state, diag = solve_fixed_point(source, tol=cfg.tol_iter, max_iter=cfg.max_iter)
        q_rec, residual = extract_potential(state)
    timings["volterra"] = time.perf_counter() - t0

    err_max = err_rms = None
    if q_true is not None:
        if q_true.n_nodes != q_rec.n_nodes:
            truth = np.interp(q_rec.grid, q_true.grid, q_true.values)
        else:
            truth = q_true.values
        diff = q_rec.values - truth
        err_max = float(np.max(np.abs(diff)))
        err_rms = float(np.sqrt(np.mean(diff**2)))
    return InvertResult(
        config=cfg,
        spectra=spectra,
        boundary=bk,
        gram_dirichlet=sys1,
        gram_neumann=sys2,
        q_recovered=q_rec,
        diag_residual=residual,
        update_norms=diag.update_norms,
        contraction_ratio=diag.contraction_ratio,
        q_true=q_true,
        err_max=err_max,
        err_rms=err_rms,
        fitted_potential=fitted,
        timings=timings,
    )


def run_roundtrip(cfg: ExperimentConfig) -> InvertResult:
    """Synthesize data for the configured q, invert, report error norms."""
    cfg.validate()
    q_true = cfg.potential()
    return run_invert(cfg, q_true=q_true)


def run_nonuniqueness(cfg: ExperimentConfig, asymmetry_floor: float = 1e-6) -> NonUniquenessResult:
    """Spectral and flux-ratio comparison of q against its reflection.

    Rejects symmetric potentials: the demonstration needs a pair that
    near-end data cannot distinguish while far-end data can.
    """
    cfg.validate()
    timings = {}
    q = cfg.potential()
    if q.asymmetry() <= asymmetry_floor:
        raise ConfigError(
            "potential is symmetric about x = 1/2 (asymmetry %.3g <= %.3g); "
            "the non-uniqueness demonstration needs an asymmetric q"
            % (q.asymmetry(), asymmetry_floor)
        )
    qr = q.reflected()
    t0 = time.perf_counter()
    sp = compute_spectra(q, cfg.j_max, tol_root=cfg.tol_root)
    spr = compute_spectra(qr, cfg.j_max, tol_root=cfg.tol_root)
    timings["spectra"] = time.perf_counter() - t0

    pulse = Pulse(duration=cfg.pulse_T, shape=cfg.pulse_shape, amplitude=cfg.pulse_amplitude)
    t_end = cfg.effective_t_end()
    t0 = time.perf_counter()
    rec = simulate(q, pulse, t_end=t_end, m_steps=cfg.m_steps)
    recr = simulate(qr, pulse, t_end=t_end, m_steps=cfg.m_steps)
    timings["simulate"] = time.perf_counter() - t0
    lams = np.asarray(cfg.lambdas)
    far, farr, near, nearr = [], [], [], []
    for lam in lams:
        s = laplace_transform(rec, lam, tol_tail=cfg.tol_quad)
        sr = laplace_transform(recr, lam, tol_tail=cfg.tol_quad)
        far.append(s.B_value / s.A_value)
        farr.append(sr.B_value / sr.A_value)
        near.append(s.B0_value / s.A_value)
        nearr.append(sr.B0_value / sr.A_value)
    return NonUniquenessResult(
        config=cfg,
        spectra=sp,
        spectra_reflected=spr,
        dirichlet_gap=float(np.max(np.abs(sp.dirichlet - spr.dirichlet))),
        neumann_gap=float(
            np.max(np.abs(sp.dirichlet_neumann - spr.dirichlet_neumann))
        ),
        lambdas=lams,
        far_ratio=np.array(far),
        far_ratio_reflected=np.array(farr),
        near_ratio=np.array(near),
        near_ratio_reflected=np.array(nearr),
        timings=timings,
    )
