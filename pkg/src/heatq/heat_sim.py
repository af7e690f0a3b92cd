"""Forward heat-equation simulation and Laplace-domain data reduction.

Solves u_t = u_xx - q(x) u on [0, 1] with u(x, 0) = 0, u(0, t) = 0 and a
prescribed boundary pulse u(1, t) = a(t), records the fluxes u_x at both
ends, and Laplace-transforms the records.  A truncated eigenfunction
series for the transformed solution doubles as an independent oracle for
the PDE + quadrature pipeline.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import NearPoleError, SimulationError, TruncationWarning
from .sturm_liouville import Potential, SpectralPair, solve_phi

PULSE_SHAPES = ("quartic", "sine2")


@dataclass(frozen=True)
class Pulse:
    """Compactly supported boundary temperature pulse on [0, duration]."""

    duration: float = 0.2
    shape: str = "quartic"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        if self.shape not in PULSE_SHAPES:
            raise ValueError("unknown pulse shape %r" % (self.shape,))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= self.duration)
        ts = np.where(inside, t, 0.0)
        if self.shape == "quartic":
            vals = ts * ts * (self.duration - ts) ** 2
        else:
            vals = np.sin(np.pi * ts / self.duration) ** 2
        out = self.amplitude * np.where(inside, vals, 0.0)
        if out.ndim == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class PulseRecord:
    """Time series of the pulse and the two measured fluxes.

    probe_values optionally carries u(probe_x, t) at one interior node,
    used by cross-check oracles; it is not part of the measurement set.
    """

    t_nodes: np.ndarray
    a_values: np.ndarray
    b_values: np.ndarray
    b0_values: np.ndarray
    T_support: float
    probe_x: Optional[float] = None
    probe_values: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.t_nodes, dtype=float)
        for name in ("a_values", "b_values", "b0_values"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != t.shape:
                raise ValueError("%s must match the time grid" % name)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "t_nodes", t)
        tail = t > self.T_support
        if np.any(np.abs(self.a_values[tail]) > 0.0):
            raise ValueError("pulse must vanish beyond its support time")

    @property
    def t_end(self) -> float:
        return float(self.t_nodes[-1])


@dataclass(frozen=True)
class LaplaceSample:
    """Laplace transforms of the pulse and both fluxes at one lambda."""

    lam: float
    A_value: float
    B_value: float
    B0_value: float
    tail_estimate: float = 0.0


def simulate(
    q: Potential,
    pulse: Pulse,
    t_end: float,
    m_steps: int,
    max_step_ratio: float = 500.0,
    probe_x: Optional[float] = None,
) -> PulseRecord:
    """Crank-Nicolson march of the boundary-driven heat problem.

    The spatial mesh is the potential grid; fluxes at both ends come from
    one-sided three-point differences, second order in h.
    """
    if t_end <= pulse.duration:
        raise SimulationError(
            "t_end=%.4g must exceed the pulse support %.4g" % (t_end, pulse.duration)
        )
    if m_steps < 2:
        raise SimulationError("m_steps must be at least 2")
    n = q.n_nodes
    h = q.h
    dt = t_end / m_steps
    if dt / h**2 > max_step_ratio:
        raise SimulationError(
            "time step too coarse: dt/h^2 = %.3g exceeds %.3g; raise m_steps"
            % (dt / h**2, max_step_ratio)
        )

    t = np.linspace(0.0, t_end, m_steps + 1)
    a = pulse(t)
    qi = q.values[1:-1]
    inv_h2 = 1.0 / (h * h)
    r = 0.5 * dt

    # (I - r L) u_new = (I + r L) u_old + boundary terms, L = D2 - diag(q).
    diag = 1.0 + r * (2.0 * inv_h2 + qi)
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = -r * inv_h2
    ab[1, :] = diag
    ab[2, :-1] = -r * inv_h2

    u = np.zeros(n - 2)
    b = np.zeros(m_steps + 1)
    b0 = np.zeros(m_steps + 1)
    probe_idx = None
    probe = None
    if probe_x is not None:
        probe_idx = int(round(probe_x * (n - 1)))
        if probe_idx < 1 or probe_idx > n - 2:
            raise ValueError("probe_x must be interior to (0, 1)")
        probe = np.zeros(m_steps + 1)
    two_h = 2.0 * h
    b[0] = 3.0 * a[0] / two_h  # u == 0 initially
    for m in range(m_steps):
        Lu = -2.0 * u * inv_h2 - qi * u
        Lu[1:] += u[:-1] * inv_h2
        Lu[:-1] += u[1:] * inv_h2
        Lu[-1] += a[m] * inv_h2
        rhs = u + r * Lu
        rhs[-1] += r * a[m + 1] * inv_h2
        try:
            u = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded
            raise SimulationError("tridiagonal solve failed: %s" % exc) from exc
        if not np.all(np.isfinite(u)):
            raise SimulationError("simulation produced non-finite values at t=%.4g" % t[m + 1])
        b0[m + 1] = (4.0 * u[0] - u[1]) / two_h
        b[m + 1] = (3.0 * a[m + 1] - 4.0 * u[-1] + u[-2]) / two_h
        if probe is not None:
            probe[m + 1] = u[probe_idx - 1]
    # Diagnostic only: with negative eigenvalues the solution grows
    # exponentially in time instead of relaxing.
    mid = abs(b[int(0.6 * m_steps)])
    if abs(b[-1]) > 2.0 * mid and abs(b[-1]) > 1e-12:
        warnings.warn(
            "flux still growing at t_end=%.3g; the operator likely has "
            "negative eigenvalues" % t_end
        )
    return PulseRecord(
        t_nodes=t,
        a_values=a,
        b_values=b,
        b0_values=b0,
        T_support=pulse.duration,
        probe_x=None if probe is None else probe_idx * h,
        probe_values=probe,
    )


def default_t_end(pulse_duration: float, lambda_min: float) -> float:
    """Record length rule: max(5 T, 3 / lambda_min)."""
    return max(5.0 * pulse_duration, 3.0 / lambda_min)


def laplace_transform(
    record: PulseRecord, lam: float, tol_tail: float = 1e-8
) -> LaplaceSample:
    """A(lam), B(lam), B0(lam) by trapezoidal quadrature of the record.

    Emits a TruncationWarning when the crude tail bound
    exp(-lam t_end) * |last flux sample| exceeds tol_tail.
    """
    lam = float(lam)
    if lam < 0:
        raise ValueError("laplace_transform requires lam >= 0")
    t = record.t_nodes
    w = np.exp(-lam * t)
    dt = t[1] - t[0]
    A = float(np.trapezoid(w * record.a_values, dx=dt))
    B = float(np.trapezoid(w * record.b_values, dx=dt))
    B0 = float(np.trapezoid(w * record.b0_values, dx=dt))
    tail = float(
        np.exp(-lam * record.t_end)
        * max(abs(record.b_values[-1]), abs(record.b0_values[-1]))
    )
    if tail > tol_tail:
        warnings.warn(
            TruncationWarning(
                "Laplace tail estimate %.3g at lambda=%.4g exceeds %.3g; "
                "extend t_end" % (tail, lam, tol_tail)
            )
        )
    return LaplaceSample(lam=lam, A_value=A, B_value=B, B0_value=B0, tail_estimate=tail)


def modal_v(
    q: Potential,
    spectra: SpectralPair,
    a_value: float,
    lam: float,
    x: float,
    j_max: Optional[int] = None,
    pole_margin: float = 1e-8,
) -> float:
    """Truncated eigenfunction series for the Laplace-transformed solution.

    v(x, lam) = -sum_j A(lam) psi_j'(1) psi_j(x) / (lam + lam_j) with
    psi_j the unit-norm Dirichlet eigenfunctions built from shooting
    profiles.  Serves as an independent cross-check of laplace_transform
    applied to simulate output.
    """
    lam = float(lam)
    if j_max is None:
        j_max = spectra.count
    if j_max > spectra.count:
        raise ValueError("j_max exceeds the number of available eigenvalues")
    if 2 * j_max >= q.n_nodes - 1:
        raise ValueError(
            "grid with %d nodes cannot resolve eigenfunction %d; refine the grid"
            % (q.n_nodes, j_max)
        )
    if a_value == 0.0:
        return 0.0
    grid = q.grid
    total = 0.0
    for lam_j in spectra.dirichlet[:j_max]:
        if abs(lam + lam_j) < pole_margin:
            raise NearPoleError(
                "lambda=%.6g is within %.1g of the pole at %.6g"
                % (lam, pole_margin, -lam_j)
            )
        ev = solve_phi(q, lam_j, return_profile=True)
        norm = float(np.sqrt(np.trapezoid(ev.profile**2, dx=q.h)))
        psi_x = float(np.interp(x, grid, ev.profile)) / norm
        dpsi_1 = ev.dphi_end / norm
        total += dpsi_1 * psi_x / (lam + lam_j)
    return -a_value * total
