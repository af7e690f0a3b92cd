"""Forward spectral machinery on the unit interval.

Provides the initial-value solution phi(x, nu) of

    -phi'' + q(x) phi = nu * phi,   phi(0) = 0,  phi'(0) = 1,

the two eigenvalue families tied to it (Dirichlet eigenvalues are the
zeros of phi(1, .), Dirichlet-Neumann eigenvalues the zeros of
phi'(1, .)), a characteristic-coordinate Goursat solver for the
transformation kernel K(x, y), and a transmutation-identity residual
check coupling the two.

The integrator is a fixed-step fourth-order Magnus scheme built from
closed-form exponentials of traceless 2x2 matrices, with q interpolated
linearly between grid nodes.  It is exact for constant potentials and
vectorizes across the spectral parameter.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BracketingError, IntegrationError, InterlacingError
from .special import cos_sqrt, free_wave, sinc_sqrt

_GAUSS_OFF = np.sqrt(3.0) / 6.0
_BATCH = 2048


@dataclass(frozen=True)
class Potential:
    """Samples of the potential q on a uniform grid over [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("potential needs at least 3 samples on [0, 1]")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential samples must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f: Callable, n_nodes: int) -> "Potential":
        x = np.linspace(0.0, 1.0, n_nodes)
        return cls(np.asarray(f(x), dtype=float) * np.ones_like(x))

    @classmethod
    def constant(cls, c: float, n_nodes: int) -> "Potential":
        return cls(np.full(n_nodes, float(c)))

    @property
    def n_nodes(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return 1.0 / (self.values.size - 1)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    @property
    def mean(self) -> float:
        return float(np.trapezoid(self.values, dx=self.h))

    def reflected(self) -> "Potential":
        """The potential x -> q(1 - x)."""
        return Potential(self.values[::-1])

    def asymmetry(self) -> float:
        """max |q(x) - q(1-x)| over the grid."""
        return float(np.max(np.abs(self.values - self.values[::-1])))


@dataclass(frozen=True)
class PhiEvaluation:
    """phi(1, nu) and phi'(1, nu), optionally with the full profile."""

    nu: float
    phi_end: float
    dphi_end: float
    profile: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SpectralPair:
    """The first J eigenvalues of both boundary-condition families."""

    dirichlet: np.ndarray
    dirichlet_neumann: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.dirichlet, dtype=float)
        mu = np.asarray(self.dirichlet_neumann, dtype=float)
        if lam.ndim != 1 or mu.ndim != 1 or lam.size != mu.size:
            raise ValueError("the two eigenvalue sequences must have equal length")
        object.__setattr__(self, "dirichlet", lam)
        object.__setattr__(self, "dirichlet_neumann", mu)

    @property
    def count(self) -> int:
        return self.dirichlet.size

    def check_interlacing(self) -> None:
        """Raise InterlacingError unless mu_1 < lam_1 < mu_2 < lam_2 < ..."""
        lam, mu = self.dirichlet, self.dirichlet_neumann
        bad = [j for j in range(lam.size) if not mu[j] < lam[j]]
        bad += [j for j in range(lam.size - 1) if not lam[j] < mu[j + 1]]
        if bad:
            raise InterlacingError(
                "interlacing mu_j < lam_j < mu_{j+1} violated at indices %s"
                % sorted(set(bad)),
                indices=sorted(set(bad)),
            )


@dataclass(frozen=True)
class KernelField:
    """Transformation kernel K(x, y) on the triangle 0 <= y <= x <= 1.

    Stored as a square array with zeros above the diagonal.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("kernel field must be a square array")
        object.__setattr__(self, "values", v)

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    def boundary_row(self) -> np.ndarray:
        """K(1, y) on the y-grid."""
        return self.values[-1].copy()

    def diagonal(self) -> np.ndarray:
        """K(x, x) on the x-grid."""
        return np.diagonal(self.values).copy()


# ---------------------------------------------------------------------------
# Initial-value propagation
# ---------------------------------------------------------------------------

def _step_matrices(q: Potential, nus: np.ndarray) -> np.ndarray:
    """Per-interval transfer matrices for the state (phi, phi').

    Fourth-order Magnus step using the two-point Gauss rule on each
    interval; the matrix exponential of the traceless generator is exact.
    Returns an array of shape (n_steps, n_nu, 2, 2).
    """
    h = q.h
    qv = q.values
    dq = qv[1:] - qv[:-1]
    q1 = qv[:-1] + dq * (0.5 - _GAUSS_OFF)
    q2 = qv[:-1] + dq * (0.5 + _GAUSS_OFF)
    w1 = q1[:, None] - nus[None, :]
    w2 = q2[:, None] - nus[None, :]
    wbar = 0.5 * (w1 + w2)
    delta = np.sqrt(3.0) * h * h * (w1 - w2) / 12.0
    d = delta * delta + h * h * wbar  # Omega^2 = d * I
    c = cos_sqrt(-d)
    s = sinc_sqrt(-d)
    T = np.empty(w1.shape + (2, 2))
    T[..., 0, 0] = c + s * delta
    T[..., 0, 1] = s * h
    T[..., 1, 0] = s * h * wbar
    T[..., 1, 1] = c - s * delta
    return T


def _tree_product(T: np.ndarray) -> np.ndarray:
    """Ordered product T[m-1] @ ... @ T[0] by pairwise reduction.

    Overflow (deep sinh growth at very negative nu) is left to the
    caller, which detects non-finite end values.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        while T.shape[0] > 1:
            m = T.shape[0]
            even = T[0 : m - (m % 2) : 2]
            odd = T[1:m:2]
            prod = odd @ even
            if m % 2:
                prod = np.concatenate([prod, T[-1:]], axis=0)
            T = prod
    return T[0]


def _end_values(q: Potential, nus) -> tuple[np.ndarray, np.ndarray]:
    """(phi(1, nu), phi'(1, nu)) for an array of spectral parameters."""
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    phi = np.empty_like(nus)
    dphi = np.empty_like(nus)
    for lo in range(0, nus.size, _BATCH):
        chunk = nus[lo : lo + _BATCH]
        M = _tree_product(_step_matrices(q, chunk))
        phi[lo : lo + _BATCH] = M[:, 0, 1]
        dphi[lo : lo + _BATCH] = M[:, 1, 1]
    return phi, dphi


def solve_phi(q: Potential, nu: float, return_profile: bool = False) -> PhiEvaluation:
    """Integrate the initial-value problem across [0, 1] at parameter nu.

    Raises IntegrationError when the propagation overflows (very large
    negative nu), reporting where the blow-up happened.
    """
    nu = float(nu)
    if not return_profile:
        phi, dphi = _end_values(q, np.array([nu]))
        if not (np.isfinite(phi[0]) and np.isfinite(dphi[0])):
            _locate_blowup(q, nu)
        return PhiEvaluation(nu=nu, phi_end=float(phi[0]), dphi_end=float(dphi[0]))

    T = _step_matrices(q, np.array([nu]))[:, 0]
    n = q.n_nodes
    prof = np.empty(n)
    prof[0] = 0.0
    state = np.array([0.0, 1.0])
    for i in range(n - 1):
        with np.errstate(over="ignore", invalid="ignore"):
            state = T[i] @ state
        prof[i + 1] = state[0]
        if not np.all(np.isfinite(state)):
            raise IntegrationError(
                "initial-value integration overflowed at x=%.6g (nu=%.6g)"
                % ((i + 1) * q.h, nu),
                location=(i + 1) * q.h,
            )
    return PhiEvaluation(
        nu=nu, phi_end=float(state[0]), dphi_end=float(state[1]), profile=prof
    )


def _locate_blowup(q: Potential, nu: float):
    T = _step_matrices(q, np.array([nu]))[:, 0]
    state = np.array([0.0, 1.0])
    for i in range(T.shape[0]):
        with np.errstate(over="ignore", invalid="ignore"):
            state = T[i] @ state
        if not np.all(np.isfinite(state)):
            raise IntegrationError(
                "initial-value integration overflowed at x=%.6g (nu=%.6g)"
                % ((i + 1) * q.h, nu),
                location=(i + 1) * q.h,
            )
    raise IntegrationError("non-finite end values at nu=%.6g" % nu)


# ---------------------------------------------------------------------------
# Eigenvalue computation
# ---------------------------------------------------------------------------

def _bracketed_roots(
    fvec: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    max_retries: int,
    label: str,
) -> np.ndarray:
    """Locate one root of f in each seed interval [lo_j, hi_j].

    Brackets are expanded about their centers by 25% per retry until a
    sign change appears; each bracket is then bisected and polished with
    a safeguarded secant step.
    """
    lo = lo.copy()
    hi = hi.copy()
    flo = fvec(lo)
    fhi = fvec(hi)
    bad = np.sign(flo) == np.sign(fhi)
    retries = 0
    while np.any(bad):
        if retries >= max_retries:
            j = int(np.argmax(bad))
            raise BracketingError(
                "no sign change for %s root %d in [%.6g, %.6g] after %d expansions"
                % (label, j + 1, lo[j], hi[j], retries),
                index=j + 1,
                interval=(float(lo[j]), float(hi[j])),
            )
        center = 0.5 * (lo[bad] + hi[bad])
        half = 0.5 * (hi[bad] - lo[bad]) * 1.25
        lo[bad] = center - half
        hi[bad] = center + half
        flo[bad] = fvec(lo[bad])
        fhi[bad] = fvec(hi[bad])
        bad = np.sign(flo) == np.sign(fhi)
        retries += 1

    # Bisection narrows every bracket to ~10*tol width, secant finishes.
    width = float(np.max(hi - lo))
    n_bisect = min(80, max(8, int(np.ceil(np.log2(width / (10.0 * tol))))))
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        fm = fvec(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        fhi = np.where(left, fhi, fm)
    root = 0.5 * (lo + hi)
    fr = fvec(root)
    prev, fprev = lo, flo
    for _ in range(8):
        denom = fr - fprev
        step = np.where(denom != 0.0, -fr * (root - prev) / np.where(denom == 0, 1, denom), 0.0)
        nxt = np.clip(root + step, lo, hi)
        prev, fprev = root, fr
        root = nxt
        fr = fvec(root)
        if np.all(np.abs(root - prev) < 0.25 * tol):
            break
    return root


def _seed_intervals(j_max: int, shift: float, family: str):
    j = np.arange(1, j_max + 1, dtype=float)
    if family == "dirichlet":
        lo = ((j - 0.5) * np.pi) ** 2 + shift
        hi = ((j + 0.5) * np.pi) ** 2 + shift
    else:
        lo = ((j - 1.0) * np.pi) ** 2 + shift
        hi = (j * np.pi) ** 2 + shift
    return lo, hi


def dirichlet_eigenvalues(
    q: Potential, j_max: int, tol_root: float = 1e-10, max_retries: int = 8
) -> np.ndarray:
    """First j_max zeros of phi(1, .) only (no interlacing check)."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")

    def f_dir(nus):
        return _end_values(q, nus)[0]

    lo, hi = _seed_intervals(j_max, q.mean, "dirichlet")
    return _bracketed_roots(f_dir, lo, hi, tol_root, max_retries, "dirichlet")


def compute_spectra(
    q: Potential,
    j_max: int,
    tol_root: float = 1e-10,
    max_retries: int = 8,
) -> SpectralPair:
    """First j_max zeros of phi(1, .) and of phi'(1, .).

    Bracket seeds come from the free asymptotics shifted by mean(q); the
    result is checked for strict interlacing.
    """
    lam = dirichlet_eigenvalues(q, j_max, tol_root, max_retries)

    def f_dn(nus):
        return _end_values(q, nus)[1]

    lo, hi = _seed_intervals(j_max, q.mean, "dirichlet_neumann")
    mu = _bracketed_roots(f_dn, lo, hi, tol_root, max_retries, "dirichlet-neumann")

    pair = SpectralPair(dirichlet=lam, dirichlet_neumann=mu)
    pair.check_interlacing()
    return pair


# ---------------------------------------------------------------------------
# Goursat oracle for the transformation kernel
# ---------------------------------------------------------------------------

def goursat_kernel(q: Potential) -> KernelField:
    """Solve the kernel's Goursat problem on the triangle 0 <= y <= x <= 1.

    The kernel satisfies K_xx - K_yy = q(x) K with K(x, x) equal to half
    the running integral of q and K(x, 0) = 0.  Marching happens in the
    characteristic variables (x+y, x-y) on a lattice of spacing h, which
    is second-order accurate and aligns all midpoints with half-nodes of
    the potential grid.
    """
    n = q.n_nodes
    N = n - 1
    h = q.h
    qv = q.values

    # q and its running integral on the half-grid r*h/2 (exact for the
    # piecewise-linear potential model).
    qh = np.empty(2 * N + 1)
    qh[0::2] = qv
    qh[1::2] = 0.5 * (qv[:-1] + qv[1:])
    W = np.concatenate([[0.0], np.cumsum(0.5 * h * (qv[:-1] + qv[1:]))])
    Wh = np.empty(2 * N + 1)
    Wh[0::2] = W
    Wh[1::2] = W[:-1] + (h / 8.0) * (3.0 * qv[:-1] + qv[1:])

    # Kt[p, r] ~ K at xi = p*h, eta = r*h; data on r = 0 (the diagonal of
    # K) and on r = p (the edge y = 0, where K vanishes).
    Kt = np.zeros((2 * N + 1, N + 1))
    Kt[:, 0] = 0.5 * Wh
    for r in range(1, N + 1):
        pmax = 2 * N - r
        ps = np.arange(r + 1, pmax + 1)
        if ps.size == 0:
            continue
        gam = (h * h / 16.0) * qh[ps + r - 1]
        prev_row = Kt[ps, r - 1]
        prev_row_m1 = Kt[ps - 1, r - 1]
        # Row recurrence K_p = a_p K_{p-1} + b_p, unrolled as an affine scan.
        a = (1.0 + gam) / (1.0 - gam)
        b = ((1.0 + gam) * prev_row + (gam - 1.0) * prev_row_m1) / (1.0 - gam)
        P = np.cumprod(a)
        Kt[ps, r] = P * np.cumsum(b / P)
    K = np.zeros((n, n))
    i, j = np.tril_indices(n)
    K[i, j] = Kt[i + j, i - j]
    return KernelField(values=K)


def check_transmutation(q: Potential, nu: float) -> float:
    """Residual of the transmutation identity at x = 1.

    Compares phi(1, nu) from the shooting integrator with the free
    solution corrected through the Goursat kernel's boundary row:
    phi(1, nu) = phi0(1, nu) + int_0^1 K(1, y) phi0(y, nu) dy.
    """
    nu = float(nu)
    y = q.grid
    k1 = goursat_kernel(q).boundary_row()
    lhs = solve_phi(q, nu).phi_end
    rhs = float(free_wave(nu, 1.0)) + float(
        np.trapezoid(k1 * free_wave(nu, y), dx=q.h)
    )
    return abs(lhs - rhs)
