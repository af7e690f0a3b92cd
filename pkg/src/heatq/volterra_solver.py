"""Fixed-point solution of the kernel/potential Volterra system.

Given the boundary traces K(1, .) and K_x(1, .), the pair
U = (q(x), K(x, y)) satisfies U = W(U) + h where

    W(U) = ( -2 int_x^1 q(s) K(s, 2x - s) ds ,
             1/2 iint_D q(s) K(s, t) ds dt )

with D the backward characteristic triangle of (x, y) up to s = 1, and
h = (f, g) is computable from the boundary data alone.  Successive
substitution U_{n+1} = W(U_n) + h, U_0 = h converges geometrically; the
iteration history is returned for diagnostics.

All kernel evaluations at negative second argument go through the odd
extension K(x, -y) = -K(x, y), consistent with the sine normalization
K(x, 0) = 0.  Grids are uniform, shared with the potential grid, and all
integrals are composite trapezoid sums aligned with the lattice.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, NonConvergenceError
from .kernel_recovery import BoundaryKernel
from .sturm_liouville import Potential


@dataclass(frozen=True)
class SourceTerm:
    """Data term h = (f, g) of the Volterra system on the shared grid."""

    f_values: np.ndarray
    g_values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f_values, dtype=float)
        g = np.asarray(self.g_values, dtype=float)
        if g.shape != (f.size, f.size):
            raise ValueError("g must be square on the same grid as f")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("source term must be finite")
        object.__setattr__(self, "f_values", f)
        object.__setattr__(self, "g_values", g)

    @property
    def n_nodes(self) -> int:
        return self.f_values.size


@dataclass(frozen=True)
class IterationState:
    """Candidate pair (q, K) evolved by the fixed-point map."""

    q_part: np.ndarray
    k_part: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.q_part.size


@dataclass
class IterationDiagnostics:
    """Update norms and convergence verdict of one fixed-point run."""

    update_norms: list
    converged: bool
    iterations: int
    contraction_ratio: Optional[float] = None


def build_source(bk: BoundaryKernel) -> SourceTerm:
    """Assemble f and g from the boundary traces.

    f(x) = 2 [K_y(1, 2x-1) + K_x(1, 2x-1)] and
    g(x, y) = (K(1, y+x-1) + K(1, y-x+1))/2
              - 1/2 int_{y+x-1}^{y-x+1} K_x(1, t) dt,
    with odd extension across t = 0 (K_y is extended evenly, being the
    derivative of an odd trace).  On the shared uniform grid every
    argument lands exactly on a node of the extension.
    """
    n = bk.n_nodes
    C = n - 1
    h = 1.0 / C

    # Extended traces on t = -1 .. 1 (index offset C).
    k1e = np.concatenate([-bk.K1[:0:-1], bk.K1])
    k1xe = np.concatenate([-bk.K1x[:0:-1], bk.K1x])
    k1ye = np.concatenate([bk.K1y[:0:-1], bk.K1y])
    # Running integral of K_x(1, .) over the extension, trapezoid rule.
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (k1xe[1:] + k1xe[:-1]))])

    i = np.arange(n)
    f = 2.0 * (k1ye[2 * i] + k1xe[2 * i])

    ii, jj = np.tril_indices(n)
    idx_lo = ii + jj            # y + x - 1, shifted by C
    idx_hi = jj - ii + 2 * C    # y - x + 1, shifted by C
    g = np.zeros((n, n))
    g[ii, jj] = 0.5 * (k1e[idx_lo] + k1e[idx_hi]) - 0.5 * (
        cum[idx_hi] - cum[idx_lo]
    )
    return SourceTerm(f_values=f, g_values=g)


def _extend_odd(K: np.ndarray) -> np.ndarray:
    """Rows K(x_m, .) extended oddly in the second argument."""
    return np.concatenate([-K[:, :0:-1], K], axis=1)


def apply_W(state: IterationState) -> IterationState:
    """One application of the Volterra integral operator W.

    Both components carry a factor q, integrate toward x = 1, and are
    evaluated with composite trapezoid sums whose nodes align with the
    grid diagonals; the inner characteristic integrals reuse row-wise
    cumulative sums.
    """
    q = state.q_part
    K = state.k_part
    n = q.size
    C = n - 1
    h = 1.0 / C

    Kext = _extend_odd(K)          # (n, 2n-1)
    S = np.cumsum(Kext, axis=1)    # row cumulative sums

    # First component: -2 int_x^1 q(s) K(s, 2x - s) ds on aligned nodes.
    im = np.arange(n)
    col = C + 2 * im[:, None] - im[None, :]      # (x-index, s-index)
    col = np.clip(col, 0, 2 * C)
    D = np.take_along_axis(Kext, col.T, axis=1).T  # D[i, m] = K(s_m, 2x_i - s_m)
    wtrap = np.zeros((n, n))
    for i in range(n):
        if i < n - 1:
            wtrap[i, i:] = h
            wtrap[i, i] = 0.5 * h
            wtrap[i, n - 1] = 0.5 * h
    q_new = -2.0 * np.sum(wtrap * q[None, :] * D, axis=1)

    # Second component: 1/2 iint over the characteristic triangle.
    K_new = np.zeros((n, n))
    for i in range(n - 1):
        ms = np.arange(i, n)
        offs = ms - i
        js = np.arange(i + 1)
        a_idx = C + js[None, :] - offs[:, None]
        b_idx = C + js[None, :] + offs[:, None]
        rows_S = S[i:]
        rows_R = Kext[i:]
        Sb1 = np.take_along_axis(rows_S, b_idx - 1, axis=1)
        Sa = np.take_along_axis(rows_S, a_idx, axis=1)
        Ra = np.take_along_axis(rows_R, a_idx, axis=1)
        Rb = np.take_along_axis(rows_R, b_idx, axis=1)
        inner = h * (Sb1 - Sa + 0.5 * (Ra + Rb))  # zero when a == b
        wv = np.full(ms.size, h)
        wv[0] = 0.5 * h
        wv[-1] = 0.5 * h
        K_new[i, : i + 1] = 0.5 * ((wv * q[i:]) @ inner)
    # Row x = 1: the triangle is empty, W's second component vanishes.
    return IterationState(q_part=q_new, k_part=K_new)


def solve_fixed_point(
    source: SourceTerm,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> tuple[IterationState, IterationDiagnostics]:
    """Successive substitution U_{n+1} = W(U_n) + h starting from U_0 = h.

    Stops when the sup-norm of the update over both components drops
    below tol.  Raises NonConvergenceError at the iteration cap and
    DivergenceError when the update norm grows three times in a row
    beyond ten times its initial value; both carry the norm history.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    f, g = source.f_values, source.g_values
    state = IterationState(q_part=f.copy(), k_part=g.copy())
    norms = []
    grow = 0
    for _ in range(max_iter):
        w = apply_W(state)
        nxt = IterationState(q_part=w.q_part + f, k_part=w.k_part + g)
        delta = max(
            float(np.max(np.abs(nxt.q_part - state.q_part))),
            float(np.max(np.abs(nxt.k_part - state.k_part))),
        )
        norms.append(delta)
        state = nxt
        if delta < tol:
            ratio = None
            if len(norms) >= 5:
                tail = [
                    norms[k + 1] / norms[k]
                    for k in range(3, len(norms) - 1)
                    if norms[k] > 0
                ]
                if tail:
                    ratio = float(max(tail))
            return state, IterationDiagnostics(
                update_norms=norms,
                converged=True,
                iterations=len(norms),
                contraction_ratio=ratio,
            )
        if len(norms) >= 2 and norms[-1] > norms[-2]:
            grow += 1
        else:
            grow = 0
        if grow >= 3 and norms[-1] > 10.0 * norms[0]:
            raise DivergenceError(
                "fixed-point iteration diverging after %d steps" % len(norms),
                norm_history=norms,
            )
    raise NonConvergenceError(
        "no convergence to %.3g within %d iterations (last update %.3g)"
        % (tol, max_iter, norms[-1]),
        norm_history=norms,
    )


def extract_potential(state: IterationState) -> tuple[Potential, float]:
    """Recovered potential plus the kernel-diagonal consistency residual.

    The residual is max |q(x) - 2 d/dx K(x, x)| with the diagonal
    derivative taken by second-order one-sided differences.
    """
    q = state.q_part
    n = q.size
    if n < 5:
        raise ValueError("diagonal differencing needs at least 5 nodes")
    h = 1.0 / (n - 1)
    diag = np.diagonal(state.k_part)
    dd = np.empty(n)
    dd[: n - 2] = (-3.0 * diag[: n - 2] + 4.0 * diag[1 : n - 1] - diag[2:]) / (2 * h)
    dd[n - 2 :] = (3.0 * diag[n - 2 :] - 4.0 * diag[n - 3 : n - 1] + diag[n - 4 : n - 2]) / (
        2 * h
    )
    residual = float(np.max(np.abs(q - 2.0 * dd)))
    return Potential(q.copy()), residual
