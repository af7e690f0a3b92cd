"""Entire-function helpers for sine-type basis evaluation.

The spectral parameter can be negative, so sin(sqrt(v)*x)/sqrt(v) and
cos(sqrt(v)*x) are evaluated through their entire extensions in v
(sinh/cosh branch for v < 0, power series near v = 0).
"""

import numpy as np

# Below this magnitude the power series is exact to double precision.
_SERIES_CUT = 1e-6


def cos_sqrt(d):
    """cos(sqrt(d)) for d >= 0, cosh(sqrt(-d)) for d < 0; entire in d."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    pos = d >= 0.0
    out[pos] = np.cos(np.sqrt(d[pos]))
    out[~pos] = np.cosh(np.sqrt(-d[~pos]))
    if out.ndim == 0:
        return float(out)
    return out


def sinc_sqrt(d):
    """sin(sqrt(d))/sqrt(d) for d > 0, sinh form for d < 0, 1 at d = 0."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    small = np.abs(d) < _SERIES_CUT
    ds = d[small]
    out[small] = 1.0 - ds / 6.0 + ds * ds / 120.0
    pos = ~small & (d > 0)
    neg = ~small & (d < 0)
    rp = np.sqrt(d[pos])
    out[pos] = np.sin(rp) / rp
    rn = np.sqrt(-d[neg])
    out[neg] = np.sinh(rn) / rn
    if out.ndim == 0:
        return float(out)
    return out


def csinc(z):
    """sin(z)/z for complex z, with the removable singularity filled in."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    z2 = zs * zs
    out[small] = 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    out[~small] = np.sin(z[~small]) / z[~small]
    if out.ndim == 0:
        return complex(out)
    return out


def free_wave(nu, x):
    """Solution sin(sqrt(nu)*x)/sqrt(nu) of the zero-potential problem.

    Broadcasts over both arguments; entire in nu (equals x at nu = 0).
    """
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    return x * sinc_sqrt(nu * x * x)


def free_wave_deriv(nu, x):
    """x-derivative cos(sqrt(nu)*x) of the zero-potential solution."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    return cos_sqrt(nu * x * x)
