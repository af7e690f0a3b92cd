"""Toolkit for recovering the potential q(x) of u_t = u_xx - q(x) u on
[0, 1] from boundary flux measurements.

Pipeline: simulate the pulse-driven heat problem, Laplace-transform the
flux records, read the two eigenvalue families off the flux ratios,
recover the transformation kernel's boundary traces from the spectra,
and solve a Volterra-type fixed-point system for q and the full kernel.
"""

from .errors import (
    BracketingError,
    ConditioningWarning,
    ConfigError,
    DivergenceError,
    ExtractionError,
    HeatqError,
    IntegrationError,
    InterlacingError,
    NearPoleError,
    NonConvergenceError,
    RecoveryError,
    SimulationError,
    TraceRangeError,
    TruncationWarning,
)
from .heat_sim import LaplaceSample, Pulse, PulseRecord, laplace_transform, modal_v, simulate
from .kernel_recovery import (
    BoundaryExpansion,
    BoundaryKernel,
    GramSystem,
    gram_matrix,
    recover_boundary_kernel,
    recover_K1,
    recover_K1x,
)
from .spectral_extract import (
    FLUX_FAR,
    FLUX_NEAR,
    RatioTrace,
    extract_dirichlet_only,
    extract_two_spectra,
    fit_potential_to_ratios,
    measured_trace,
    synthetic_trace,
)
from .sturm_liouville import (
    KernelField,
    PhiEvaluation,
    Potential,
    SpectralPair,
    check_transmutation,
    compute_spectra,
    goursat_kernel,
    solve_phi,
)
from .volterra_solver import (
    IterationState,
    SourceTerm,
    apply_W,
    build_source,
    extract_potential,
    solve_fixed_point,
)

__version__ = "0.1.0"
