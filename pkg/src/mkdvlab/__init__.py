"""mkdvlab: a numerical laboratory for low-regularity mKdV analysis.

Periodic-box spectral fields, exact Airy propagation, dyadic
Littlewood-Paley machinery, p-variation norms with frequency-dependent time
windows, the quartic multiplier b4 with its modified energies, a
pseudospectral mKdV solver, and sweep harnesses for the dispersive
estimates that underpin the a priori bound.
"""

__version__ = "0.1.0"

from .airy import (
    AiryTrajectory,
    airy_mixed_norms,
    airy_propagate,
    fractional_derivative,
    mixed_norm_txy,
)
from .energy import (
    EnergyReport,
    e1_bound_probe,
    energy_E0,
    energy_E1,
    energy_identity_check,
    remainder_R4,
    remainder_R6,
    sample_energies,
)
from .errors import BudgetError, ConfigurationError
from .estimates import (
    SweepRecord,
    apriori_growth_experiment,
    bilinear_sweep,
    linear_window_experiment,
    random_block_field,
    random_interval_field,
    rough_random_field,
    smoothing_maximal_sweep,
    strichartz_sweep,
    summarize_records,
)
from .solver import FlowRecord, SolverConfig, scaling_equivariance_check, solve, step
from .spectral import (
    BernsteinRatio,
    GridSpec,
    LPPartition,
    RealField,
    SpectralField,
    bernstein_ratio,
    check_wraparound,
    dealias_mask,
    dft,
    hermitian_residual,
    idft,
    l2_norm,
    lp_norm,
    lp_project,
    sobolev_norm,
    symbol_norm,
    wraparound_limit,
)
from .symbols import B4Evaluator, SymbolA, cubic_sum_factorization_residual, make_aN
from .variation import (
    PathSample,
    XsmDiagnostic,
    airy_pullback,
    airy_pushforward,
    project_flow_to_blocks,
    variation_norm,
    xsm_diagnostic,
)
