"""Desk-scale solution machinery for quasilinear waves on a log-cylinder:
weighted b-Sobolev calculus, explicit smoothing operators, tame-estimate
audits, Mellin resonance analysis, a causal forward solver and a Nash-Moser
iteration engine."""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DataError,
    DomainError,
    ScheduleError,
    SolverError,
    TamewaveError,
)
from .grid import (
    ExpansionDecomposition,
    Field,
    Grid,
    SobolevIndex,
    actual_support_floor,
    boundary_cutoff,
    boundary_taper,
    bsobolev_norm,
    field,
    field_from_function,
    fourier_roundtrip,
    l2_norm,
    load_field,
    make_grid,
    save_field,
    weight_apply,
    zero_field,
)
from .linsolve import (
    LinearOpSpec,
    NonlinearTerm,
    ProblemSpec,
    apply_operator,
    audit_solution_tame,
    constant_operator,
    discrete_residual,
    linearize,
    pulse_forcing,
    residual,
    solve_forward,
    xnorm,
)
from .mellin import (
    ModelOperatorSpec,
    ResonanceSet,
    aitken_constant,
    extract_expansion,
    find_resonances,
    mode_decay_rate,
    mode_values,
    normal_symbol,
    spectral_gap,
    tail_decay_slope,
)
from .nashmoser import (
    IterationTrace,
    NashMoserConfig,
    NashMoserResult,
    lambda_limit,
    lambda_shift,
    required_regularity,
    run,
    schedule_theta,
    verify_at_resolution,
)
from .smoothing import (
    Mollifier,
    SmoothingSchedule,
    apply_smoothing,
    apply_smoothing_weighted,
    audit_smoothing,
    band_limited_noise,
    measure_support_enlargement,
)
from .tame import (
    SmoothFunctionSpec,
    TameConstantReport,
    audit_tame,
    compose_smooth,
    product,
    product_dealiased,
    reciprocal,
)

__version__ = "0.1.0"
