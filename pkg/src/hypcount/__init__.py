"""Counting negative eigenvalues of radial Schrodinger operators on
asymptotically hyperbolic model ends by separation of variables and
Prufer-angle zero counting."""

from .boundary_spectrum import (
    BoundarySpectrum,
    MultiplicityCount,
    cumulative_multiplicity,
    sphere_mode,
    weyl_estimate,
)
from .potential_model import (
    BoundaryCondition,
    CustomPotential,
    Family,
    Perturbation,
    PotentialSpec,
    RadialProblem,
    auto_rho0,
    eval_Q,
    eval_V,
    iter_log,
)
from .radial_oscillation import (
    Certified,
    FixedWindow,
    prufer_count,
    solve_cauchy,
    transform_for,
    truncation_interval,
)
from .tail_certificates import certify_tail_positive, olver_envelopes, total_variation_F
from .mode_aggregation import (
    CountResult,
    assemble_count,
    cutoff_estimate,
    enumerate_count,
    zeta_breakpoints,
)
from .discrete_oracle import (
    TridiagonalOperator,
    bracketing_demo,
    dense_count,
    fd_tridiagonal,
    full_oracle_count,
    inertia_below,
    richardson_eigenvalues,
)
from .experiment_harness import (
    ExperimentConfig,
    SweepRow,
    fit_iterated_log_slope,
    render_svg,
    run_sweep,
)

__version__ = "0.1.0"
