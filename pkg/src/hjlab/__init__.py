"""hjlab: a finite-difference laboratory for gradient-absorption diffusion.

Solves u_t - nu*div(|grad u|^(p-2) grad u) + gamma*|u|^(lam-1)u|grad u|^q = 0
on a box with a monotone upwind Hamiltonian and explicit CFL-adaptive time
stepping, and verifies the decay, smoothing, energy and universal-bound
estimates that govern such equations.
"""

from .data import (
    FromFile,
    Gaussian,
    Indicator,
    InitialDatum,
    MollifiedDirac,
    PowerTail,
    sample,
    theta_k,
    truncate,
)
from .exponents import (
    ExponentSpec,
    bootstrap_bound,
    exponent_table,
    iteration_constant,
    sigma_varpi,
    simulate_recursion,
)
from .integrate import RunResult, SolverAbort, StabilityError, StepControl, run, stable_dt, step
from .ledger import (
    DecayFit,
    DegenerateFitError,
    EnergyLedger,
    NormTrace,
    far_field_check,
    fit_decay,
    fit_loglog,
    gradient_bound_check,
    lr_norm,
    universal_bound_spread,
    update_ledger,
)
from .operators import (
    OperatorWorkspace,
    absorption,
    laplacian,
    p_laplacian,
    upwind_hamiltonian,
)
from .problem import (
    DomainMode,
    DomainSpec,
    Field,
    Grid,
    ProblemSpec,
    ValidationReport,
    make_grid,
    validate_spec,
)

__version__ = "0.1.0"

__all__ = [
    "DomainMode",
    "DomainSpec",
    "Field",
    "Grid",
    "ProblemSpec",
    "ValidationReport",
    "make_grid",
    "validate_spec",
    "OperatorWorkspace",
    "laplacian",
    "p_laplacian",
    "upwind_hamiltonian",
    "absorption",
    "StepControl",
    "RunResult",
    "SolverAbort",
    "StabilityError",
    "stable_dt",
    "step",
    "run",
    "InitialDatum",
    "Gaussian",
    "PowerTail",
    "MollifiedDirac",
    "Indicator",
    "FromFile",
    "sample",
    "truncate",
    "theta_k",
    "lr_norm",
    "NormTrace",
    "EnergyLedger",
    "update_ledger",
    "DecayFit",
    "DegenerateFitError",
    "fit_decay",
    "fit_loglog",
    "gradient_bound_check",
    "far_field_check",
    "universal_bound_spread",
    "ExponentSpec",
    "sigma_varpi",
    "bootstrap_bound",
    "simulate_recursion",
    "iteration_constant",
    "exponent_table",
    "__version__",
]
