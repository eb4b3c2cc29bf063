"""psi-Hilfer fractional delay equations: operators, Picard solver and stability certificates."""

from .calculus import power_rule_oracle, psi_hilfer_derivative, rl_integral, roundtrip_residual
from .kernels import BACKEND
from .scenario import Scenario, ScenarioError, catalog_names, load_catalog, parse_scenario, parse_scenarios
from .solver import DelayProblem, DivergenceError, InitialTermMode, SolveReport, apply_omega, residual, solve_fixed_point
from .stability import (
    StabilityCertificate,
    certify_uh,
    certify_uhr,
    classical_bound,
    estimate_K,
    hadamard_bound,
    verify_bound,
)
from .types import (
    FracOrder,
    GridMismatchError,
    Path,
    PsiMap,
    TimeGrid,
    WeightFn,
    exp_psi,
    identity_psi,
    log_psi,
    power_psi,
    psi_from_key,
    uniform_distance,
    weighted_distance,
)

__version__ = "0.1.0"
