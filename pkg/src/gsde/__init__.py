"""Simulation and verification toolkit for SDEs with volatility uncertainty.

The package covers the loop from model to certificate: define an SDE whose
noise has uncertain covariance (an uncertainty set), simulate it under
families of admissible volatility scenarios, estimate worst-case
expectations and event capacities over the family, and check Lyapunov-based
stability conditions by region sampling.
"""

from .casebook import (
    CaseBundle,
    Claim,
    SimProtocol,
    example1_linear,
    example2_lorenz,
    example3_oscillator,
    get_case,
)
from .diagnostics import (
    CapacityEstimate,
    ConvergenceReport,
    SublinearEstimate,
    UpcrossingCheck,
    capacity,
    convergence_report,
    sublinear_expectation,
    upcrossing_inequality_check,
    upcrossings,
)
from .engine import (
    GSdeSystem,
    Trajectory,
    simulate,
    simulate_batch,
    sphere_sampler,
    trial_entropy,
)
from .errors import ConfigurationError, DomainError, GsdeError, NumericalError
from .gfunc import UncertaintySet, c_constant_matrix, g_matrix, g_scalar, gamma_bar
from .lyapunov import (
    ExponentialCertificate,
    GeneratorReport,
    LyapunovSpec,
    ShellRegion,
    check_generator_bound,
    check_radial_unboundedness,
    estimate_one_sided_lipschitz,
    evaluate_generator,
    exponential_certificate,
    gain_rule_one_sided,
)
from .scenarios import (
    ScenarioFamily,
    VolatilityScenario,
    generate_family,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityEstimate",
    "CaseBundle",
    "Claim",
    "ConfigurationError",
    "ConvergenceReport",
    "DomainError",
    "ExponentialCertificate",
    "GSdeSystem",
    "GeneratorReport",
    "GsdeError",
    "LyapunovSpec",
    "NumericalError",
    "ScenarioFamily",
    "ShellRegion",
    "SimProtocol",
    "SublinearEstimate",
    "Trajectory",
    "UncertaintySet",
    "UpcrossingCheck",
    "VolatilityScenario",
    "c_constant_matrix",
    "capacity",
    "check_generator_bound",
    "check_radial_unboundedness",
    "convergence_report",
    "estimate_one_sided_lipschitz",
    "evaluate_generator",
    "example1_linear",
    "example2_lorenz",
    "example3_oscillator",
    "exponential_certificate",
    "g_matrix",
    "g_scalar",
    "gain_rule_one_sided",
    "gamma_bar",
    "generate_family",
    "get_case",
    "simulate",
    "simulate_batch",
    "sphere_sampler",
    "sublinear_expectation",
    "trial_entropy",
    "upcrossing_inequality_check",
    "upcrossings",
    "validate_scenario",
]
