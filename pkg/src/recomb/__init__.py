"""Exact engine for recombination dynamics on partition lattices.

The package computes closed-form solution coefficients for the
deterministic recombination flow, the Markov generator of the underlying
partition-valued jump process, and the induced measure dynamics on finite
product spaces, with every analytic object cross-checked against
independent numeric and stochastic oracles.
"""
from .algebra import (
    IncidenceFunction,
    NotInvertibleError,
    convolve,
    delta,
    invert_chain_sum,
    invert_recursive,
    mobius,
    zeta,
)
from .dynamics import (
    ConvergenceReport,
    ProbabilityTensor,
    TrajectoryRecord,
    assemble_omega,
    convergence_report,
    integrate_a_ode,
    integrate_measure_ode,
    random_tensor,
    recombinator,
    simulate_partitioning,
)
from .lattice import (
    Lattice,
    LatticeKind,
    Partition,
    chains,
    enumerate_lattice,
    format_partition,
    parse_partition,
    validate_structure,
)
from .rates import (
    Genericity,
    GenericityReport,
    RateFileError,
    RateSystem,
    format_rate_file,
    parse_rate_file,
    random_rate_system,
)
from .solver import (
    DegenerateRatesError,
    ExpPolySolution,
    GeneratorMatrix,
    Mode,
    ThetaFamily,
    coefficients_generic,
    e0,
    eta,
    markov_generator_direct,
    markov_generator_via_theta,
    mode_decomposition,
    solve_universal,
    theta,
)
from .verify import VerificationReport, run_verification

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport",
    "DegenerateRatesError",
    "ExpPolySolution",
    "Genericity",
    "GenericityReport",
    "GeneratorMatrix",
    "IncidenceFunction",
    "Lattice",
    "LatticeKind",
    "Mode",
    "NotInvertibleError",
    "Partition",
    "ProbabilityTensor",
    "RateFileError",
    "RateSystem",
    "ThetaFamily",
    "TrajectoryRecord",
    "VerificationReport",
    "assemble_omega",
    "chains",
    "coefficients_generic",
    "convergence_report",
    "convolve",
    "delta",
    "e0",
    "enumerate_lattice",
    "eta",
    "format_partition",
    "format_rate_file",
    "integrate_a_ode",
    "integrate_measure_ode",
    "invert_chain_sum",
    "invert_recursive",
    "markov_generator_direct",
    "markov_generator_via_theta",
    "mobius",
    "mode_decomposition",
    "parse_partition",
    "parse_rate_file",
    "random_rate_system",
    "random_tensor",
    "recombinator",
    "run_verification",
    "simulate_partitioning",
    "solve_universal",
    "theta",
    "validate_structure",
    "zeta",
]
