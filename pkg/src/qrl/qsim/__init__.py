"""Dense quantum simulation: states, oracles, Grover search and amplitude amplification."""

from .amplification import (
    RawPerceptOracle,
    action_distribution,
    analytic_fidelity,
    brute_force_action_distribution,
    build_init_reflector,
    build_raw_percept_oracle,
    build_reward_reflector,
    initial_state,
    optimal_iterations,
    qaa,
    target_state,
)
from .operators import (
    Composed,
    DenseOperator,
    DiagonalOperator,
    IndexIsometry,
    Operator,
    PermutationOperator,
    operator_distance,
)
from .oracles import OracleSpec, QuantumChannel, build_oracle, tabulate
from .search import (
    grover_iterations,
    grover_search,
    grover_state,
    grover_success_probability,
    max_reward_search,
    winner_probability,
)
from .states import DensityOperator, Layout, StateVector, measure, project, qubit, register

__all__ = [
    "RawPerceptOracle", "action_distribution", "analytic_fidelity", "brute_force_action_distribution",
    "build_init_reflector", "build_raw_percept_oracle", "build_reward_reflector", "initial_state",
    "optimal_iterations", "qaa", "target_state", "Composed", "DenseOperator", "DiagonalOperator",
    "IndexIsometry", "Operator", "PermutationOperator", "operator_distance", "OracleSpec",
    "QuantumChannel", "build_oracle", "tabulate", "grover_iterations", "grover_search",
    "grover_state", "grover_success_probability", "max_reward_search", "winner_probability",
    "DensityOperator", "Layout", "StateVector", "measure", "project", "qubit", "register",
]
