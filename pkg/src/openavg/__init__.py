"""Quantized average consensus on open dynamic directed networks.

Agents hold integer mass pairs, split them into unit tokens every step,
and route the tokens over time-varying directed links while nodes arrive
and depart. The library provides the per-node protocol, a deterministic
round engine, exact conservation and convergence analysis, scenario
loading and validation, and trace reporting.
"""

from .agent import (
    AgentState,
    MassMessage,
    SplitResult,
    StepOutcome,
    arrive,
    depart_step,
    init_active,
    quantized_estimate,
    receive,
    remaining_step,
    split_mass,
)
from .analysis import (
    AuditRow,
    ConvergenceReport,
    ErrorValue,
    conservation_audit,
    consensus_error,
    convergence_time,
    true_average,
)
from .engine import (
    EngineInvariantError,
    NodeVars,
    RoundRecord,
    Violation,
    draw_topology,
    run,
)
from .graphs import (
    DigraphInstance,
    MembershipSets,
    NodeId,
    directed_cycle,
    generate_instance_family,
    is_strongly_connected,
    membership_sets,
    out_neighbors,
    random_out_degree_instance,
    remaining_out_neighbors,
    strongly_connected_components,
    union_digraph,
)
from .scenario import (
    ChurnEvent,
    ChurnInterval,
    ExplicitChurn,
    ExplicitStates,
    ExplicitTopology,
    Finding,
    RandomFamilyTopology,
    Scenario,
    ScenarioFormatError,
    ScenarioValidationError,
    StochasticChurn,
    UniformIntStates,
    ValidationReport,
    load_scenario,
    parse_scenario,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "AuditRow",
    "ChurnEvent",
    "ChurnInterval",
    "ConvergenceReport",
    "DigraphInstance",
    "EngineInvariantError",
    "ErrorValue",
    "ExplicitChurn",
    "ExplicitStates",
    "ExplicitTopology",
    "Finding",
    "MassMessage",
    "MembershipSets",
    "NodeId",
    "NodeVars",
    "RandomFamilyTopology",
    "RoundRecord",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioValidationError",
    "SplitResult",
    "StepOutcome",
    "StochasticChurn",
    "UniformIntStates",
    "ValidationReport",
    "Violation",
    "arrive",
    "conservation_audit",
    "consensus_error",
    "convergence_time",
    "depart_step",
    "directed_cycle",
    "draw_topology",
    "generate_instance_family",
    "init_active",
    "is_strongly_connected",
    "load_scenario",
    "membership_sets",
    "out_neighbors",
    "parse_scenario",
    "quantized_estimate",
    "random_out_degree_instance",
    "receive",
    "remaining_out_neighbors",
    "remaining_step",
    "run",
    "split_mass",
    "strongly_connected_components",
    "true_average",
    "union_digraph",
    "validate_scenario",
]
