"""QUBO/QAOA toolkit for multi-beam satellite time-frequency slot assignment."""

from beamqopt.errors import BeamqoptError, CapacityError, ConfigurationError, DomainError
from beamqopt.scenario import (
    Flow,
    ResourceUnit,
    Scenario,
    TrafficProfile,
    generate_scenario,
    rescale_scenario,
)
from beamqopt.model import FeasibilityReport, Schedule, check_feasibility, repair_schedule, weighted_throughput
from beamqopt.qubo import QuboModel, VariableIndex, build_qubo, decode, default_lambdas, encode, energy, slack_bit_count
from beamqopt.classical import SolveResult, solve_exact, solve_greedy

__version__ = "0.1.0"

__all__ = [
    "BeamqoptError",
    "CapacityError",
    "ConfigurationError",
    "DomainError",
    "FeasibilityReport",
    "Flow",
    "QuboModel",
    "ResourceUnit",
    "Scenario",
    "Schedule",
    "SolveResult",
    "TrafficProfile",
    "VariableIndex",
    "build_qubo",
    "check_feasibility",
    "decode",
    "default_lambdas",
    "encode",
    "energy",
    "generate_scenario",
    "repair_schedule",
    "rescale_scenario",
    "slack_bit_count",
    "solve_exact",
    "solve_greedy",
    "weighted_throughput",
]
