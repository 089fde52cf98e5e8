"""Exact planning of payload test campaigns.

Pack tests into the fewest payload configurations subject to
exact-cardinality thermal constraints, then sequence the configurations
so equipment re-activations stay at a minimum.  The heavy lifting lives
in solver/strategy; instance and plan cover the data model and
persistence; bench and cli drive experiments.
"""

from .instance import Instance, InstanceError, Violation, load_instance, merge_identical_tests, parse_instance, save_instance, serialize_instance, validate
from .plan import ObjectiveValue, Plan, PlanError, count_switches, expand_plan, load_plan, objective, parse_plan, save_plan, serialize_plan, verify
from .solver import SolveOptions, SolveOutcome, SolverError, solve, solve_packing, solve_sequencing
from .strategy import MultiResult, StageReport, greedy_descent, multi_stage

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "InstanceError",
    "Violation",
    "load_instance",
    "merge_identical_tests",
    "parse_instance",
    "save_instance",
    "serialize_instance",
    "validate",
    "ObjectiveValue",
    "Plan",
    "PlanError",
    "count_switches",
    "expand_plan",
    "load_plan",
    "objective",
    "parse_plan",
    "save_plan",
    "serialize_plan",
    "verify",
    "SolveOptions",
    "SolveOutcome",
    "SolverError",
    "solve",
    "solve_packing",
    "solve_sequencing",
    "MultiResult",
    "StageReport",
    "greedy_descent",
    "multi_stage",
    "__version__",
]
