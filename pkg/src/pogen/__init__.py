"""Bit-level PDR/IC3 model checking with pluggable proof-obligation
generalization strategies."""

from .circuit import Circuit, parse_aiger, unparse_aiger
from .formats import (
    Caps,
    ConstraintMode,
    TransitionSystem,
    circuit_to_ts,
    from_cnf,
    load_transition_system,
    parse_dimspec,
    reverse,
)
from .logic import Clause, Cnf, Cube
from .pogp import (
    GenResult,
    PogpInstance,
    brute_force_oracle,
    performance,
    reduction_ratio,
    verify_po,
)
from .strategies import check_applicable, get_strategy, strategy_names

__version__ = "0.1.0"

__all__ = [
    "Caps",
    "Circuit",
    "Clause",
    "Cnf",
    "ConstraintMode",
    "Cube",
    "GenResult",
    "PogpInstance",
    "TransitionSystem",
    "brute_force_oracle",
    "check_applicable",
    "circuit_to_ts",
    "from_cnf",
    "get_strategy",
    "load_transition_system",
    "parse_aiger",
    "parse_dimspec",
    "performance",
    "reduction_ratio",
    "reverse",
    "strategy_names",
    "unparse_aiger",
    "verify_po",
]
