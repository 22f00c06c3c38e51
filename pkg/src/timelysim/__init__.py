"""Deterministic slotted-time simulator and policy library for scheduling
deadline-constrained real-time traffic over unreliable wireless links.

The public surface is re-exported here; see the README for a tour.
"""

from .model import (
    ClientSpec,
    SystemConfig,
    PeriodSnapshot,
    PriorityList,
    OrderedSubset,
    SlotAllocation,
    MetricsSeries,
    Diagnostic,
    IDLE,
    validate,
)
from .traffic import Periodic, MarkovVBR, next_arrivals, arrival_frequency
from .channel import Static, PerClientTwoState, GlobalMarkov, average_reliability
from .debts import DebtLedger
from .engine import run_simulation
from .analysis import (
    exact_payoff,
    brute_force_best_ordering,
    knapsack_oracle,
    feasibility_test,
    fulfillment_check,
)
from .presets import PRESETS, build_preset

__version__ = "0.1.0"

__all__ = [
    "ClientSpec",
    "SystemConfig",
    "PeriodSnapshot",
    "PriorityList",
    "OrderedSubset",
    "SlotAllocation",
    "MetricsSeries",
    "Diagnostic",
    "IDLE",
    "validate",
    "Periodic",
    "MarkovVBR",
    "next_arrivals",
    "arrival_frequency",
    "Static",
    "PerClientTwoState",
    "GlobalMarkov",
    "average_reliability",
    "DebtLedger",
    "run_simulation",
    "exact_payoff",
    "brute_force_best_ordering",
    "knapsack_oracle",
    "feasibility_test",
    "fulfillment_check",
    "PRESETS",
    "build_preset",
    "__version__",
]
