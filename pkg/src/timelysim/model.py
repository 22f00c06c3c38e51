"""Domain types shared by every other module.

Conventions used throughout the package:
  - slots within a period are numbered 1..T; a packet delivered in slot t
    meets its deadline iff t <= tau_n
  - client ids are 1-based and every sort breaks ties by ascending id
  - timely-throughput requirements q_n and probabilities are exact Fractions
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# Sentinel for an intentionally idle slot in a SlotAllocation. Client ids are
# 1-based so 0 can never collide.
IDLE = 0

FIXED_RATE = "fixed-rate"
RATE_ADAPTATION = "rate-adaptation"


@dataclass(frozen=True)
class ClientSpec:
    """One client's QoS contract.

    q is packets per period (0 < q <= 1), tau the deadline in slots, arrival
    an arrival-process definition from the traffic module, and channel_params
    a mapping from channel-state label to either a reliability (fixed-rate
    mode, Fraction in (0,1]) or a service time in slots (rate-adaptation).
    """

    id: int
    q: Fraction
    tau: int
    arrival: object
    channel_params: dict


@dataclass(frozen=True)
class SystemConfig:
    clients: tuple
    T: int
    mode: str
    channel_model: object
    horizon_periods: int
    seed: int
    nonrt_client: bool = False

    @property
    def n_clients(self):
        return len(self.clients)

    def client(self, client_id):
        return self.clients[client_id - 1]


@dataclass(frozen=True)
class PeriodSnapshot:
    """Everything a policy sees at a period start.

    debts holds the post-accrual values of whichever ledger variant the
    policy declares; arrivals is the sorted tuple of client ids with a
    packet this period.
    """

    k: int
    channel_state: str
    arrivals: tuple
    debts: dict


@dataclass(frozen=True)
class PriorityList:
    order: tuple


@dataclass(frozen=True)
class OrderedSubset:
    """Chosen subset, already in execution (earliest-deadline-first) order."""

    order: tuple


@dataclass(frozen=True)
class SlotAllocation:
    """alloc[t-1] names the client pre-assigned to slot t, or IDLE."""

    alloc: tuple


@dataclass(frozen=True)
class Diagnostic:
    client_id: object  # int or None for system-level findings
    field: str
    rule: str
    severity: str = "error"

    def __str__(self):
        where = f"client {self.client_id}" if self.client_id is not None else "system"
        return f"[{self.severity}] {where}: {self.field}: {self.rule}"


def schedule_violations(schedule, arrivals):
    """Structural checks shared by tests and defensive engine paths."""
    problems = []
    arrivals = set(arrivals)
    if isinstance(schedule, (PriorityList, OrderedSubset)):
        order = schedule.order
        if len(set(order)) != len(order):
            problems.append("duplicate client id in schedule")
        for n in order:
            if n not in arrivals:
                problems.append(f"client {n} scheduled without an arrival")
    elif isinstance(schedule, SlotAllocation):
        for n in schedule.alloc:
            if n != IDLE and n not in arrivals:
                problems.append(f"client {n} allocated without an arrival")
    else:
        problems.append(f"unknown schedule type {type(schedule).__name__}")
    return problems


def validate(config):
    """Check every type invariant; returns diagnostics instead of raising.

    An empty list means the config is well formed. Unservable clients in
    rate-adaptation mode (no channel state with s <= tau) yield a warning
    diagnostic, not an error: loaders should proceed but surface it.
    """
    out = []

    def err(client_id, fld, rule, severity="error"):
        out.append(Diagnostic(client_id, fld, rule, severity))

    if config.mode not in (FIXED_RATE, RATE_ADAPTATION):
        err(None, "mode", f"unknown mode {config.mode!r}")
        return out
    if len(config.clients) < 1:
        err(None, "clients", "at least one client required")
    if config.T < 1:
        err(None, "T", "period length must be >= 1 slot")
    if config.horizon_periods < 1:
        err(None, "horizon_periods", "horizon must be >= 1 period")

    ids = [c.id for c in config.clients]
    if ids != list(range(1, len(ids) + 1)):
        err(None, "clients", "client ids must be exactly 1..N in order")

    for c in config.clients:
        if not (0 < c.q <= 1):
            err(c.id, "q", "q must be positive and at most 1 packet/period")
        if not (1 <= c.tau <= config.T):
            rule = ("tau exceeds period length" if c.tau > config.T
                    else "tau must be at least 1 slot")
            err(c.id, "tau", rule)
        for rule in getattr(c.arrival, "problems", lambda: [])():
            err(c.id, "arrival", rule)

        labels = config.channel_model.client_state_labels(c.id)
        missing = [s for s in labels if s not in c.channel_params]
        if missing:
            err(c.id, "channel_params", f"no entry for channel state(s) {missing}")
            continue
        if config.mode == FIXED_RATE:
            for s in labels:
                p = c.channel_params[s]
                if not (0 < p <= 1):
                    err(c.id, "channel_params", f"reliability for state {s!r} not in (0,1]")
        else:
            for s in labels:
                st = c.channel_params[s]
                if not (isinstance(st, int) and 1 <= st <= config.T):
                    err(c.id, "channel_params",
                        f"service time for state {s!r} must be an int in 1..T")
            times = [c.channel_params[s] for s in labels]
            if all(isinstance(st, int) for st in times) and min(times) > c.tau:
                err(c.id, "channel_params",
                    "unservable: every channel state needs more slots than tau",
                    severity="warning")

    for rule in getattr(config.channel_model, "problems", lambda: [])():
        err(None, "channel_model", rule)
    return out


class MetricsSeries:
    """Per-period time series recorded by the engine.

    Debt values are kept as integer numerators over fixed per-client
    denominators so every recorded value is exact; the float views are for
    reporting. Values are as of the period's end (post settlement).
    """

    def __init__(self, client_ids, horizon, dens):
        n = len(client_ids)
        self.client_ids = tuple(client_ids)
        self.horizon = horizon
        # dens: dict with keys "r1", "r2", "r3" -> tuple of per-client denominators
        self.dens = {k: tuple(int(d) for d in v) for k, v in dens.items()}
        self.r1_num = np.zeros((horizon, n), dtype=np.int64)
        self.r2_num = np.zeros((horizon, n), dtype=np.int64)
        self.r3_num = np.zeros((horizon, n), dtype=np.int64)
        self.delivered = np.zeros((horizon, n), dtype=np.uint8)
        self.arrived = np.zeros((horizon, n), dtype=np.uint8)
        self.slots_spent = np.zeros((horizon, n), dtype=np.int32)
        self.nonrt_delivered = np.zeros(horizon, dtype=np.int64)
        self.channel_labels = []  # one tuple of per-client labels per period

    def record(self, k, r1, r2, r3, delivered, arrived, slots, labels, nonrt):
        self.r1_num[k] = r1
        self.r2_num[k] = r2
        self.r3_num[k] = r3
        self.delivered[k] = delivered
        self.arrived[k] = arrived
        self.slots_spent[k] = slots
        self.channel_labels.append(labels)
        self.nonrt_delivered[k] = nonrt

    def __len__(self):
        return len(self.channel_labels)

    def debt(self, variant, k, client_id):
        """Exact recorded debt at the end of period k."""
        i = self.client_ids.index(client_id)
        num = {"r1": self.r1_num, "r2": self.r2_num, "r3": self.r3_num}[variant]
        return Fraction(int(num[k, i]), self.dens[variant][i])

    def debt_floats(self, variant):
        num = {"r1": self.r1_num, "r2": self.r2_num, "r3": self.r3_num}[variant]
        return num / np.array(self.dens[variant], dtype=np.float64)

    @property
    def delivered_cumulative(self):
        return np.cumsum(self.delivered.astype(np.int64), axis=0)

    @property
    def arrived_cumulative(self):
        return np.cumsum(self.arrived.astype(np.int64), axis=0)

    def total_positive_debt(self):
        """Sum of positive delivery debts per period (float view)."""
        pos = np.maximum(self.r3_num, 0)
        return (pos / np.array(self.dens["r3"], dtype=np.float64)).sum(axis=1)

    def delivery_ratios(self):
        """d_n so far over arrivals so far, NaN until the first arrival."""
        arr = self.arrived_cumulative.astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(arr > 0, self.delivered_cumulative / arr, np.nan)
