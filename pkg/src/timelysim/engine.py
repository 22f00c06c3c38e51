"""Period execution and the multi-period simulation loop.

One period: advance the channel, draw the arrival set, accrue all three
ledgers, hand the policy a snapshot of its own variant, execute the schedule
slot by slot, settle, record. Undelivered packets vanish at the period
boundary; there is no carryover.

Determinism: four independent child streams are derived from the master
seed (arrivals, channel, transmissions, policy randomness), and each
consumes a fixed number of draws per period regardless of policy decisions.
Two policies run against the same seed therefore see identical arrival and
channel trajectories and identical per-slot transmission luck, which is
what makes paired comparisons low-variance.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .debts import DebtLedger
from .markov import as_fraction
from .model import (
    FIXED_RATE,
    IDLE,
    MetricsSeries,
    OrderedSubset,
    PeriodSnapshot,
    PriorityList,
    RATE_ADAPTATION,
    SlotAllocation,
    schedule_violations,
    validate,
)
from .policies import PeriodContext, Policy, derive, make_policy
from .traffic import init_traffic, next_arrivals


def rng_streams(seed):
    """(arrival, channel, transmission, policy) generators for one run."""
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


@dataclass
class PeriodOutcome:
    """Per-client results of one executed period, aligned with client ids."""

    slots: list
    delivered: list
    idle_slots: int


class RunState:
    """Mutable state threaded through the period executors.

    The per-period fields (channel values, transmission draws) are set by
    run_simulation before each execute call.
    """

    def __init__(self, config):
        self.config = config
        self.T = config.T
        self.client_ids = tuple(c.id for c in config.clients)
        self.index = {cid: i for i, cid in enumerate(self.client_ids)}
        self.taus = {c.id: c.tau for c in config.clients}
        self.values = {}  # client id -> current reliability (float) or service time
        self.tx_u = None  # T uniforms for the current period

    def outcome(self):
        n = len(self.client_ids)
        return PeriodOutcome([0] * n, [False] * n, 0)


def run_period_fixed_rate(state, snapshot, schedule):
    """Execute one fixed-rate period: one Bernoulli transmission per slot.

    PriorityList: each slot serves the highest-priority client whose packet
    is live (arrived, undelivered, t <= tau). SlotAllocation: serve
    alloc[t] if live, else fall back to the live client with the largest
    positive snapshot debt, else idle.
    """
    out = state.outcome()
    taus = state.taus
    T = state.T
    u = state.tx_u
    idx = state.index
    delivered = out.delivered

    if isinstance(schedule, PriorityList):
        order = schedule.order
        head = 0
        for t in range(1, T + 1):
            # skipped heads never become eligible again: delivery is final
            # and deadlines only recede
            while head < len(order) and (
                delivered[idx[order[head]]] or taus[order[head]] < t
            ):
                head += 1
            if head == len(order):
                out.idle_slots += T - t + 1
                break
            n = order[head]
            out.slots[idx[n]] += 1
            if u[t - 1] < state.values[n]:
                delivered[idx[n]] = True
                head += 1
        return out

    if isinstance(schedule, SlotAllocation):
        fallback = sorted(
            (n for n in snapshot.arrivals if snapshot.debts[n] > 0),
            key=lambda n: (-snapshot.debts[n], n),
        )
        arrived = set(snapshot.arrivals)
        for t in range(1, T + 1):
            n = schedule.alloc[t - 1]
            target = None
            if n != IDLE and n in arrived and not delivered[idx[n]] and taus[n] >= t:
                target = n
            else:
                for m in fallback:
                    if not delivered[idx[m]] and taus[m] >= t:
                        target = m
                        break
            if target is None:
                out.idle_slots += 1
                continue
            out.slots[idx[target]] += 1
            if u[t - 1] < state.values[target]:
                delivered[idx[target]] = True
        return out

    raise TypeError(f"fixed-rate mode cannot execute {type(schedule).__name__}")


def run_period_rate_adaptation(state, snapshot, schedule):
    """Execute one rate-adaptation period: error-free transmissions of
    s_{c,n} slots each, back to back.

    OrderedSubset (the knapsack output) must meet every member's deadline;
    a violation raises, since the policy guarantees feasibility. A
    PriorityList (the baselines) is walked greedily instead: a head whose
    packet cannot finish by its deadline still occupies the transmitter
    until the packet expires, mirroring a scheduler that does not look at
    service times.
    """
    out = state.outcome()
    taus = state.taus
    T = state.T
    idx = state.index

    if isinstance(schedule, OrderedSubset):
        t_cur = 1
        for n in schedule.order:
            s = state.values[n]
            finish = t_cur + s - 1
            if finish > taus[n] or finish > T:
                raise RuntimeError(
                    f"infeasible schedule: client {n} would finish at slot "
                    f"{finish}, past its deadline {taus[n]}"
                )
            out.slots[idx[n]] = s
            out.delivered[idx[n]] = True
            t_cur = finish + 1
        out.idle_slots = T - (t_cur - 1)
        return out

    if isinstance(schedule, PriorityList):
        t_cur = 1
        for n in schedule.order:
            if t_cur > T:
                break
            if taus[n] < t_cur:
                continue
            finish = t_cur + state.values[n] - 1
            if finish <= taus[n]:
                out.slots[idx[n]] = state.values[n]
                out.delivered[idx[n]] = True
                t_cur = finish + 1
            else:
                # doomed start: slots are spent until the packet expires
                out.slots[idx[n]] = taus[n] - t_cur + 1
                t_cur = taus[n] + 1
        out.idle_slots = T - (t_cur - 1)
        return out

    raise TypeError(f"rate-adaptation mode cannot execute {type(schedule).__name__}")


def _build_ledgers(config, derived):
    ids = [c.id for c in config.clients]
    qs = [c.q for c in config.clients]
    pbars = [derived.pbars[c.id] for c in config.clients]
    time_varying = config.mode == FIXED_RATE and not derived.channel_static
    return {
        "r1": DebtLedger.time_based(ids, qs, pbars),
        "r2": DebtLedger.weighted_delivery(ids, qs, pbars, time_varying=time_varying),
        "r3": DebtLedger.delivery(ids, qs),
    }


def run_simulation(config, policy, *, horizon=None, seed=None):
    """Run one policy for `horizon` periods; returns the MetricsSeries.

    policy is a registry name or a prepared Policy instance. horizon and
    seed default to the config's. Raises ValueError on validation errors or
    a policy/mode mismatch; period-level execution errors are re-raised
    with the period index attached.
    """
    problems = [d for d in validate(config) if d.severity == "error"]
    if problems:
        listing = "; ".join(str(d) for d in problems)
        raise ValueError(f"invalid config: {listing}")

    derived = derive(config)
    if isinstance(policy, str):
        policy = make_policy(policy, config, derived)
    elif isinstance(policy, type) and issubclass(policy, Policy):
        policy = policy(config, derived)
    mismatches = policy.compatibility_problems(config)
    if mismatches:
        raise ValueError("; ".join(mismatches))

    K = config.horizon_periods if horizon is None else horizon
    master = config.seed if seed is None else seed
    arrival_rng, channel_rng, tx_rng, policy_rng = rng_streams(master)

    traffic = init_traffic(config.clients, arrival_rng)
    channel = ChannelState(config.channel_model, config.clients, channel_rng)
    ledgers = _build_ledgers(config, derived)
    state = RunState(config)

    # per-client channel values by state label; exact for policies, float
    # for the per-slot Bernoulli compare
    frac_values = {
        c.id: {lab: as_fraction(c.channel_params[lab])
               for lab in config.channel_model.client_state_labels(c.id)}
        for c in config.clients
    }
    if config.mode == FIXED_RATE:
        exec_values = {
            cid: {lab: float(v) for lab, v in by_label.items()}
            for cid, by_label in frac_values.items()
        }
    else:
        exec_values = {
            cid: {lab: int(v) for lab, v in by_label.items()}
            for cid, by_label in frac_values.items()
        }

    metrics = MetricsSeries(
        state.client_ids, K, {name: led.dens for name, led in ledgers.items()}
    )
    variant = policy.debt_variant
    execute = (
        run_period_fixed_rate if config.mode == FIXED_RATE
        else run_period_rate_adaptation
    )

    for k in range(K):
        channel.advance(channel_rng)
        labels = channel.labels()
        compact = channel.compact()
        arrivals = next_arrivals(traffic, k, arrival_rng)
        state.tx_u = tx_rng.random(config.T)

        for led in ledgers.values():
            led.accrue()

        snapshot = PeriodSnapshot(k, compact, arrivals, ledgers[variant].values())
        by_client = dict(zip(state.client_ids, labels))
        ctx_values = {cid: frac_values[cid][lab] for cid, lab in by_client.items()}
        if config.mode == RATE_ADAPTATION:
            ctx_values = {cid: int(v) for cid, v in ctx_values.items()}
        state.values = {cid: exec_values[cid][lab] for cid, lab in by_client.items()}

        try:
            schedule = policy.decide(snapshot, PeriodContext(ctx_values, policy_rng))
            bad = schedule_violations(schedule, arrivals)
            if bad:
                raise RuntimeError(f"policy produced a bad schedule: {'; '.join(bad)}")
            out = execute(state, snapshot, schedule)
        except (RuntimeError, TypeError) as e:
            raise RuntimeError(f"period {k}: {e}") from e

        arrived_mask = [cid in arrivals for cid in state.client_ids]
        for led in ledgers.values():
            led.settle(out.slots, out.delivered, arrived_mask)

        nonrt = out.idle_slots if config.nonrt_client else 0
        metrics.record(
            k,
            ledgers["r1"].scaled_numerators(),
            ledgers["r2"].scaled_numerators(),
            ledgers["r3"].scaled_numerators(),
            [int(d) for d in out.delivered],
            [int(a) for a in arrived_mask],
            out.slots,
            labels,
            nonrt,
        )
    return metrics
