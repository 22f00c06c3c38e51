"""The six scheduling policies.

Each policy is a pure function of a PeriodSnapshot plus the per-period
channel view; the engine wraps them in small classes that carry per-run
constants (deadlines, gamma budgets, averaged reliabilities).

A client whose relevant debt is not strictly positive is never scheduled.
All sorts break ties by ascending client id.
"""

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .channel import Static, average_reliability
from .model import (
    FIXED_RATE,
    IDLE,
    OrderedSubset,
    PriorityList,
    RATE_ADAPTATION,
    SlotAllocation,
)
from .traffic import arrival_frequency

# int64 DP is safe while every intermediate sum stays below this
_INT64_SAFE = 2**62


@dataclass
class PeriodContext:
    """Per-period channel view handed to policies by the engine: values maps
    client id to the current state's reliability (fixed-rate, Fraction) or
    service time (rate-adaptation, int)."""

    values: dict
    rng: object = None


def random_priority(snapshot, rng):
    """Uniformly random permutation of the arrival set."""
    arrivals = snapshot.arrivals
    perm = rng.permutation(len(arrivals))
    return PriorityList(tuple(arrivals[i] for i in perm))


def largest_debt_first(snapshot, debt_transform):
    """Positive-debt arrivals, largest transformed debt first.

    debt_transform maps a client id to the value to sort on: the time-based
    debt, the weighted-delivery debt, or its time-varying variant divided by
    the current reliability.
    """
    scored = []
    for n in snapshot.arrivals:
        v = debt_transform(n)
        if v > 0:
            scored.append((n, v))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return PriorityList(tuple(n for n, _ in scored))


def modified_knapsack(snapshot, service_times, taus, T):
    """Deadline-constrained knapsack over the arrival set (rate adaptation).

    Maximizes the sum of positive delivery debts over ordered subsets whose
    EDF execution meets every member's own deadline: with clients sorted by
    deadline, M[n,t] = M[n,t-1] if t > tau_n, else
    max(M[n-1,t], r_n + M[n-1,t-s_n]), including only on strict improvement
    (ties exclude). Returns the chosen subset in EDF order.
    """
    items = []
    for n in snapshot.arrivals:
        r = snapshot.debts[n]
        s = service_times[n]
        if r > 0 and s <= taus[n] and s <= T:
            items.append((taus[n], n, r, s))
    items.sort()
    if not items:
        return OrderedSubset(())

    dens = [Fraction(r).denominator for _, _, r, _ in items]
    scale = lcm(*dens)
    weights = [int(Fraction(r) * scale) for _, _, r, _ in items]
    if scale < _INT64_SAFE and sum(weights) < _INT64_SAFE:
        chosen = _knapsack_int64(items, weights, T)
    else:
        chosen = _knapsack_bigint(items, weights, T)
    return OrderedSubset(tuple(chosen))


def _knapsack_int64(items, weights, T):
    rows = [np.zeros(T + 1, dtype=np.int64)]
    for (tau, _, _, s), w in zip(items, weights):
        prev = rows[-1]
        cur = prev.copy()
        upto = min(tau, T)
        if s <= upto:
            cand = prev[: upto - s + 1] + w
            seg = cur[s : upto + 1]
            np.copyto(seg, cand, where=cand > seg)
        if upto < T:
            cur[upto + 1 :] = cur[upto]
        rows.append(cur)
    chosen = []
    t = T
    for i in range(len(items) - 1, -1, -1):
        tau, n, _, s = items[i]
        w = weights[i]
        prev = rows[i]
        t = min(t, tau, T)
        if s <= t and w + prev[t - s] > prev[t]:
            chosen.append(n)
            t -= s
    chosen.reverse()
    return chosen


def _knapsack_bigint(items, weights, T):
    """Arbitrary-precision fallback for pathological debt denominators."""
    rows = [[0] * (T + 1)]
    for (tau, _, _, s), w in zip(items, weights):
        prev = rows[-1]
        cur = prev[:]
        upto = min(tau, T)
        for t in range(s, upto + 1):
            cand = w + prev[t - s]
            if cand > cur[t]:
                cur[t] = cand
        for t in range(upto + 1, T + 1):
            cur[t] = cur[upto]
        rows.append(cur)
    chosen = []
    t = T
    for i in range(len(items) - 1, -1, -1):
        tau, n, _, s = items[i]
        w = weights[i]
        prev = rows[i]
        t = min(t, tau, T)
        if s <= t and w + prev[t - s] > prev[t]:
            chosen.append(n)
            t -= s
    chosen.reverse()
    return chosen


def joint_debt_channel(snapshot, reliabilities):
    """Sort arrivals by delivery debt times current reliability, keeping
    only strictly positive products."""
    scored = []
    for n in snapshot.arrivals:
        v = snapshot.debts[n] * reliabilities[n]
        if v > 0:
            scored.append((n, v))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return PriorityList(tuple(n for n, _ in scored))


def gamma_estimate(p, q, rate, T):
    """Least g with (1-p)^g <= 1 - q/rate, i.e. ceil(log_{1-p}(1 - q/rate)).

    Returns (gamma, clamped). When rate <= q the log argument is
    non-positive and gamma is undefined: clamp to T. Estimates above T are
    also capped at T (a budget beyond the period is meaningless).
    """
    p = Fraction(p)
    q = Fraction(q)
    rate = Fraction(rate)
    target = 1 - q / rate
    if target <= 0:
        return T, True
    fail = 1 - p
    g = 0
    v = Fraction(1)
    while v > target:
        g += 1
        v *= fail
        if g >= T and v > target:
            return T, False
    return g, False


def adaptive_allocation(snapshot, reliabilities, rates, qs, taus, T, gammas=None):
    """Backward slot pre-allocation for heterogeneous deadlines.

    Slots are assigned from T down to 1 to the largest-time-based-debt
    client that is still unexpired at the slot (tau_n >= t) and has budget
    gamma_n left; a chosen client with non-positive debt yields an idle
    sentinel instead (its budget is still consumed). gammas may be passed
    in to avoid recomputing the period-independent estimates.
    """
    if gammas is None:
        gammas = {
            n: gamma_estimate(reliabilities[n], qs[n], rates[n], T)[0]
            for n in snapshot.arrivals
        }
    order = sorted(snapshot.arrivals, key=lambda n: (-snapshot.debts[n], n))
    budget = {n: gammas[n] for n in order}
    alloc = [IDLE] * T
    for t in range(T, 0, -1):
        for n in order:
            if taus[n] >= t and budget[n] > 0:
                budget[n] -= 1
                if snapshot.debts[n] > 0:
                    alloc[t - 1] = n
                break
    return SlotAllocation(tuple(alloc))


# -- engine-facing policy objects ---------------------------------------------


class Policy:
    name = ""
    debt_variant = "r3"
    modes = (FIXED_RATE, RATE_ADAPTATION)

    def __init__(self, config, derived):
        self.config = config
        self.derived = derived

    @classmethod
    def compatibility_problems(cls, config):
        out = []
        if config.mode not in cls.modes:
            out.append(f"policy {cls.name!r} requires mode {' or '.join(cls.modes)}")
        return out

    def decide(self, snapshot, ctx):
        raise NotImplementedError


class RandomPolicy(Policy):
    name = "random"
    debt_variant = "r3"

    def decide(self, snapshot, ctx):
        return random_priority(snapshot, ctx.rng)


class LargestTimeBasedDebtPolicy(Policy):
    name = "largest-time-based-debt"
    debt_variant = "r1"

    def decide(self, snapshot, ctx):
        return largest_debt_first(snapshot, snapshot.debts.__getitem__)


class LargestWeightedDeliveryDebtPolicy(Policy):
    name = "largest-weighted-delivery-debt"
    debt_variant = "r2"

    def decide(self, snapshot, ctx):
        if self.derived.mode == FIXED_RATE and not self.derived.channel_static:
            # raw deficit over the current link reliability
            values = ctx.values
            return largest_debt_first(snapshot, lambda n: snapshot.debts[n] / values[n])
        return largest_debt_first(snapshot, snapshot.debts.__getitem__)


class ModifiedKnapsackPolicy(Policy):
    name = "modified-knapsack"
    debt_variant = "r3"
    modes = (RATE_ADAPTATION,)

    def decide(self, snapshot, ctx):
        return modified_knapsack(snapshot, ctx.values, self.derived.taus, self.config.T)


class JointDebtChannelPolicy(Policy):
    name = "joint-debt-channel"
    debt_variant = "r3"
    modes = (FIXED_RATE,)

    def decide(self, snapshot, ctx):
        return joint_debt_channel(snapshot, ctx.values)


class AdaptiveAllocationPolicy(Policy):
    name = "adaptive-allocation"
    debt_variant = "r1"
    modes = (FIXED_RATE,)

    def __init__(self, config, derived):
        super().__init__(config, derived)
        self.gammas = {}
        clamped = []
        for c in config.clients:
            p = derived.pbars[c.id]
            g, was_clamped = gamma_estimate(p, c.q, derived.rates[c.id], config.T)
            self.gammas[c.id] = g
            if was_clamped:
                clamped.append(c.id)
        if clamped:
            warnings.warn(
                "gamma undefined (arrival rate <= q), clamped to T for "
                f"client(s) {clamped}",
                RuntimeWarning,
                stacklevel=2,
            )

    @classmethod
    def compatibility_problems(cls, config):
        out = super().compatibility_problems(config)
        if not isinstance(config.channel_model, Static):
            out.append("policy 'adaptive-allocation' requires a static channel")
        return out

    def decide(self, snapshot, ctx):
        return adaptive_allocation(
            snapshot,
            None,
            None,
            None,
            self.derived.taus,
            self.config.T,
            gammas=self.gammas,
        )


POLICIES = {
    cls.name: cls
    for cls in (
        RandomPolicy,
        LargestTimeBasedDebtPolicy,
        LargestWeightedDeliveryDebtPolicy,
        ModifiedKnapsackPolicy,
        JointDebtChannelPolicy,
        AdaptiveAllocationPolicy,
    )
}


def default_policies(config):
    """The four-policy comparison set for a config: the random and two
    largest-debt baselines plus the mode's headline policy (knapsack under
    rate adaptation; adaptive allocation on a static channel, else the
    joint debt-channel rule)."""
    base = [
        RandomPolicy.name,
        LargestTimeBasedDebtPolicy.name,
        LargestWeightedDeliveryDebtPolicy.name,
    ]
    if config.mode == RATE_ADAPTATION:
        return (*base, ModifiedKnapsackPolicy.name)
    if isinstance(config.channel_model, Static):
        return (*base, AdaptiveAllocationPolicy.name)
    return (*base, JointDebtChannelPolicy.name)


@dataclass
class Derived:
    """Per-run constants shared by ledgers and policies."""

    mode: str
    channel_static: bool
    taus: dict
    qs: dict
    rates: dict
    pbars: dict  # time-averaged reliability, or 1/E[s] under rate adaptation


def derive(config):
    taus = {c.id: c.tau for c in config.clients}
    qs = {c.id: c.q for c in config.clients}
    rates = {c.id: arrival_frequency(c.arrival) for c in config.clients}
    pbars = {}
    for c in config.clients:
        avg = average_reliability(config.channel_model, c)
        if config.mode == RATE_ADAPTATION:
            # effective per-slot delivery rate: one packet per E[s] slots
            pbars[c.id] = 1 / Fraction(avg)
        else:
            pbars[c.id] = Fraction(avg)
    return Derived(
        mode=config.mode,
        channel_static=isinstance(config.channel_model, Static),
        taus=taus,
        qs=qs,
        rates=rates,
        pbars=pbars,
    )


def make_policy(name, config, derived=None):
    if name not in POLICIES:
        known = ", ".join(sorted(POLICIES))
        raise ValueError(f"unknown policy {name!r} (known: {known})")
    if derived is None:
        derived = derive(config)
    return POLICIES[name](config, derived)
