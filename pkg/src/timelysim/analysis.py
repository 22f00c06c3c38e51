"""Exact oracles and admission-control tests.

These exist to verify the policies, not to run experiments: a payoff
evaluator that is exact for a fixed priority ordering, factorial and
exponential brute-force searches (guarded at 8 clients), the Theorem-style
subset feasibility test, and a long-run fulfillment verdict.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import lcm

import numpy as np

from .channel import Static
from .model import FIXED_RATE
from .traffic import Periodic

_ORACLE_LIMIT = 8


def exact_payoff(ordering, debts, reliabilities, taus, T):
    """Expected payoff sum(r_n^+ * P{n delivered}) of a priority ordering.

    Exact dynamic program over the head position: dist[j] is the
    probability that the first j clients are finalized (delivered, or
    expired and therefore skipped). Each slot first skips expired heads,
    then transmits at the head with its per-slot reliability. Heterogeneous
    deadlines follow the engine's skip rule, so oracle and engine agree by
    construction.

    All mappings are keyed by client id. Fraction inputs stay exact; float
    inputs give float results.
    """
    L = len(ordering)
    if L == 0:
        return 0
    p = [reliabilities[n] for n in ordering]
    tau = [taus[n] for n in ordering]
    rpos = [max(debts[n], 0) for n in ordering]

    dist = [1] + [0] * L
    won = [0] * L
    for t in range(1, T + 1):
        for j in range(L):  # ascending: a skip can expose another expired head
            if tau[j] < t and dist[j]:
                dist[j + 1] += dist[j]
                dist[j] = 0
        # transmit from the old mass only; in-place ascending updates would
        # let one slot deliver twice
        moved = [dist[j] * p[j] for j in range(L)]
        for j in range(L):
            if moved[j]:
                dist[j] -= moved[j]
                dist[j + 1] += moved[j]
                won[j] += moved[j]
    return sum(r * w for r, w in zip(rpos, won))


def brute_force_best_ordering(debts, reliabilities, taus, T):
    """(ordering, payoff) maximizing exact_payoff over all permutations of
    the positive-debt clients; ties go to the lexicographically smallest
    ordering. Limited to 8 clients.
    """
    ids = sorted(n for n in debts if debts[n] > 0)
    if len(ids) > _ORACLE_LIMIT:
        raise ValueError("oracle limited to 8 clients")
    if not ids:
        return (), 0
    perms = list(permutations(ids))
    payoffs = _batch_payoffs(perms, debts, reliabilities, taus, T)
    best = perms[int(np.argmax(payoffs))]  # first max = lexicographic tie-break
    return best, exact_payoff(best, debts, reliabilities, taus, T)


def _batch_payoffs(perms, debts, reliabilities, taus, T):
    """Float64 payoff of every ordering at once; same recurrence as
    exact_payoff, vectorized across permutations."""
    P = len(perms)
    L = len(perms[0])
    p = np.array([[float(reliabilities[n]) for n in perm] for perm in perms])
    tau = np.array([[taus[n] for n in perm] for perm in perms])
    rpos = np.array([[max(float(debts[n]), 0.0) for n in perm] for perm in perms])

    dist = np.zeros((P, L + 1))
    dist[:, 0] = 1.0
    won = np.zeros((P, L))
    for t in range(1, T + 1):
        for j in range(L):
            mask = tau[:, j] < t
            if mask.any():
                dist[mask, j + 1] += dist[mask, j]
                dist[mask, j] = 0.0
        moved = dist[:, :L] * p
        dist[:, :L] -= moved
        dist[:, 1:] += moved
        won += moved
    return (won * rpos).sum(axis=1)


def simulate_payoff(ordering, debts, reliabilities, taus, T, trials, rng):
    """Monte-Carlo estimate of exact_payoff: (mean, standard error).

    Replays the engine's fixed-rate priority execution `trials` times with
    fresh Bernoulli draws; vectorized across trials.
    """
    L = len(ordering)
    if L == 0:
        return 0.0, 0.0
    p = np.array([float(reliabilities[n]) for n in ordering])
    tau = np.array([taus[n] for n in ordering])
    rpos = np.array([max(float(debts[n]), 0.0) for n in ordering])

    head = np.zeros(trials, dtype=np.int64)
    payoff = np.zeros(trials)
    tau_ext = np.append(tau, T + 1)  # sentinel keeps finished trials inert
    for t in range(1, T + 1):
        for _ in range(L):  # expiry skips can cascade at most L times
            expired = (head < L) & (tau_ext[head] < t)
            if not expired.any():
                break
            head[expired] += 1
        active = head < L
        u = rng.random(trials)
        succ = active & (u < p[np.minimum(head, L - 1)])
        payoff[succ] += rpos[head[succ]]
        head[succ] += 1
    return float(payoff.mean()), float(payoff.std(ddof=1) / np.sqrt(trials))


def edf_order(ids, taus):
    """Deadline-ascending execution order, ties by id."""
    return tuple(sorted(ids, key=lambda n: (taus[n], n)))


def edf_prefix_feasible(order, service_times, taus, T):
    """True when every prefix of the order finishes by its last deadline."""
    used = 0
    for n in order:
        used += service_times[n]
        if used > taus[n] or used > T:
            return False
    return True


def knapsack_oracle(debts, service_times, taus, T):
    """(subset, value) maximizing sum of positive debts over EDF-feasible
    subsets, by full enumeration. Limited to 8 clients; verification only.

    The returned subset is in EDF order and is one argmax among possibly
    many; only the value is canonical.
    """
    ids = sorted(debts)
    if len(ids) > _ORACLE_LIMIT:
        raise ValueError("oracle limited to 8 clients")
    best_value = 0
    best = ()
    for mask in range(1 << len(ids)):
        chosen = [ids[i] for i in range(len(ids)) if mask >> i & 1]
        order = edf_order(chosen, taus)
        if not edf_prefix_feasible(order, service_times, taus, T):
            continue
        value = sum(max(debts[n], 0) for n in chosen)
        if value > best_value:
            best_value = value
            best = order
    return best, best_value


# -- admission control ---------------------------------------------------------


@dataclass(frozen=True)
class SubsetRow:
    subset: tuple
    workload: Fraction  # sum of q_n/p_n over the subset
    idle_mean: object  # E[I_S]; Fraction in exact mode, float under MC
    half_width: object  # 0 in exact mode
    margin: object  # T - E[I_S] - workload


@dataclass(frozen=True)
class FeasibilityReport:
    T: int
    rows: tuple
    verdict: str  # strictly-feasible | infeasible | inconclusive
    exact: bool

    def row(self, subset):
        key = tuple(sorted(subset))
        for r in self.rows:
            if r.subset == key:
                return r
        raise KeyError(f"no row for subset {key}")


STRICTLY_FEASIBLE = "strictly-feasible"
INFEASIBLE = "infeasible"
INCONCLUSIVE = "inconclusive"


def feasibility_test(config, samples=100_000, seed=20260819):
    """Subset admission test: q is strictly feasible iff for every nonempty
    subset S, sum_{n in S} q_n/p_n < T - E[I_S].

    Requires fixed-rate mode, a static channel, every deadline equal to T,
    and N <= 15. E[I_S] is exact (rational) when all arrivals are Periodic:
    the arrival pattern cycles, and per cycle position the busy time is a
    sum of independent geometrics whose distribution we convolve directly.
    With VBR arrivals E[I_S] is estimated over `samples` simulated periods,
    sharing arrival and geometric draws across subsets, and the verdict
    gains a 3-sigma half-width (inconclusive when a margin is inside it).

    The empty subset imposes no constraint and is reported with margin T.
    """
    if config.mode != FIXED_RATE:
        raise ValueError("feasibility_test requires fixed-rate mode")
    if not isinstance(config.channel_model, Static):
        raise ValueError("feasibility_test requires a static channel")
    if any(c.tau != config.T for c in config.clients):
        raise ValueError("feasibility_test requires every deadline equal to T")
    if config.n_clients > 15:
        raise ValueError("feasibility_test enumerates subsets; N <= 15 required")

    T = config.T
    label = config.channel_model.label
    ps = {c.id: Fraction(c.channel_params[label]) for c in config.clients}
    ws = {c.id: Fraction(c.q) / ps[c.id] for c in config.clients}
    ids = [c.id for c in config.clients]
    all_periodic = all(isinstance(c.arrival, Periodic) for c in config.clients)

    if all_periodic:
        idle_of = _exact_idle_expectations(config, ps)
        hw_of = {s: Fraction(0) for s in idle_of}
    else:
        idle_of, hw_of = _mc_idle_expectations(config, ps, samples, seed)

    rows = []
    verdict = STRICTLY_FEASIBLE
    for subset in sorted(idle_of, key=lambda s: (len(s), s)):
        if subset == ():
            rows.append(SubsetRow((), Fraction(0), idle_of[()], hw_of[()], T))
            continue
        workload = sum((ws[n] for n in subset), Fraction(0))
        margin = T - idle_of[subset] - workload
        rows.append(SubsetRow(subset, workload, idle_of[subset], hw_of[subset], margin))
        if margin < -hw_of[subset]:
            verdict = INFEASIBLE
        elif margin <= hw_of[subset] and verdict != INFEASIBLE:
            verdict = INCONCLUSIVE
    return FeasibilityReport(T, tuple(rows), verdict, all_periodic)


def _geometric_pmf_upto(p, upper):
    """P{G = g} for g = 1..upper, G ~ Geometric(p) on {1, 2, ...}."""
    fail = 1 - p
    pmf = []
    cur = p
    for _ in range(upper):
        pmf.append(cur)
        cur *= fail
    return pmf


def _exact_idle_expectations(config, ps):
    """E[I_S] for every subset, exact. The arrival pattern repeats every
    lcm of the intervals; within a period the busy time for arrival set A
    is min(T, sum of Geometric(p_n)), so E[I] needs the sum's pmf only up
    to T-1."""
    T = config.T
    cycle = lcm(*(c.arrival.interval for c in config.clients))
    ids = [c.id for c in config.clients]
    arrive = {c.id: [c.arrival.arrives_at(k) for k in range(cycle)] for c in config.clients}

    cache = {}

    def idle_given(arrived):
        if arrived in cache:
            return cache[arrived]
        # pmf of the busy-slot sum over 0..T-1, exact
        pmf = [Fraction(1)] + [Fraction(0)] * (T - 1)
        for n in arrived:
            g = _geometric_pmf_upto(ps[n], T - 1)
            new = [Fraction(0)] * T
            for x in range(T):
                if pmf[x] == 0:
                    continue
                for extra in range(1, T - x):
                    new[x + extra] += pmf[x] * g[extra - 1]
            pmf = new
        val = sum((T - x) * pmf[x] for x in range(T))
        cache[arrived] = val
        return val

    out = {(): Fraction(T)}
    for mask in range(1, 1 << len(ids)):
        subset = tuple(ids[i] for i in range(len(ids)) if mask >> i & 1)
        total = Fraction(0)
        for k in range(cycle):
            arrived = tuple(n for n in subset if arrive[n][k])
            total += idle_given(arrived)
        out[subset] = total / cycle
    return out


def _mc_idle_expectations(config, ps, samples, seed):
    """Monte-Carlo E[I_S] with shared draws across subsets: one arrival
    matrix and one geometric service matrix feed every subset, so margins
    are comparable and the monotonicity structure is preserved."""
    from .traffic import init_traffic, next_arrivals

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    ids = [c.id for c in config.clients]
    T = config.T

    traffic = init_traffic(config.clients, rng)
    arrived = np.zeros((samples, len(ids)), dtype=bool)
    for k in range(samples):
        S = next_arrivals(traffic, k, rng)
        for n in S:
            arrived[k, ids.index(n)] = True
    geo = np.empty((samples, len(ids)), dtype=np.int64)
    for i, n in enumerate(ids):
        geo[:, i] = rng.geometric(float(ps[n]), size=samples)

    idle_of = {(): float(T)}
    hw_of = {(): 0.0}
    work = arrived * geo
    for mask in range(1, 1 << len(ids)):
        cols = [i for i in range(len(ids)) if mask >> i & 1]
        subset = tuple(ids[i] for i in cols)
        busy = work[:, cols].sum(axis=1)
        idle = np.maximum(0, T - busy)
        idle_of[subset] = float(idle.mean())
        hw_of[subset] = float(3.0 * idle.std(ddof=1) / np.sqrt(samples))
    return idle_of, hw_of


# -- long-run verdicts ---------------------------------------------------------


@dataclass(frozen=True)
class ClientFulfillment:
    client_id: int
    slope: float  # least-squares slope of r3^+ over the last window
    final_ratio: float  # r3^+(K) / K
    fulfilled: bool


def fulfillment_check(series, q, window, tolerance=1e-3):
    """Per-client fulfillment verdict from a finished run.

    q maps client id to its requirement and must cover the series' clients
    (cross-check only; the debts already encode q). Fulfilled means the
    positive delivery debt's least-squares slope over the last `window`
    periods and its final per-period average both sit under `tolerance`
    (packets per period).
    """
    K = len(series)
    if K < 2 * window:
        raise ValueError(f"series has {K} periods; need at least {2 * window}")
    missing = [n for n in series.client_ids if n not in q]
    if missing:
        raise ValueError(f"q missing client(s) {missing}")

    debts = np.maximum(series.debt_floats("r3"), 0.0)
    x = np.arange(K - window, K, dtype=np.float64)
    out = {}
    for i, n in enumerate(series.client_ids):
        y = debts[K - window : K, i]
        slope = float(np.polyfit(x, y, 1)[0])
        final_ratio = float(debts[K - 1, i] / K)
        out[n] = ClientFulfillment(
            n, slope, final_ratio, slope < tolerance and final_ratio < tolerance
        )
    return out


def batch_mean_half_width(samples, batches=50, z=3.0):
    """z-sigma half-width for the mean of an autocorrelated series, by
    batch means. Used when comparing empirical frequencies of Markov
    processes against stationary values."""
    samples = np.asarray(samples, dtype=np.float64)
    n = len(samples) // batches * batches
    if n < batches * 2:
        raise ValueError("too few samples for batch means")
    means = samples[:n].reshape(batches, -1).mean(axis=1)
    return float(z * means.std(ddof=1) / np.sqrt(batches))
