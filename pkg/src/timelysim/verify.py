"""Built-in verification suites.

Each suite replays a policy against an exact oracle on seeded random
instances: the knapsack DP against subset enumeration, the joint
debt-channel ordering against the factorial payoff search, the payoff DP
against Monte Carlo, the admission test against long-run fulfillment, and
empirical arrival/channel frequencies against stationary laws. The CLI's
`verify` subcommand prints one row per suite and exits nonzero on any
failure.

The suite functions accept implementation overrides (e.g. knapsack_fn) so
tests can inject a deliberately broken policy and watch the suite fail.
"""

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analysis import (
    batch_mean_half_width,
    brute_force_best_ordering,
    edf_prefix_feasible,
    exact_payoff,
    feasibility_test,
    fulfillment_check,
    knapsack_oracle,
    simulate_payoff,
)
from .channel import PerClientTwoState, Static, stationary_weights
from .engine import run_simulation
from .model import ClientSpec, FIXED_RATE, PeriodSnapshot, SystemConfig
from .policies import joint_debt_channel, modified_knapsack
from .presets import build_preset
from .traffic import MarkovVBR, Periodic, arrival_frequency

DEFAULT_SEED = 20260819


@dataclass
class SuiteResult:
    name: str
    checks: int
    failures: list
    seconds: float

    @property
    def passed(self):
        return not self.failures


def _snapshot(debts):
    return PeriodSnapshot(0, "static", tuple(sorted(debts)), debts)


def random_knapsack_instance(rng):
    """Random debts (rational, mixed sign), service times, deadlines."""
    n = int(rng.integers(1, 9))
    T = int(rng.integers(2, 13))
    ids = list(range(1, n + 1))
    debts, service, taus = {}, {}, {}
    for cid in ids:
        num = int(rng.integers(-6, 30))
        den = int(rng.integers(1, 12))
        debts[cid] = Fraction(num, den)
        service[cid] = int(rng.integers(1, T + 1))
        taus[cid] = int(rng.integers(1, T + 1))
    return debts, service, taus, T


def random_payoff_instance(rng, max_n=6, max_t=8):
    """Random debts and reliabilities with a homogeneous deadline."""
    n = int(rng.integers(1, max_n + 1))
    T = int(rng.integers(2, max_t + 1))
    ids = list(range(1, n + 1))
    debts = {cid: float(np.round(rng.uniform(-1, 4), 3)) for cid in ids}
    ps = {cid: float(np.round(rng.uniform(0.05, 1.0), 3)) for cid in ids}
    taus = {cid: T for cid in ids}
    return debts, ps, taus, T


def knapsack_suite(seed=DEFAULT_SEED, instances=1000, knapsack_fn=None):
    """modified_knapsack's collected debt equals the enumeration oracle's,
    exactly, and its schedule is deadline-feasible."""
    fn = knapsack_fn or modified_knapsack
    rng = np.random.default_rng(seed)
    failures = []
    start = time.perf_counter()
    for i in range(instances):
        debts, service, taus, T = random_knapsack_instance(rng)
        schedule = fn(_snapshot(debts), service, taus, T)
        _, best = knapsack_oracle(debts, service, taus, T)
        value = sum(max(debts[n], 0) for n in schedule.order)
        if not edf_prefix_feasible(schedule.order, service, taus, T):
            failures.append(f"instance {i}: infeasible schedule {schedule.order}")
        elif value != best:
            failures.append(f"instance {i}: value {value} != oracle {best}")
        if len(failures) > 5:
            break
    return SuiteResult("knapsack", instances, failures, time.perf_counter() - start)


def ordering_suite(seed=DEFAULT_SEED, instances=500, joint_fn=None):
    """joint_debt_channel's priority order attains the brute-force maximum
    expected payoff (within 1e-9)."""
    fn = joint_fn or joint_debt_channel
    rng = np.random.default_rng(seed)
    failures = []
    start = time.perf_counter()
    for i in range(instances):
        debts, ps, taus, T = random_payoff_instance(rng)
        schedule = fn(_snapshot(debts), ps)
        got = exact_payoff(schedule.order, debts, ps, taus, T)
        _, best = brute_force_best_ordering(debts, ps, taus, T)
        if abs(got - best) > 1e-9:
            failures.append(f"instance {i}: payoff {got} vs brute-force {best}")
        if len(failures) > 5:
            break
    return SuiteResult("ordering", instances, failures, time.perf_counter() - start)


def payoff_mc_suite(seed=DEFAULT_SEED, instances=20, trials=100_000):
    """exact_payoff agrees with a Monte-Carlo replay within 3 sigma.

    The empirical sigma misses deviations a finite sample never observes
    (a miss probability below ~1/trials leaves se = 0), so the tolerance
    adds a rule-of-three term: zero observed deviations bound the deviation
    probability by 3/trials, hence the mean by span * 3/trials.
    """
    rng = np.random.default_rng(seed)
    failures = []
    start = time.perf_counter()
    for i in range(instances):
        debts, ps, taus, T = random_payoff_instance(rng)
        order = tuple(sorted(n for n in debts if debts[n] > 0))
        expect = exact_payoff(order, debts, ps, taus, T)
        got, se = simulate_payoff(order, debts, ps, taus, T, trials, rng)
        span = sum(d for d in debts.values() if d > 0)
        if abs(got - expect) > 3 * se + 3 * span / trials + 1e-9:
            failures.append(
                f"instance {i}: MC {got:.6f} vs exact {expect:.6f} (se {se:.2g})"
            )
    return SuiteResult("payoff-mc", instances, failures, time.perf_counter() - start)


def fulfillment_fixture(infeasible=False, horizon=10_000, seed=7):
    """Two statically-reliable clients, every-period arrivals, tau = T = 2.

    With q = 2/5 and p = 1/2 the binding subset margin is 2/5 of a period
    (20%); scaling q by 1.5 pushes the workload to 12/5 > T, and the system
    then leaks exactly 1/5 packet of delivery debt per period in total
    (2 Bernoulli(1/2) slots serve 6/5 of requested packets).
    """
    q = Fraction(3, 5) if infeasible else Fraction(2, 5)
    clients = tuple(
        ClientSpec(cid, q, 2, Periodic(1, 1), {"static": Fraction(1, 2)})
        for cid in (1, 2)
    )
    return SystemConfig(clients, 2, FIXED_RATE, Static(), horizon, seed)


def feasibility_suite(seed=DEFAULT_SEED, horizon=4000):
    """feasibility_test's verdicts match long-run behavior under the joint
    debt-channel policy on the two fixture instances."""
    failures = []
    start = time.perf_counter()

    config = fulfillment_fixture(horizon=horizon, seed=seed)
    report = feasibility_test(config)
    if report.verdict != "strictly-feasible":
        failures.append(f"feasible fixture judged {report.verdict}")
    margin = report.row((1, 2)).margin
    if margin != Fraction(2, 5):
        failures.append(f"binding margin {margin} != 2/5")
    series = run_simulation(config, "joint-debt-channel")
    verdicts = fulfillment_check(series, {1: config.clients[0].q, 2: config.clients[1].q},
                                 window=horizon // 2, tolerance=1e-2)
    bad = [n for n, v in verdicts.items() if not v.fulfilled]
    if bad:
        failures.append(f"feasible fixture not fulfilled for clients {bad}")

    config = fulfillment_fixture(infeasible=True, horizon=horizon, seed=seed)
    report = feasibility_test(config)
    if report.verdict != "infeasible":
        failures.append(f"infeasible fixture judged {report.verdict}")
    series = run_simulation(config, "joint-debt-channel")
    total = series.total_positive_debt()
    slope = float(np.polyfit(np.arange(len(total)), total, 1)[0])
    if not 0.8 * 0.2 < slope < 1.2 * 0.2:
        failures.append(f"deficit slope {slope:.4f} not within 20% of 0.2")
    return SuiteResult("feasibility", 6, failures, time.perf_counter() - start)


def frequencies_suite(seed=DEFAULT_SEED, horizon=6000):
    """Empirical arrival and channel-state frequencies from an engine run
    match the stationary laws, within 3-sigma batch-means intervals."""
    failures = []
    start = time.perf_counter()
    config = build_preset("mpeg-gilbert-elliot", scale=0.5, horizon=horizon, seed=seed)
    series = run_simulation(config, "random")

    good = np.array(
        [[1.0 if lab == "good" else 0.0 for lab in labels]
         for labels in series.channel_labels]
    )
    arrived = series.arrived.astype(np.float64)
    for i, c in enumerate(config.clients):
        freq = float(arrival_frequency(c.arrival))
        hw = batch_mean_half_width(arrived[:, i])
        if abs(arrived[:, i].mean() - freq) > hw:
            failures.append(f"client {c.id}: arrival freq off by more than 3 sigma")
        pi_good = float(stationary_weights(config.channel_model, c.id)["good"])
        hw = batch_mean_half_width(good[:, i])
        if abs(good[:, i].mean() - pi_good) > hw:
            failures.append(f"client {c.id}: channel freq off by more than 3 sigma")
    return SuiteResult(
        "frequencies", 2 * len(config.clients), failures, time.perf_counter() - start
    )


SUITES = {
    "knapsack": knapsack_suite,
    "ordering": ordering_suite,
    "payoff-mc": payoff_mc_suite,
    "feasibility": feasibility_suite,
    "frequencies": frequencies_suite,
}


def run_suites(suite=None, seed=DEFAULT_SEED):
    if suite is not None and suite not in SUITES:
        known = ", ".join(sorted(SUITES))
        raise ValueError(f"unknown suite {suite!r} (known: {known})")
    names = [suite] if suite else list(SUITES)
    return [SUITES[name](seed=seed) for name in names]


def format_results(results):
    lines = [f"{'suite':<14} {'checks':>6} {'time':>8}  result"]
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<14} {r.checks:>6} {r.seconds:>7.2f}s  {verdict}")
        for f in r.failures:
            lines.append(f"    {f}")
    return "\n".join(lines)
