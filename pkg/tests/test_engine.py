"""Period executors and the simulation loop.

The frozen expectations here are hand-traces of single periods plus
closed-form long-run rates; the paired-seed checks pin the determinism
contract the acceptance suite relies on.
"""

from fractions import Fraction

import numpy as np
import pytest

from timelysim.channel import PerClientTwoState, TwoStateParams
from timelysim.engine import (
    RunState,
    rng_streams,
    run_period_fixed_rate,
    run_period_rate_adaptation,
    run_simulation,
)
from timelysim.model import (
    ClientSpec,
    IDLE,
    OrderedSubset,
    PeriodSnapshot,
    PriorityList,
    RATE_ADAPTATION,
    SlotAllocation,
    SystemConfig,
)
from timelysim.policies import Policy
from timelysim.traffic import Periodic

from conftest import static_config


def fixed_state(ps, taus, T, u):
    config = static_config([Fraction(1, 2)] * len(ps), ps, taus, T=T)
    state = RunState(config)
    state.values = {i + 1: float(p) for i, p in enumerate(ps)}
    state.tx_u = np.asarray(u, dtype=float)
    return state


def ra_config(service, taus, T, qs=None):
    qs = qs or [Fraction(1, 2)] * len(service)
    clients = tuple(
        ClientSpec(i + 1, qs[i], taus[i], Periodic(1, 1), {"good": s, "bad": s})
        for i, s in enumerate(service)
    )
    params = {
        c.id: TwoStateParams(service[c.id - 1], service[c.id - 1], Fraction(2), Fraction(2))
        for c in clients
    }
    return SystemConfig(clients, T, RATE_ADAPTATION, PerClientTwoState(params),
                        100, 1, nonrt_client=True)


def ra_state(service, taus, T):
    config = ra_config(service, taus, T)
    state = RunState(config)
    state.values = {i + 1: s for i, s in enumerate(service)}
    return state


def snap(arrivals, debts=None):
    debts = debts or {n: Fraction(1) for n in arrivals}
    return PeriodSnapshot(0, "static", tuple(arrivals), debts)


# -- fixed-rate period -----------------------------------------------------


def test_certain_success_delivers_in_slot_one():
    state = fixed_state([Fraction(1)], [5], T=5, u=[0.5] * 5)
    out = run_period_fixed_rate(state, snap((1,)), PriorityList((1,)))
    assert out.delivered == [True]
    assert out.slots == [1]
    assert out.idle_slots == 4


def test_single_client_delivery_probability():
    # p = 1/2, tau = 2: success probability 1 - (1/2)^2 = 3/4
    rng = np.random.default_rng(0)
    trials = 100_000
    wins = 0
    for _ in range(trials):
        state = fixed_state([Fraction(1, 2)], [2], T=2, u=rng.random(2))
        out = run_period_fixed_rate(state, snap((1,)), PriorityList((1,)))
        wins += out.delivered[0]
    assert abs(wins / trials - 0.75) < 3 * np.sqrt(0.75 * 0.25 / trials)


def test_two_certain_clients_back_to_back():
    state = fixed_state([Fraction(1), Fraction(1)], [1, 2], T=2, u=[0.0, 0.0])
    out = run_period_fixed_rate(state, snap((1, 2)), PriorityList((1, 2)))
    assert out.delivered == [True, True]
    assert out.slots == [1, 1]


def test_head_expiry_is_permanent():
    # client 1 misses its tau=1 slot; it must not be retried even though
    # the later draws would have succeeded
    state = fixed_state([Fraction(1, 2), Fraction(1, 2)], [1, 4], T=4,
                        u=[0.9, 0.1, 0.1, 0.1])
    out = run_period_fixed_rate(state, snap((1, 2)), PriorityList((1, 2)))
    assert out.delivered == [False, True]
    assert out.slots == [1, 1]
    assert out.idle_slots == 2


def test_exhausted_priority_list_idles_out_the_period():
    state = fixed_state([Fraction(1)], [5], T=5, u=[0.0] * 5)
    out = run_period_fixed_rate(state, snap((1,)), PriorityList((1,)))
    assert out.idle_slots == 4


def test_slot_allocation_follows_the_plan():
    state = fixed_state([Fraction(1), Fraction(1)], [2, 2], T=2, u=[0.0, 0.0])
    schedule = SlotAllocation((2, 1))
    out = run_period_fixed_rate(state, snap((1, 2)), schedule)
    assert out.delivered == [True, True]


def test_slot_allocation_fallback_serves_largest_debt():
    # slot 2's planned client is already done; the fallback picks the
    # largest positive-debt live client
    debts = {1: Fraction(1), 2: Fraction(3), 3: Fraction(2)}
    state = fixed_state([Fraction(1)] * 3, [3, 3, 3], T=3, u=[0.0] * 3)
    schedule = SlotAllocation((1, 1, IDLE))
    out = run_period_fixed_rate(state, snap((1, 2, 3), debts), schedule)
    assert out.delivered == [True, True, True]
    assert out.slots == [1, 1, 1]


def test_slot_allocation_idles_when_no_live_fallback():
    debts = {1: Fraction(1), 2: Fraction(-1)}
    state = fixed_state([Fraction(1), Fraction(1)], [2, 2], T=2, u=[0.0, 0.0])
    out = run_period_fixed_rate(state, snap((1, 2), debts), SlotAllocation((1, IDLE)))
    assert out.delivered == [True, False]
    assert out.idle_slots == 1


# -- rate-adaptation period ------------------------------------------------


def test_empty_subset_idles_the_whole_period():
    state = ra_state([3], [10], T=10)
    out = run_period_rate_adaptation(state, snap(()), OrderedSubset(()))
    assert out.idle_slots == 10


def test_subset_runs_back_to_back():
    state = ra_state([3, 4], [10, 10], T=10)
    out = run_period_rate_adaptation(state, snap((1, 2)), OrderedSubset((1, 2)))
    assert out.slots == [3, 4]
    assert out.delivered == [True, True]
    assert out.idle_slots == 3


def test_infeasible_subset_raises():
    state = ra_state([3, 4], [10, 6], T=10)
    with pytest.raises(RuntimeError, match="past its deadline"):
        run_period_rate_adaptation(state, snap((1, 2)), OrderedSubset((1, 2)))


def test_priority_list_doomed_start_wastes_slots():
    # client 1 needs 4 slots but tau = 2: slots 1-2 burn with no delivery,
    # then client 2 fits exactly
    state = ra_state([4, 3], [2, 5], T=5)
    out = run_period_rate_adaptation(state, snap((1, 2)), PriorityList((1, 2)))
    assert out.delivered == [False, True]
    assert out.slots == [2, 3]
    assert out.idle_slots == 0


def test_priority_list_skips_already_expired():
    state = ra_state([2, 2], [1, 5], T=5)
    out = run_period_rate_adaptation(state, snap((1, 2)), PriorityList((2, 1)))
    # client 2 finishes at slot 2; client 1's deadline (1) already passed
    assert out.delivered == [False, True]
    assert out.slots == [0, 2]
    assert out.idle_slots == 3


def test_priority_list_stops_at_period_end():
    state = ra_state([4, 4], [8, 8], T=8)
    out = run_period_rate_adaptation(state, snap((1, 2)), PriorityList((1, 2)))
    assert out.delivered == [True, True]
    assert out.idle_slots == 0


# -- rng streams -----------------------------------------------------------


def test_rng_streams_are_independent_and_reproducible():
    a = rng_streams(7)
    b = rng_streams(7)
    assert len(a) == 4
    for ra, rb in zip(a, b):
        assert ra.random() == rb.random()
    draws = [r.random() for r in rng_streams(7)]
    assert len(set(draws)) == 4


# -- simulation loop -------------------------------------------------------


def test_zero_horizon_yields_empty_series():
    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2)
    series = run_simulation(config, "random", horizon=0)
    assert len(series) == 0


def test_saturated_reliable_client_keeps_debt_bounded():
    # p = 1, q = 1/2, arrival every period: the client is served whenever
    # its delivery debt is positive, so the debt alternates within [-1/2, 1/2]
    config = static_config([Fraction(1, 2)], [Fraction(1)], [2], T=2, horizon=50)
    series = run_simulation(config, "joint-debt-channel")
    for k in range(50):
        assert series.debt("r3", k, 1) in (Fraction(1, 2), Fraction(0), Fraction(-1, 2))
    assert series.delivered_cumulative[-1, 0] >= 25
    assert max(series.total_positive_debt()) <= 0.5


def test_infeasible_client_debt_grows_at_q_minus_p():
    # q = 1, p = 1/2, tau = T = 1: delivery rate is exactly p, so the
    # delivery debt grows at q - p = 1/2 per period
    config = static_config([Fraction(1)], [Fraction(1, 2)], [1], T=1, horizon=4000)
    series = run_simulation(config, "largest-time-based-debt")
    slope = float(series.debt("r3", 3999, 1)) / 4000
    assert abs(slope - 0.5) < 0.05


def test_recorded_delivery_debt_identity():
    # r3 recorded at period k equals q*(k+1) - deliveries through k
    config = static_config([Fraction(7, 10)], [Fraction(3, 5)], [2], T=2, horizon=300)
    series = run_simulation(config, "joint-debt-channel")
    delivered = series.delivered_cumulative
    for k in (0, 5, 77, 299):
        expect = Fraction(7, 10) * (k + 1) - int(delivered[k, 0])
        assert series.debt("r3", k, 1) == expect


def test_time_based_debt_identity():
    # r1 recorded at period k equals (q/p)*(k+1) - slots spent through k
    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [3], T=3, horizon=200)
    series = run_simulation(config, "largest-time-based-debt")
    spent = np.cumsum(series.slots_spent[:, 0])
    for k in (0, 10, 199):
        assert series.debt("r1", k, 1) == Fraction(1, 2) / Fraction(1, 2) * (k + 1) - int(spent[k])


def test_same_seed_same_output():
    config = static_config([Fraction(1, 2), Fraction(1, 3)],
                           [Fraction(1, 2), Fraction(3, 4)], [2, 2], T=2, horizon=100)
    a = run_simulation(config, "random", seed=5)
    b = run_simulation(config, "random", seed=5)
    assert np.array_equal(a.r3_num, b.r3_num)
    assert np.array_equal(a.delivered, b.delivered)
    assert a.channel_labels == b.channel_labels


def test_paired_seeds_share_arrivals_and_channels():
    # two different policies at one seed must see identical arrival and
    # channel trajectories
    params = {
        1: TwoStateParams(Fraction(1), Fraction(1, 5), Fraction(4), Fraction(2)),
        2: TwoStateParams(Fraction(1), Fraction(1, 5), Fraction(3), Fraction(2)),
    }
    clients = (
        ClientSpec(1, Fraction(1, 3), 3, Periodic(3, 1),
                   {"good": Fraction(1), "bad": Fraction(1, 5)}),
        ClientSpec(2, Fraction(1, 2), 3, Periodic(2, 1),
                   {"good": Fraction(1), "bad": Fraction(1, 5)}),
    )
    config = SystemConfig(clients, 3, "fixed-rate", PerClientTwoState(params), 200, 1)
    a = run_simulation(config, "random", seed=9)
    b = run_simulation(config, "joint-debt-channel", seed=9)
    assert np.array_equal(a.arrived, b.arrived)
    assert a.channel_labels == b.channel_labels


def test_nonrt_throughput_counts_idle_slots():
    config = static_config([Fraction(1, 2)], [Fraction(1)], [1], T=4,
                           horizon=20, nonrt=True)
    series = run_simulation(config, "joint-debt-channel")
    # every period: at most 1 slot on the real-time client, rest idle
    assert all(series.nonrt_delivered + series.slots_spent[:, 0] == 4)
    off = static_config([Fraction(1, 2)], [Fraction(1)], [1], T=4, horizon=20)
    assert run_simulation(off, "joint-debt-channel").nonrt_delivered.sum() == 0


def test_invalid_config_raises_with_diagnostics():
    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [9], T=2)
    with pytest.raises(ValueError, match="tau exceeds period length"):
        run_simulation(config, "random")


def test_incompatible_policy_raises():
    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2)
    with pytest.raises(ValueError, match="requires mode"):
        run_simulation(config, "modified-knapsack")


def test_bad_schedule_reports_period_index():
    class RogueSchedule(Policy):
        name = "rogue"

        def decide(self, snapshot, ctx):
            return PriorityList((99,))

    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2)
    with pytest.raises(RuntimeError, match="period 0.*without an arrival"):
        run_simulation(config, RogueSchedule)


def test_policy_instance_and_name_agree():
    from timelysim.policies import make_policy

    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2, horizon=50)
    by_name = run_simulation(config, "largest-time-based-debt")
    by_instance = run_simulation(config, make_policy("largest-time-based-debt", config))
    assert np.array_equal(by_name.r1_num, by_instance.r1_num)


def test_transmission_draws_fixed_per_period():
    # policy-agnostic luck: T draws per period even when the period idles,
    # so paired runs stay aligned; verified by a no-op policy matching the
    # stream advance of a busy one
    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2, horizon=60)

    class NeverServe(Policy):
        name = "never"

        def decide(self, snapshot, ctx):
            return PriorityList(())

    idle = run_simulation(config, NeverServe, seed=3)
    busy = run_simulation(config, "largest-time-based-debt", seed=3)
    assert idle.channel_labels == busy.channel_labels
    assert np.array_equal(idle.arrived, busy.arrived)
    assert idle.delivered.sum() == 0
