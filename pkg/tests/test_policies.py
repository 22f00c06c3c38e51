from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timelysim.analysis import exact_payoff, knapsack_oracle
from timelysim.model import (
    IDLE,
    OrderedSubset,
    PeriodSnapshot,
    PriorityList,
    SlotAllocation,
    schedule_violations,
)
from timelysim.policies import (
    POLICIES,
    adaptive_allocation,
    default_policies,
    derive,
    gamma_estimate,
    joint_debt_channel,
    largest_debt_first,
    make_policy,
    modified_knapsack,
    random_priority,
)
from timelysim.presets import build_preset

from conftest import static_config


def snap(debts, arrivals=None, k=0):
    if arrivals is None:
        arrivals = tuple(sorted(debts))
    return PeriodSnapshot(k, "static", tuple(arrivals), debts)


# -- random ---------------------------------------------------------------


def test_random_empty_arrivals():
    out = random_priority(snap({}, ()), np.random.default_rng(0))
    assert out == PriorityList(())


def test_random_singleton():
    out = random_priority(snap({3: Fraction(1)}, (3,)), np.random.default_rng(0))
    assert out == PriorityList((3,))


def test_random_is_uniform_over_two_clients():
    rng = np.random.default_rng(42)
    s = snap({1: Fraction(1), 2: Fraction(1)})
    n = 10_000
    first = sum(random_priority(s, rng).order[0] == 1 for _ in range(n))
    # binomial(n, 1/2) three-sigma band
    assert abs(first - n / 2) < 3 * np.sqrt(n / 4)


# -- largest debt first ----------------------------------------------------


def test_largest_debt_first_filters_and_sorts():
    debts = {1: Fraction(5), 2: Fraction(3), 3: Fraction(-1)}
    out = largest_debt_first(snap(debts), debts.__getitem__)
    assert out.order == (1, 2)


def test_largest_debt_first_ties_break_by_id():
    debts = {2: Fraction(2), 1: Fraction(2)}
    out = largest_debt_first(snap(debts), debts.__getitem__)
    assert out.order == (1, 2)


def test_largest_debt_first_zero_debt_is_excluded():
    debts = {1: Fraction(0), 2: Fraction(1, 10)}
    out = largest_debt_first(snap(debts), debts.__getitem__)
    assert out.order == (2,)


def test_time_varying_weighted_transform_reorders():
    # raw deficits (0.4, 0.5) over current reliabilities (1.0, 0.2) give
    # transformed debts (0.4, 2.5)
    debts = {1: Fraction(2, 5), 2: Fraction(1, 2)}
    ps = {1: Fraction(1), 2: Fraction(1, 5)}
    out = largest_debt_first(snap(debts), lambda n: debts[n] / ps[n])
    assert out.order == (2, 1)


# -- modified knapsack -----------------------------------------------------


def test_knapsack_no_arrivals():
    assert modified_knapsack(snap({}, ()), {}, {}, 8) == OrderedSubset(())


def test_knapsack_excludes_unservable_singleton():
    out = modified_knapsack(
        snap({1: Fraction(5)}), {1: 3}, {1: 2}, 8
    )
    assert out == OrderedSubset(())


def test_knapsack_deadline_forces_the_selection():
    # client 1 must go first (tau=4) and only one of the others fits after
    debts = {1: Fraction(5), 2: Fraction(4), 3: Fraction(3)}
    out = modified_knapsack(snap(debts), {1: 4, 2: 4, 3: 4}, {1: 4, 2: 8, 3: 8}, 8)
    assert out.order == (1, 2)
    _, value = knapsack_oracle(debts, {1: 4, 2: 4, 3: 4}, {1: 4, 2: 8, 3: 8}, 8)
    assert value == 9


def test_knapsack_skips_nonpositive_debts():
    debts = {1: Fraction(0), 2: Fraction(-3), 3: Fraction(1)}
    out = modified_knapsack(snap(debts), {n: 1 for n in debts}, {n: 3 for n in debts}, 3)
    assert out.order == (3,)


def test_knapsack_output_is_edf_ordered():
    debts = {1: Fraction(1), 2: Fraction(1), 3: Fraction(1)}
    taus = {1: 9, 2: 3, 3: 6}
    out = modified_knapsack(snap(debts), {n: 3 for n in debts}, taus, 9)
    assert out.order == (2, 3, 1)


def test_knapsack_bigint_path_matches_oracle():
    # denominators with a huge lcm force the arbitrary-precision DP
    primes = [10**9 + 7, 10**9 + 9, 10**9 + 21, 10**9 + 33]
    debts = {i + 1: Fraction(3 * i + 1, p) + i for i, p in enumerate(primes)}
    service = {1: 2, 2: 3, 3: 2, 4: 4}
    taus = {1: 4, 2: 6, 3: 6, 4: 8}
    out = modified_knapsack(snap(debts), service, taus, 8)
    value = sum(debts[n] for n in out.order)
    _, best = knapsack_oracle(debts, service, taus, 8)
    assert value == best


service_lists = st.integers(min_value=1, max_value=12)


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_knapsack_value_matches_oracle(data):
    n = data.draw(st.integers(min_value=1, max_value=7))
    T = data.draw(st.integers(min_value=1, max_value=10))
    debts = {
        i + 1: data.draw(st.fractions(min_value=-3, max_value=8))
        for i in range(n)
    }
    service = {i + 1: data.draw(st.integers(min_value=1, max_value=T)) for i in range(n)}
    taus = {i + 1: data.draw(st.integers(min_value=1, max_value=T)) for i in range(n)}
    out = modified_knapsack(snap(debts), service, taus, T)
    got = sum((max(debts[n_], 0) for n_ in out.order), Fraction(0))
    _, best = knapsack_oracle(debts, service, taus, T)
    assert got == best
    # and the schedule really fits
    used = 0
    for n_ in out.order:
        used += service[n_]
        assert used <= taus[n_] <= T


# -- joint debt-channel ----------------------------------------------------


def test_joint_rule_weighs_debt_by_reliability():
    debts = {1: Fraction(2), 2: Fraction(1)}
    ps = {1: Fraction(3, 10), 2: Fraction(9, 10)}
    out = joint_debt_channel(snap(debts), ps)
    assert out.order == (2, 1)


def test_joint_rule_drops_nonpositive_products():
    debts = {1: Fraction(-2), 2: Fraction(0)}
    out = joint_debt_channel(snap(debts), {1: Fraction(1, 2), 2: Fraction(1, 2)})
    assert out.order == ()


def test_joint_rule_tie_breaks_by_id():
    debts = {1: Fraction(1), 2: Fraction(2)}
    ps = {1: Fraction(1, 2), 2: Fraction(1, 4)}
    out = joint_debt_channel(snap(debts), ps)
    assert out.order == (1, 2)


@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_adjacent_swap_never_improves_payoff(data):
    # the ordering rule's exchange argument: sorting by r*p beats any
    # single adjacent transposition
    n = data.draw(st.integers(min_value=2, max_value=5))
    T = data.draw(st.integers(min_value=1, max_value=6))
    debts = {}
    ps = {}
    for i in range(n):
        debts[i + 1] = Fraction(data.draw(st.integers(min_value=1, max_value=40)), 8)
        ps[i + 1] = Fraction(data.draw(st.integers(min_value=1, max_value=16)), 16)
    taus = {i + 1: T for i in range(n)}
    order = list(joint_debt_channel(snap(debts), ps).order)
    base = exact_payoff(tuple(order), debts, ps, taus, T)
    for m in range(len(order) - 1):
        swapped = order.copy()
        swapped[m], swapped[m + 1] = swapped[m + 1], swapped[m]
        assert exact_payoff(tuple(swapped), debts, ps, taus, T) <= base


# -- adaptive allocation ---------------------------------------------------


def test_gamma_closed_form():
    # (1-p)^g <= 1 - q/rate with p = 1/2, q/rate = 3/4 first holds at g = 2
    assert gamma_estimate(Fraction(1, 2), Fraction(3, 4), Fraction(1), 10) == (2, False)


def test_gamma_exact_boundary():
    # (1/2)^1 = 1 - 1/2 exactly: g = 1 suffices
    assert gamma_estimate(Fraction(1, 2), Fraction(1, 2), Fraction(1), 10) == (1, False)


def test_gamma_clamps_when_rate_cannot_cover_q():
    g, clamped = gamma_estimate(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), 7)
    assert (g, clamped) == (7, True)


def test_gamma_caps_at_period_length():
    g, clamped = gamma_estimate(Fraction(1, 100), Fraction(99, 100), Fraction(1), 5)
    assert (g, clamped) == (5, False)


def test_allocation_fills_latest_slots_first():
    debts = {1: Fraction(1)}
    out = adaptive_allocation(snap(debts), None, None, None, {1: 4}, 4, gammas={1: 2})
    assert out.alloc == (IDLE, IDLE, 1, 1)


def test_allocation_respects_deadlines():
    debts = {1: Fraction(1)}
    out = adaptive_allocation(snap(debts), None, None, None, {1: 2}, 4, gammas={1: 2})
    assert out.alloc == (1, 1, IDLE, IDLE)


def test_allocation_idles_nonpositive_debt_but_spends_budget():
    debts = {1: Fraction(-1), 2: Fraction(1)}
    out = adaptive_allocation(
        snap(debts), None, None, None, {1: 4, 2: 4}, 4, gammas={1: 2, 2: 2}
    )
    # client 2 (larger debt) wins slots 4 and 3; client 1's remaining budget
    # burns slots 2 and 1 as idle sentinels
    assert out.alloc == (IDLE, IDLE, 2, 2)


def test_allocation_two_deadline_groups():
    debts = {1: Fraction(2), 2: Fraction(1)}
    out = adaptive_allocation(
        snap(debts), None, None, None, {1: 4, 2: 2}, 4, gammas={1: 2, 2: 2}
    )
    # slots 4,3 can only go to client 1; 2,1 go to 1 first (larger debt)
    # until its budget runs out
    assert out.alloc == (2, 2, 1, 1)


# -- registry and engine-facing wrappers ------------------------------------


def test_policy_registry_names():
    assert sorted(POLICIES) == [
        "adaptive-allocation",
        "joint-debt-channel",
        "largest-time-based-debt",
        "largest-weighted-delivery-debt",
        "modified-knapsack",
        "random",
    ]


def test_make_policy_rejects_unknown_name():
    config = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2)
    with pytest.raises(ValueError, match="unknown policy"):
        make_policy("edf", config)


def test_mode_compatibility():
    fixed = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2)
    ra = build_preset("voip-rate-adaptation", scale="1/22", horizon=10)
    assert POLICIES["modified-knapsack"].compatibility_problems(fixed) != []
    assert POLICIES["joint-debt-channel"].compatibility_problems(ra) != []
    assert POLICIES["adaptive-allocation"].compatibility_problems(ra) != []
    assert POLICIES["adaptive-allocation"].compatibility_problems(fixed) == []
    ge = build_preset("voip-gilbert-elliot", scale="1/19", horizon=10)
    assert POLICIES["adaptive-allocation"].compatibility_problems(ge) != []
    assert POLICIES["random"].compatibility_problems(ge) == []


def test_default_policies_by_mode():
    fixed_static = static_config([Fraction(1, 2)], [Fraction(1, 2)], [2], T=2)
    assert default_policies(fixed_static)[-1] == "adaptive-allocation"
    ge = build_preset("voip-gilbert-elliot", scale="1/19", horizon=10)
    assert default_policies(ge)[-1] == "joint-debt-channel"
    ra = build_preset("voip-rate-adaptation", scale="1/22", horizon=10)
    assert default_policies(ra)[-1] == "modified-knapsack"
    assert all(len(default_policies(c)) == 4 for c in (fixed_static, ge, ra))


def test_adaptive_allocation_warns_on_clamped_gamma():
    # q equals the arrival rate: no gamma satisfies the estimate
    config = static_config([Fraction(1)], [Fraction(1, 2)], [2], T=2)
    with pytest.warns(RuntimeWarning, match="clamped"):
        make_policy("adaptive-allocation", config)


def test_gammas_precomputed_per_client():
    config = static_config(
        [Fraction(1, 2), Fraction(3, 4)], [Fraction(1, 2), Fraction(1, 2)],
        [4, 4], T=4,
    )
    policy = make_policy("adaptive-allocation", config)
    assert policy.gammas == {1: 1, 2: 2}


@settings(max_examples=80, deadline=None)
@given(data=st.data())
def test_every_policy_emits_a_clean_schedule(data):
    # structural invariants: no duplicate ids, nothing outside the arrival set
    config = static_config(
        [Fraction(1, 2)] * 3, [Fraction(1, 2)] * 3, [2, 3, 3], T=3
    )
    derived = derive(config)
    arrivals = tuple(
        sorted(data.draw(st.sets(st.sampled_from([1, 2, 3]), max_size=3)))
    )
    debts = {
        n: Fraction(data.draw(st.integers(min_value=-8, max_value=8)), 4)
        for n in arrivals
    }
    snapshot = snap(debts, arrivals)
    ps = {n: Fraction(1, 2) for n in arrivals}
    from timelysim.policies import PeriodContext

    ctx = PeriodContext(ps, np.random.default_rng(0))
    for name in ("random", "largest-time-based-debt", "joint-debt-channel"):
        schedule = POLICIES[name](config, derived).decide(snapshot, ctx)
        assert schedule_violations(schedule, arrivals) == []
    alloc = adaptive_allocation(
        snapshot, None, None, None, derived.taus, config.T,
        gammas={n: 2 for n in arrivals},
    )
    assert schedule_violations(alloc, arrivals) == []
