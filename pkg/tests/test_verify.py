"""Verification suites: reduced-size green runs plus mutation controls."""

import numpy as np
import pytest

from timelysim.analysis import exact_payoff, simulate_payoff
from timelysim.model import PriorityList, validate
from timelysim.policies import joint_debt_channel, modified_knapsack
from timelysim.verify import (
    DEFAULT_SEED,
    feasibility_suite,
    format_results,
    frequencies_suite,
    fulfillment_fixture,
    knapsack_suite,
    ordering_suite,
    payoff_mc_suite,
    random_knapsack_instance,
    random_payoff_instance,
    run_suites,
)


def test_suites_pass_at_reduced_size():
    results = [
        knapsack_suite(instances=150),
        ordering_suite(instances=80),
        payoff_mc_suite(instances=5, trials=20_000),
        feasibility_suite(),
        frequencies_suite(),
    ]
    assert all(r.passed for r in results), format_results(results)


def test_instance_generators_stay_in_bounds():
    rng = np.random.default_rng(11)
    for _ in range(200):
        debts, service, taus, T = random_knapsack_instance(rng)
        assert 1 <= len(debts) <= 8 and 2 <= T <= 12
        assert all(1 <= service[n] <= T and 1 <= taus[n] <= T for n in debts)
        debts, ps, taus, T = random_payoff_instance(rng)
        assert 1 <= len(debts) <= 6 and 2 <= T <= 8
        assert all(0.05 <= ps[n] <= 1.0 for n in ps)
        assert all(taus[n] == T for n in taus)


def test_tightened_deadlines_fail_knapsack_suite():
    def pessimist(snapshot, service, taus, T):
        tight = {n: max(1, t - 1) for n, t in taus.items()}
        return modified_knapsack(snapshot, service, tight, T)

    result = knapsack_suite(instances=200, knapsack_fn=pessimist)
    assert not result.passed
    assert any("!= oracle" in f for f in result.failures)


def test_loosened_deadlines_fail_knapsack_suite():
    def optimist(snapshot, service, taus, T):
        loose = {n: t + 1 for n, t in taus.items()}
        return modified_knapsack(snapshot, service, loose, T)

    result = knapsack_suite(instances=200, knapsack_fn=optimist)
    assert not result.passed
    assert any("infeasible schedule" in f for f in result.failures)


def test_reversed_ordering_fails_ordering_suite():
    def backwards(snapshot, ps):
        schedule = joint_debt_channel(snapshot, ps)
        return PriorityList(tuple(reversed(schedule.order)))

    result = ordering_suite(instances=80, joint_fn=backwards)
    assert not result.passed


def test_rule_of_three_covers_unobserved_misses():
    # miss probability 1e-9: a 10k-trial sample sees none, so se = 0 and a
    # bare 3-sigma interval would reject the exact value
    debts, ps, taus, T = {1: 2.0}, {1: 0.999}, {1: 3}, 3
    expect = exact_payoff((1,), debts, ps, taus, T)
    got, se = simulate_payoff((1,), debts, ps, taus, T, 10_000,
                              np.random.default_rng(0))
    assert se == 0.0 and got == 2.0
    assert abs(got - expect) > 1e-12
    assert abs(got - expect) <= 3 * se + 3 * 2.0 / 10_000


def test_fulfillment_fixture_variants_validate():
    for infeasible in (False, True):
        config = fulfillment_fixture(infeasible=infeasible)
        assert [d for d in validate(config) if d.severity == "error"] == []
    assert fulfillment_fixture().clients[0].q < fulfillment_fixture(True).clients[0].q


def test_run_suites_selects_by_name():
    results = run_suites(suite="knapsack", seed=DEFAULT_SEED)
    assert [r.name for r in results] == ["knapsack"]
    with pytest.raises(ValueError, match="unknown suite 'bogus'"):
        run_suites(suite="bogus")


def test_format_results_lists_failures():
    result = knapsack_suite(instances=60)
    text = format_results([result])
    assert "knapsack" in text and "PASS" in text
    broken = ordering_suite(
        instances=40,
        joint_fn=lambda snap, ps: PriorityList(
            tuple(reversed(joint_debt_channel(snap, ps).order))),
    )
    text = format_results([broken])
    assert "FAIL" in text and "    instance" in text
