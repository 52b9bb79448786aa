from __future__ import annotations

import json

import pytest

from beamqopt import Schedule, TrafficProfile, check_feasibility, generate_scenario, solve_exact, solve_greedy, weighted_throughput
from beamqopt.scenario import ProfileKind

from helpers import all_schedules, brute_force_optimum, make_scenario, naive_feasible, naive_throughput


def test_zero_rates():
    s = make_scenario([1, 2], [5, 5], [[0, 0], [0, 0]], [1, 1])
    res = solve_exact(s)
    assert res.schedule == Schedule.from_pairs([]) and res.objective == 0 and res.optimal


def test_unconstrained_takes_everything():
    s = make_scenario([3], [100], [[2, 5]], [1, 1], limits={0: 100})
    res = solve_exact(s)
    assert res.schedule == Schedule.from_pairs([(0, 0), (0, 1)])
    assert res.objective == 3 * (2 + 5)


@pytest.mark.parametrize("profile", list(ProfileKind))
@pytest.mark.parametrize("seed", range(10))
def test_exact_matches_enumeration_3x2(profile, seed):
    s = generate_scenario(TrafficProfile(profile, 3, 2), seed)
    res = solve_exact(s)
    assert res.optimal
    assert res.objective == pytest.approx(brute_force_optimum(s), rel=1e-12)
    assert check_feasibility(s, res.schedule).feasible
    assert res.objective == pytest.approx(weighted_throughput(s, res.schedule))


@pytest.mark.parametrize("seed", range(5))
def test_exact_per_slot_scope(seed):
    s = generate_scenario(TrafficProfile(ProfileKind.UNIFORM, 2, 4, slot_count=2, volume_range=(1, 2)), seed)
    res = solve_exact(s, queue_sum_scope="per_slot")
    best = max(naive_throughput(s, x) for x in all_schedules(s) if naive_feasible(s, x, per_slot=True))
    assert res.objective == pytest.approx(best)


def test_node_limit_truncates():
    s = generate_scenario(TrafficProfile(ProfileKind.UNIFORM, 4, 4), 0)
    full = solve_exact(s)
    cut = solve_exact(s, node_limit=3)
    assert not cut.optimal and cut.nodes_explored <= 3
    assert check_feasibility(s, cut.schedule).feasible
    assert cut.objective <= full.objective


@pytest.mark.parametrize("seed", range(10))
def test_incumbent_never_decreases_and_pruning_is_sound(seed):
    s = generate_scenario(TrafficProfile(ProfileKind.MIXED_PRIORITY, 3, 3), seed)
    seen = []
    res = solve_exact(s, on_incumbent=lambda value, sched: seen.append(value))
    assert seen == sorted(seen)
    assert res.objective == pytest.approx(brute_force_optimum(s))


def test_greedy_examples():
    alone = make_scenario([1], [1], [[2]], [1])
    assert solve_greedy(alone).schedule == Schedule.from_pairs([])
    fits = make_scenario([1], [2], [[2]], [1])
    assert solve_greedy(fits).schedule == Schedule.from_pairs([(0, 0)])
    contention = make_scenario([2, 1], [9, 9], [[3], [2]], [1])
    res = solve_greedy(contention)
    assert res.schedule == Schedule.from_pairs([(0, 0)]) and res.objective == 6 and not res.optimal


@pytest.mark.parametrize("profile", list(ProfileKind))
def test_greedy_bounded_by_exact(profile):
    for seed in range(34):
        s = generate_scenario(TrafficProfile(profile, 3, 4, slot_count=2), seed)
        g = solve_greedy(s)
        assert check_feasibility(s, g.schedule).feasible
        assert g.objective <= solve_exact(s).objective + 1e-9


def test_result_json():
    s = make_scenario([1], [2], [[2]], [1])
    data = json.loads(solve_exact(s).to_json())
    assert set(data) == {"schedule", "objective", "optimal", "nodes_explored", "wall_time_ms"}
    assert data["schedule"] == [[0, 0]]
