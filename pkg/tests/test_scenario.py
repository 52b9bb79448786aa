from __future__ import annotations

import json
from collections import defaultdict

import pytest
from hypothesis import given, settings, strategies as st

from beamqopt import ConfigurationError, DomainError, Scenario, TrafficProfile, generate_scenario, rescale_scenario
from beamqopt.model import check_feasibility
from beamqopt.scenario import ProfileKind

from helpers import all_schedules, make_scenario, naive_feasible


def test_uniform_example_structure():
    s = generate_scenario(TrafficProfile(ProfileKind.UNIFORM, 2, 2), 7)
    assert len(s.flows) == 2 and len(s.units) == 2
    assert len({(u.beam, u.frequency, u.slot) for u in s.units}) == 2
    for f in s.flows:
        assert f.weight > 0 and f.queue_capacity >= 0
        assert set(f.rates) == {u.id for u in s.units}
    assert all(u.slot in s.power_limits for u in s.units)


@pytest.mark.parametrize("kind", list(ProfileKind))
def test_generation_is_deterministic(kind):
    p = TrafficProfile(kind, 5, 6, beam_count=3, slot_count=2)
    assert generate_scenario(p, 11).to_json() == generate_scenario(p, 11).to_json()
    assert generate_scenario(p, 11).to_json() != generate_scenario(p, 12).to_json()


def test_hotspot_weight_share_example():
    s = generate_scenario(TrafficProfile(ProfileKind.HOTSPOT, 8, 4, beam_count=4, hotspot_fraction=0.25), 3)
    per_beam = defaultdict(float)
    for f in s.flows:
        per_beam[f.beam] += f.weight
    assert max(per_beam.values()) >= 0.5 * sum(per_beam.values())


@pytest.mark.parametrize("seed", range(30))
def test_hotspot_share_holds_across_seeds(seed):
    p = TrafficProfile(ProfileKind.HOTSPOT, 9, 8, beam_count=4)
    s = generate_scenario(p, seed)
    hot = sorted({f.beam for f in s.flows}, key=lambda b: -sum(f.weight for f in s.flows if f.beam == b))
    top = sum(f.weight for f in s.flows if f.beam in hot[: p.hot_beam_count])
    assert top >= 0.5 * sum(f.weight for f in s.flows)


@pytest.mark.parametrize("seed", range(20))
def test_mixed_priority_uses_two_disjoint_bands(seed):
    p = TrafficProfile(ProfileKind.MIXED_PRIORITY, 4, 2)
    s = generate_scenario(p, seed)
    used = {i for f in s.flows for i, (lo, hi) in enumerate(p.priority_bands) if lo <= f.weight <= hi}
    assert len(used) >= 2


@pytest.mark.parametrize("flows,beams", [(2, 2), (5, 2), (7, 3), (4, 4), (3, 5)])
def test_uniform_beam_balance(flows, beams):
    for seed in range(10):
        s = generate_scenario(TrafficProfile(ProfileKind.UNIFORM, flows, beams * 2, beam_count=beams), seed)
        counts = [sum(1 for f in s.flows if f.beam == b) for b in range(beams)]
        assert max(counts) - min(counts) <= 1


def test_generated_values_are_quantized():
    p = TrafficProfile(ProfileKind.UNIFORM, 4, 4, dq=0.5, dp=0.25, rate_range=(1.0, 3.0))
    s = generate_scenario(p, 5)
    for f in s.flows:
        assert (f.queue_capacity / 0.5).is_integer()
        assert all((r / 0.5).is_integer() for r in f.rates.values())
    assert all((u.power_required / 0.25).is_integer() for u in s.units)
    assert all((v / 0.25).is_integer() for v in s.power_limits.values())


@pytest.mark.parametrize(
    "kw",
    [
        dict(flow_count=0),
        dict(unit_count=0),
        dict(beam_count=0),
        dict(volume_range=(3.0, 1.0)),
        dict(rate_range=(0.0, 1.0)),
        dict(weight_choices=()),
        dict(priority_bands=((1.0, 5.0), (4.0, 8.0))),
        dict(hotspot_fraction=0.0),
    ],
)
def test_invalid_profiles_raise_configuration_error(kw):
    base = dict(kind=ProfileKind.UNIFORM, flow_count=2, unit_count=2)
    with pytest.raises(ConfigurationError):
        TrafficProfile(**{**base, **kw})


def test_rescale_worked_example():
    s = make_scenario([1], [1000], [[4]], [10], limits={0: 500})
    r = rescale_scenario(s, 500)
    assert r.flows[0].queue_capacity == 2.0
    assert r.flows[0].weight == 1 and r.dq == s.dq and r.dp == s.dp
    assert r.flows[0].rates[0] == pytest.approx(4 / 500)
    assert r.units[0].power_required == pytest.approx(10 / 500)
    assert r.power_limits[0] == 1.0


def test_rescale_identity_and_errors():
    s = generate_scenario(TrafficProfile(ProfileKind.UNIFORM, 3, 2), 1)
    assert rescale_scenario(s, 1).to_json() == s.to_json()
    for bad in (0, -2):
        with pytest.raises(DomainError):
            rescale_scenario(s, bad)


@pytest.mark.parametrize("factor", [10, 3, 0.1, 7.3])
def test_rescale_preserves_feasible_set(factor):
    s = generate_scenario(TrafficProfile(ProfileKind.HOTSPOT, 3, 2), 4)
    r = rescale_scenario(s, factor)
    before = [check_feasibility(s, x).feasible for x in all_schedules(s)]
    after = [check_feasibility(r, x).feasible for x in all_schedules(r)]
    assert before == after
    assert before == [naive_feasible(s, x) for x in all_schedules(s)]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), factor=st.floats(0.01, 1000))
def test_rescale_feasibility_property(seed, factor):
    s = generate_scenario(TrafficProfile(ProfileKind.MIXED_PRIORITY, 2, 3, slot_count=2), seed)
    r = rescale_scenario(s, factor)
    for x in all_schedules(s):
        assert check_feasibility(s, x).feasible == check_feasibility(r, x).feasible


def test_json_round_trip_and_keys(tmp_path):
    s = generate_scenario(TrafficProfile(ProfileKind.MIXED_PRIORITY, 3, 4, slot_count=2, dq=0.1), 9)
    path = tmp_path / "s.json"
    s.save(path)
    data = json.loads(path.read_text())
    assert set(data) == {"flows", "units", "power_limits", "dq", "dp", "rng_seed"}
    assert {"id", "weight", "queue_capacity", "rates"} <= set(data["flows"][0])
    assert set(data["units"][0]) == {"id", "beam", "frequency", "slot", "power_required"}
    back = Scenario.load(path)
    assert back == s
    assert back.to_json() == s.to_json()


def test_scenario_invariants_enforced():
    with pytest.raises(DomainError):
        make_scenario([1], [1], [[1, 1]], [1, 1], slots=[0, 1], limits={0: 1})
    with pytest.raises(DomainError):
        make_scenario([0], [1], [[1]], [1])
    with pytest.raises(DomainError):
        make_scenario([1], [1], [[1]], [1], dq=0)
    with pytest.raises(DomainError):
        Scenario.from_dict({"flows": []})
