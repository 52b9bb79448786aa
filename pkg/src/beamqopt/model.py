"""Constrained scheduling model: objective, feasibility check and repair."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Literal, Mapping, Tuple

from beamqopt.errors import DomainError
from beamqopt.scenario import Scenario

QueueScope = Literal["all_units", "per_slot"]
QUEUE_SCOPES = ("all_units", "per_slot")

REL_TOL = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Set of (flow-id, unit-id) assignments, i.e. the decision bits that are 1."""

    pairs: FrozenSet[Tuple[int, int]] = frozenset()

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, int]]) -> "Schedule":
        return cls(frozenset((int(k), int(u)) for k, u in pairs))

    @classmethod
    def from_mapping(cls, assignments: Mapping[int, Iterable[int]]) -> "Schedule":
        return cls.from_pairs((k, u) for k, units in assignments.items() for u in units)

    @property
    def assignments(self) -> Dict[int, FrozenSet[int]]:
        out: Dict[int, set] = {}
        for k, u in self.pairs:
            out.setdefault(k, set()).add(u)
        return {k: frozenset(v) for k, v in sorted(out.items())}

    def sorted_pairs(self) -> List[Tuple[int, int]]:
        return sorted(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def to_text(self) -> str:
        return "".join(f"{k} {u}\n" for k, u in self.sorted_pairs())

    @classmethod
    def from_text(cls, text: str) -> "Schedule":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DomainError(f"line {lineno}: expected 'flow_id unit_id', got {line!r}")
            pairs.append((int(parts[0]), int(parts[1])))
        return cls.from_pairs(pairs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Schedule":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    conflict_violations: List[int] = field(default_factory=list)
    power_violations: List[Tuple[int, float, float]] = field(default_factory=list)
    queue_violations: List[Tuple[int, float, float]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def exceeds(amount: float, limit: float) -> bool:
    """``amount > limit`` beyond a relative tolerance of 1e-9."""
    return amount - limit > REL_TOL * max(abs(amount), abs(limit))


def _check_ids(s: Scenario, x: Schedule) -> None:
    for k, u in x.pairs:
        if k not in s.flow_pos:
            raise DomainError(f"unknown flow id {k}")
        if u not in s.unit_pos:
            raise DomainError(f"unknown unit id {u}")


def weighted_throughput(s: Scenario, x: Schedule) -> float:
    _check_ids(s, x)
    flows = s.flows
    return float(sum(flows[s.flow_pos[k]].weight * flows[s.flow_pos[k]].rates[u] for k, u in x.sorted_pairs()))


def _queue_groups(s: Scenario, pairs, queue_sum_scope: QueueScope) -> Dict[Tuple[int, int | None], List[Tuple[int, int]]]:
    unit_of = {u.id: u for u in s.units}
    groups: Dict[Tuple[int, int | None], List[Tuple[int, int]]] = {}
    for k, u in pairs:
        key = (k, unit_of[u].slot if queue_sum_scope == "per_slot" else None)
        groups.setdefault(key, []).append((k, u))
    return groups


def _violations(s: Scenario, x: Schedule, queue_sum_scope: QueueScope):
    """Violation lists plus the set of assignments taking part in any violation."""
    if queue_sum_scope not in QUEUE_SCOPES:
        raise DomainError(f"queue_sum_scope must be one of {QUEUE_SCOPES}")
    _check_ids(s, x)
    pairs = x.sorted_pairs()
    unit_of = {u.id: u for u in s.units}
    flow_of = {f.id: f for f in s.flows}
    involved = set()

    by_unit: Dict[int, List[Tuple[int, int]]] = {}
    by_slot: Dict[int, List[Tuple[int, int]]] = {}
    for k, u in pairs:
        by_unit.setdefault(u, []).append((k, u))
        by_slot.setdefault(unit_of[u].slot, []).append((k, u))

    conflicts = []
    for u, group in sorted(by_unit.items()):
        if len(group) >= 2:
            conflicts.append(u)
            involved.update(group)

    power_bad = []
    for slot, group in sorted(by_slot.items()):
        used = sum(unit_of[u].power_required for _, u in group)
        if exceeds(used, s.power_limits[slot]):
            power_bad.append((slot, used, s.power_limits[slot]))
            involved.update(group)

    queue_bad = []
    groups = _queue_groups(s, pairs, queue_sum_scope)
    for key in sorted(groups, key=lambda kv: (kv[0], -1 if kv[1] is None else kv[1])):
        k = key[0]
        sent = sum(flow_of[k].rates[u] for _, u in groups[key])
        if exceeds(sent, flow_of[k].queue_capacity):
            queue_bad.append((k, sent, flow_of[k].queue_capacity))
            involved.update(groups[key])

    report = FeasibilityReport(
        feasible=not (conflicts or power_bad or queue_bad),
        conflict_violations=conflicts,
        power_violations=power_bad,
        queue_violations=queue_bad,
    )
    return report, involved


def check_feasibility(s: Scenario, x: Schedule, queue_sum_scope: QueueScope = "all_units") -> FeasibilityReport:
    """Check resource conflicts, per-slot power budgets and per-flow queue backlogs.

    With ``queue_sum_scope="per_slot"`` the backlog is checked separately in
    every slot instead of over the whole horizon.
    """
    return _violations(s, x, queue_sum_scope)[0]


def repair_schedule(s: Scenario, x: Schedule, queue_sum_scope: QueueScope = "all_units") -> Schedule:
    """Drop the least valuable violating assignment until the schedule is feasible.

    Value is w_k * r_ku; ties go to the lower flow id, then the lower unit id.
    """
    value = s.value_matrix
    current = x
    while True:
        report, involved = _violations(s, current, queue_sum_scope)
        if report.feasible:
            return current
        drop = min(involved, key=lambda p: (value[s.flow_pos[p[0]], s.unit_pos[p[1]]], p[0], p[1]))
        current = Schedule(current.pairs - {drop})
