"""Classical baselines: depth-first branch-and-bound and a greedy allocator."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from beamqopt.model import QueueScope, Schedule, check_feasibility, exceeds, weighted_throughput
from beamqopt.scenario import Scenario


@dataclass(frozen=True)
class SolveResult:
    schedule: Schedule
    objective: float
    optimal: bool
    nodes_explored: int
    wall_time: float  # seconds

    def to_dict(self) -> dict:
        return {
            "schedule": [list(p) for p in self.schedule.sorted_pairs()],
            "objective": self.objective,
            "optimal": self.optimal,
            "nodes_explored": self.nodes_explored,
            "wall_time_ms": self.wall_time * 1000.0,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


class _Tracker:
    """Incremental resource usage for a partial schedule (dense positions)."""

    def __init__(self, s: Scenario, queue_sum_scope: QueueScope):
        self.s = s
        self.per_slot_queue = queue_sum_scope == "per_slot"
        self.slot_pos = {slot: i for i, slot in enumerate(s.slots)}
        self.unit_slot = [self.slot_pos[u.slot] for u in s.units]
        self.limits = [s.power_limits[slot] for slot in s.slots]
        self.unit_used = [False] * len(s.units)
        self.power = [0.0] * len(s.slots)
        self.sent = np.zeros((len(s.flows), len(s.slots) if self.per_slot_queue else 1))

    def _qcol(self, b: int) -> int:
        return self.unit_slot[b] if self.per_slot_queue else 0

    def fits(self, a: int, b: int) -> bool:
        s = self.s
        if self.unit_used[b]:
            return False
        slot = self.unit_slot[b]
        if exceeds(self.power[slot] + s.powers[b], self.limits[slot]):
            return False
        return not exceeds(self.sent[a, self._qcol(b)] + s.rate_matrix[a, b], s.capacities[a])

    def add(self, a: int, b: int) -> None:
        self.unit_used[b] = True
        self.power[self.unit_slot[b]] += self.s.powers[b]
        self.sent[a, self._qcol(b)] += self.s.rate_matrix[a, b]

    def remove(self, a: int, b: int) -> None:
        self.unit_used[b] = False
        self.power[self.unit_slot[b]] -= self.s.powers[b]
        self.sent[a, self._qcol(b)] -= self.s.rate_matrix[a, b]


def _to_schedule(s: Scenario, chosen: List[Tuple[int, int]]) -> Schedule:
    return Schedule.from_pairs((s.flow_ids[a], s.unit_ids[b]) for a, b in chosen)


def solve_exact(
    s: Scenario,
    node_limit: int = 10_000_000,
    queue_sum_scope: QueueScope = "all_units",
    on_incumbent: Optional[Callable[[float, Schedule], None]] = None,
) -> SolveResult:
    """Depth-first branch-and-bound over decision bits in flow-major order.

    Each node tries x=1 before x=0. A branch is cut when setting a bit would
    violate a constraint, or when the incumbent already reaches the current
    value plus every remaining positive w*r term.
    """
    if node_limit < 1:
        raise ValueError("node_limit must be >= 1")
    t0 = time.perf_counter()
    n_units = len(s.units)
    order = [(a, b) for a in range(len(s.flows)) for b in range(n_units)]
    values = [float(s.value_matrix[a, b]) for a, b in order]
    # optimistic completion value from position i onwards
    tail = [0.0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        tail[i] = tail[i + 1] + max(values[i], 0.0)

    tracker = _Tracker(s, queue_sum_scope)
    chosen: List[Tuple[int, int]] = []
    best_value = 0.0
    best: List[Tuple[int, int]] = []
    nodes = 0
    truncated = False

    def visit(i: int, value: float) -> None:
        nonlocal best_value, best, nodes, truncated
        if truncated:
            return
        nodes += 1
        if nodes > node_limit:
            truncated = True
            nodes = node_limit
            return
        if value > best_value:
            best_value, best = value, list(chosen)
            if on_incumbent is not None:
                on_incumbent(best_value, _to_schedule(s, best))
        if i == len(order) or value + tail[i] <= best_value:
            return
        a, b = order[i]
        if values[i] > 0 and tracker.fits(a, b):
            tracker.add(a, b)
            chosen.append((a, b))
            visit(i + 1, value + values[i])
            chosen.pop()
            tracker.remove(a, b)
        visit(i + 1, value)

    visit(0, 0.0)
    schedule = _to_schedule(s, best)
    return SolveResult(
        schedule=schedule,
        objective=weighted_throughput(s, schedule),
        optimal=not truncated,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
    )


def solve_greedy(s: Scenario, queue_sum_scope: QueueScope = "all_units") -> SolveResult:
    """Accept (flow, unit) pairs by descending w*r while the schedule stays feasible."""
    t0 = time.perf_counter()
    value = s.value_matrix
    pairs = sorted(
        ((a, b) for a in range(len(s.flows)) for b in range(len(s.units))),
        key=lambda p: (-value[p], s.flow_ids[p[0]], s.unit_ids[p[1]]),
    )
    tracker = _Tracker(s, queue_sum_scope)
    chosen = []
    for a, b in pairs:
        if tracker.fits(a, b):
            tracker.add(a, b)
            chosen.append((a, b))
    schedule = _to_schedule(s, chosen)
    assert check_feasibility(s, schedule, queue_sum_scope).feasible
    return SolveResult(
        schedule=schedule,
        objective=weighted_throughput(s, schedule),
        optimal=False,
        nodes_explored=len(pairs),
        wall_time=time.perf_counter() - t0,
    )
