"""Shared fixtures-by-function and independent oracles for the test suite.

The oracles here deliberately avoid the package's own evaluation code: they
work from plain Python lists built out of the Scenario fields.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, Iterator, List, Tuple

import numpy as np

from beamqopt.model import Schedule
from beamqopt.scenario import Flow, ProfileKind, ResourceUnit, Scenario, TrafficProfile, generate_scenario


def make_scenario(
    weights: List[float],
    capacities: List[float],
    rates: List[List[float]],
    powers: List[float],
    slots: List[int] | None = None,
    limits: Dict[int, float] | None = None,
    dq: float = 1.0,
    dp: float = 1.0,
) -> Scenario:
    """Hand-built instance: ``rates[k][u]`` for flow k on unit u, units on beams 0, 1, 2, ..."""
    slots = slots or [0] * len(powers)
    limits = limits or {s: 100.0 for s in set(slots)}
    units = [ResourceUnit(u, u, 0, slots[u], float(p)) for u, p in enumerate(powers)]
    flows = [
        Flow(k, float(w), float(c), {u: float(r) for u, r in enumerate(rates[k])})
        for k, (w, c) in enumerate(zip(weights, capacities))
    ]
    return Scenario(flows, units, {s: float(v) for s, v in limits.items()}, dq, dp)


def toy3() -> Scenario:
    """1 flow, 1 unit: one decision bit, one power slack bit, one queue slack bit."""
    return make_scenario([2], [1], [[1]], [1], limits={0: 1})


def toy6() -> Scenario:
    """2 flows contending for 1 unit: 2 decision + 1 power + 1 + 2 queue slack bits."""
    return make_scenario([1, 2], [1, 2], [[1], [2]], [1], limits={0: 1})


def acceptance8_scenario() -> Scenario:
    """The 2-flow / 2-unit uniform instance used for the p=1 success check."""
    return generate_scenario(TrafficProfile(ProfileKind.UNIFORM, 2, 2), 7)


SMALL_PROFILE_KW = dict(volume_range=(1.0, 3.0), rate_range=(1.0, 2.0), power_range=(1.0, 2.0))


def small_profiles(flows: int, units: int, **extra) -> List[TrafficProfile]:
    kw = {**SMALL_PROFILE_KW, **extra}
    return [TrafficProfile(kind, flows, units, **kw) for kind in ProfileKind]


# --- independent oracles ---------------------------------------------------


def all_schedules(s: Scenario) -> Iterator[Schedule]:
    pairs = [(f.id, u.id) for f in s.flows for u in s.units]
    for mask in itertools.product((0, 1), repeat=len(pairs)):
        yield Schedule.from_pairs(p for p, m in zip(pairs, mask) if m)


def naive_throughput(s: Scenario, x: Schedule) -> float:
    total = 0.0
    for f in s.flows:
        for u in s.units:
            if (f.id, u.id) in x.pairs:
                total += f.weight * f.rates[u.id]
    return total


def naive_feasible(s: Scenario, x: Schedule, per_slot: bool = False) -> bool:
    """Direct transcription of the three constraint families, strict-ish with 1e-9 relative slack."""

    def over(a: float, b: float) -> bool:
        return a > b + 1e-9 * max(abs(a), abs(b))

    for u in s.units:
        if sum(1 for f in s.flows if (f.id, u.id) in x.pairs) > 1:
            return False
    for slot, limit in s.power_limits.items():
        used = sum(u.power_required for f in s.flows for u in s.units if u.slot == slot and (f.id, u.id) in x.pairs)
        if over(used, limit):
            return False
    for f in s.flows:
        groups = [[u for u in s.units if u.slot == slot] for slot in s.power_limits] if per_slot else [s.units]
        for group in groups:
            sent = sum(f.rates[u.id] for u in group if (f.id, u.id) in x.pairs)
            if over(sent, f.queue_capacity):
                return False
    return True


def brute_force_optimum(s: Scenario) -> float:
    return max(naive_throughput(s, x) for x in all_schedules(s) if naive_feasible(s, x))


def _bits_for(cap: float, quantum: float) -> int:
    # integer doubling loop, independent of the package's log2 path
    ratio = cap / quantum
    if ratio < 1:
        return 1
    m = 0
    while 2 ** (m + 1) <= ratio:
        m += 1
    return m + 1


def symbolic_energy(s: Scenario, lambdas: Tuple[float, float, float], x: np.ndarray) -> float:
    """Penalty Hamiltonian evaluated term by term from the scenario.

    Layout: decision bits flow-major, then power slack per slot, then queue
    slack per flow, each slack block little-endian.
    """
    l1, l2, l3 = lambdas
    K, U = len(s.flows), len(s.units)
    xd = {(f.id, u.id): int(x[a * U + b]) for a, f in enumerate(s.flows) for b, u in enumerate(s.units)}
    pos = K * U
    slots = sorted({u.slot for u in s.units})
    power_slack = {}
    for slot in slots:
        m = _bits_for(s.power_limits[slot], s.dp)
        power_slack[slot] = [int(x[pos + b]) for b in range(m)]
        pos += m
    queue_slack = {}
    for f in s.flows:
        m = _bits_for(f.queue_capacity, s.dq)
        queue_slack[f.id] = [int(x[pos + b]) for b in range(m)]
        pos += m
    assert pos == len(x)

    h_obj = -sum(f.weight * f.rates[u.id] * xd[(f.id, u.id)] for f in s.flows for u in s.units)
    h1 = 0.0
    for u in s.units:
        S = sum(xd[(f.id, u.id)] for f in s.flows)
        h1 += (S - 0.5) ** 2 - 0.25
    h2 = 0.0
    for slot in slots:
        used = sum(u.power_required * xd[(f.id, u.id)] for u in s.units if u.slot == slot for f in s.flows)
        slack = sum(2**b * s.dp * y for b, y in enumerate(power_slack[slot]))
        h2 += (used + slack - s.power_limits[slot]) ** 2
    h3 = 0.0
    for f in s.flows:
        sent = sum(f.rates[u.id] * xd[(f.id, u.id)] for u in s.units)
        slack = sum(2**b * s.dq * z for b, z in enumerate(queue_slack[f.id]))
        h3 += (sent + slack - f.queue_capacity) ** 2
    return h_obj + l1 * h1 + l2 * h2 + l3 * h3


def naive_qubo_energy(q, x) -> float:
    """O(n^2) double loop over the dense upper-triangular coefficient table."""
    n = q.n
    coeff = [[0.0] * n for _ in range(n)]
    for i, v in q.linear.items():
        coeff[i][i] = v
    for (i, j), v in q.quadratic.items():
        coeff[i][j] = v
    total = q.offset
    for i in range(n):
        for j in range(i, n):
            total += coeff[i][j] * x[i] * x[j]
    return total


def bits_of(z: int, n: int) -> np.ndarray:
    return np.array([(z >> i) & 1 for i in range(n)], dtype=np.int64)


# --- dense circuit oracle ---------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def embed(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Full 2^n operator acting as ``op`` on ``qubit`` (qubit 0 = least significant index bit)."""
    full = np.ones((1, 1), dtype=complex)
    for j in reversed(range(n)):
        full = np.kron(full, op if j == qubit else I2)
    return full


def dense_energy_diag(q) -> np.ndarray:
    return np.array([naive_qubo_energy(q, bits_of(z, q.n)) for z in range(2**q.n)])


def binomial_mass(d: int) -> List[float]:
    return [math.comb(d, h) / 2**d for h in range(d + 1)]


def qaoa_p1(q, seed: int, iters: int = 200):
    """p=1 transverse-field run seeded the same way as the ``qaoa`` solver."""
    from beamqopt.quantum import HillClimbConfig, MixerSpec, init_uniform, random_start, run_ansatz, spsa_optimize
    from beamqopt.quantum.optimize import resolve_gamma_scale

    start_seed, opt_seed = np.random.SeedSequence(seed).spawn(2)
    init = init_uniform(q.n)
    start = random_start(1, start_seed, resolve_gamma_scale(q, HillClimbConfig()))
    params, trace = spsa_optimize(q, init, MixerSpec(), start, iters=iters, seed=opt_seed)
    return run_ansatz(q, params, init, MixerSpec()), params, trace
