"""Solution-quality metrics: throughput ratio, Hamming distance, distance profiles."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from beamqopt.errors import DomainError
from beamqopt.model import Schedule, repair_schedule, weighted_throughput
from beamqopt.qubo import QuboModel, as_bits, decode, minimizers
from beamqopt.quantum.statevector import Statevector, format_bits
from beamqopt.scenario import Scenario


def hamming_distance(a: Sequence[int] | str, b: Sequence[int] | str) -> int:
    if len(a) != len(b):
        raise DomainError(f"bitstrings differ in length ({len(a)} vs {len(b)})")
    return sum(1 for x, y in zip(a, b) if int(x) != int(y))


def throughput_ratio(s: Scenario, candidate: Schedule, optimum: Schedule) -> float:
    best = weighted_throughput(s, optimum)
    got = weighted_throughput(s, candidate)
    if best == 0:
        if got == 0:
            return 1.0
        raise DomainError("optimum has zero throughput but the candidate does not")
    return got / best


@dataclass(frozen=True)
class HammingProfile:
    distances: List[int]
    probability_mass: List[float]
    min_throughput_gap: List[float]  # nan where no basis state sits at that distance

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["distance", "probability", "min_throughput_gap"])
        for d, p, g in zip(self.distances, self.probability_mass, self.min_throughput_gap):
            w.writerow([d, format(p, ".17g"), format(g, ".17g")])
        return buf.getvalue()


def _distribution(source: Statevector | Mapping[str, int], n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(basis indices, probabilities) with zero-probability states dropped."""
    if isinstance(source, Statevector):
        if source.n != n:
            raise DomainError(f"state has {source.n} qubits, model has {n} variables")
        probs = source.probabilities
        idx = np.flatnonzero(probs > 0)
        return idx, probs[idx]
    total = sum(source.values())
    if total <= 0:
        raise DomainError("empty histogram")
    idx, weights = [], []
    for key, count in source.items():
        bits = as_bits(key, n)
        idx.append(int(sum(int(b) << i for i, b in enumerate(bits))))
        weights.append(count / total)
    return np.array(idx, dtype=np.int64), np.array(weights)


def _popcount(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


def _decision_mask(q: QuboModel) -> int:
    bits = sorted(q.index.decision.values())
    if bits != list(range(len(bits))):
        raise DomainError("decision bits must occupy the lowest indices")
    return (1 << len(bits)) - 1


def _pattern_schedule(q: QuboModel, pattern: int) -> Schedule:
    return Schedule.from_pairs(pair for pair, i in q.index.decision.items() if (pattern >> i) & 1)


def hamming_profile(
    source: Statevector | Mapping[str, int],
    q: QuboModel,
    s: Scenario,
    optimum_bits: Sequence[int] | str,
    decision_only: bool = True,
    repair: bool = True,
) -> HammingProfile:
    """Probability mass and best throughput gap per Hamming distance from ``optimum_bits``.

    Distances count decision bits only unless ``decision_only`` is False.
    Decoded schedules are repaired before their throughput is compared.
    """
    opt = as_bits(optimum_bits, q.n)
    opt_index = int(sum(int(b) << i for i, b in enumerate(opt)))
    best = weighted_throughput(s, decode(q, opt))
    mask = _decision_mask(q)
    idx, probs = _distribution(source, q.n)

    patterns = idx & mask
    if decision_only:
        dist = _popcount(patterns ^ (opt_index & mask))
        size = mask.bit_length() + 1
    else:
        dist = _popcount(idx ^ opt_index)
        size = q.n + 1
    mass = np.bincount(dist, weights=probs, minlength=size)

    unique, inverse = np.unique(patterns, return_inverse=True)
    gap_of = np.empty(len(unique))
    for a, pattern in enumerate(unique):
        sched = _pattern_schedule(q, int(pattern))
        if repair:
            sched = repair_schedule(s, sched, q.queue_sum_scope)
        gap_of[a] = best - weighted_throughput(s, sched)
    gaps = np.full(size, np.inf)
    np.minimum.at(gaps, dist, gap_of[inverse])
    gaps[np.isinf(gaps)] = math.nan
    return HammingProfile(list(range(size)), [float(m) for m in mass], [float(g) for g in gaps])


def success_probability(v: Statevector, q: QuboModel) -> float:
    """Probability of measuring any minimum-energy bitstring."""
    _, ground = minimizers(q)
    return float(v.probabilities[ground].sum())


def schedule_distribution(
    v: Statevector | Mapping[str, int], q: QuboModel, s: Scenario, repair: bool = True
) -> Dict[Schedule, float]:
    """Measurement probability of each decoded (and by default repaired) schedule."""
    idx, probs = _distribution(v, q.n)
    mask = _decision_mask(q)
    per_pattern = np.bincount(idx & mask, weights=probs, minlength=mask + 1)
    out: Dict[Schedule, float] = {}
    for pattern in np.flatnonzero(per_pattern):
        sched = _pattern_schedule(q, int(pattern))
        if repair:
            sched = repair_schedule(s, sched, q.queue_sum_scope)
        out[sched] = out.get(sched, 0.0) + float(per_pattern[pattern])
    return out


def most_probable_schedule(v: Statevector | Mapping[str, int], q: QuboModel, s: Scenario, repair: bool = True) -> Schedule:
    """Mode of ``schedule_distribution``; ties go to the schedule with the smaller sorted pair list."""
    dist = schedule_distribution(v, q, s, repair)
    return max(sorted(dist, key=lambda sc: sc.sorted_pairs()), key=lambda sc: dist[sc])


def histogram_csv(v: Statevector) -> str:
    """``bitstring, probability`` rows (qubit 0 first) for every state with non-zero probability."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bitstring", "probability"])
    probs = v.probabilities
    for z in np.flatnonzero(probs > 0):
        w.writerow([format_bits(int(z), v.n), format(float(probs[z]), ".17g")])
    return buf.getvalue()
