"""Problem instances: resource units, flows, per-slot power limits.

A resource unit is one (beam, frequency, slot) tuple. Flows carry a priority
weight, a queue backlog and an achievable rate on every unit. Instances are
immutable; ``rescale_scenario`` returns a new instance.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from beamqopt.errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class ResourceUnit:
    id: int
    beam: int
    frequency: int
    slot: int
    power_required: float

    def __post_init__(self) -> None:
        if self.power_required < 0:
            raise DomainError(f"unit {self.id}: power_required must be >= 0")


@dataclass(frozen=True)
class Flow:
    id: int
    weight: float
    queue_capacity: float
    rates: Dict[int, float]
    # home beam; informational only, constraints never read it
    beam: int | None = None

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise DomainError(f"flow {self.id}: weight must be > 0")
        if self.queue_capacity < 0:
            raise DomainError(f"flow {self.id}: queue_capacity must be >= 0")
        if any(r < 0 for r in self.rates.values()):
            raise DomainError(f"flow {self.id}: rates must be >= 0")


@dataclass(frozen=True)
class Scenario:
    flows: List[Flow]
    units: List[ResourceUnit]
    power_limits: Dict[int, float]
    dq: float = 1.0
    dp: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        unit_ids = [u.id for u in self.units]
        if len(set(unit_ids)) != len(unit_ids):
            raise DomainError("duplicate resource-unit id")
        triples = [(u.beam, u.frequency, u.slot) for u in self.units]
        if len(set(triples)) != len(triples):
            raise DomainError("duplicate (beam, frequency, slot) tuple")
        flow_ids = [f.id for f in self.flows]
        if len(set(flow_ids)) != len(flow_ids):
            raise DomainError("duplicate flow id")
        for f in self.flows:
            if set(f.rates) != set(unit_ids):
                raise DomainError(f"flow {f.id}: rates must cover exactly the scenario's units")
        for u in self.units:
            if u.slot not in self.power_limits:
                raise DomainError(f"slot {u.slot} has no power limit")
        if any(not p > 0 for p in self.power_limits.values()):
            raise DomainError("power limits must be > 0")
        if not (self.dq > 0 and self.dp > 0):
            raise DomainError("dq and dp must be > 0")

    # dense views, flow-major / unit-minor in list order

    @cached_property
    def flow_ids(self) -> Tuple[int, ...]:
        return tuple(f.id for f in self.flows)

    @cached_property
    def unit_ids(self) -> Tuple[int, ...]:
        return tuple(u.id for u in self.units)

    @cached_property
    def flow_pos(self) -> Dict[int, int]:
        return {fid: i for i, fid in enumerate(self.flow_ids)}

    @cached_property
    def unit_pos(self) -> Dict[int, int]:
        return {uid: j for j, uid in enumerate(self.unit_ids)}

    @cached_property
    def rate_matrix(self) -> np.ndarray:
        return np.array([[f.rates[uid] for uid in self.unit_ids] for f in self.flows], dtype=float).reshape(
            len(self.flows), len(self.units)
        )

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([f.weight for f in self.flows], dtype=float)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([f.queue_capacity for f in self.flows], dtype=float)

    @cached_property
    def powers(self) -> np.ndarray:
        return np.array([u.power_required for u in self.units], dtype=float)

    @cached_property
    def slots(self) -> Tuple[int, ...]:
        """Distinct slot indices that carry at least one unit, ascending."""
        return tuple(sorted({u.slot for u in self.units}))

    @cached_property
    def value_matrix(self) -> np.ndarray:
        """w_k * r_ku for every (flow, unit) pair."""
        return self.weights[:, None] * self.rate_matrix

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flows": [
                {
                    "id": f.id,
                    "weight": f.weight,
                    "queue_capacity": f.queue_capacity,
                    "rates": {str(uid): f.rates[uid] for uid in self.unit_ids},
                    **({"beam": f.beam} if f.beam is not None else {}),
                }
                for f in self.flows
            ],
            "units": [
                {
                    "id": u.id,
                    "beam": u.beam,
                    "frequency": u.frequency,
                    "slot": u.slot,
                    "power_required": u.power_required,
                }
                for u in self.units
            ],
            "power_limits": {str(s): self.power_limits[s] for s in sorted(self.power_limits)},
            "dq": self.dq,
            "dp": self.dp,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scenario":
        try:
            units = [
                ResourceUnit(
                    id=int(u["id"]),
                    beam=int(u["beam"]),
                    frequency=int(u["frequency"]),
                    slot=int(u["slot"]),
                    power_required=float(u["power_required"]),
                )
                for u in data["units"]
            ]
            flows = [
                Flow(
                    id=int(f["id"]),
                    weight=float(f["weight"]),
                    queue_capacity=float(f["queue_capacity"]),
                    rates={int(k): float(v) for k, v in f["rates"].items()},
                    beam=int(f["beam"]) if f.get("beam") is not None else None,
                )
                for f in data["flows"]
            ]
            return cls(
                flows=flows,
                units=units,
                power_limits={int(k): float(v) for k, v in data["power_limits"].items()},
                dq=float(data.get("dq", 1.0)),
                dp=float(data.get("dp", 1.0)),
                rng_seed=int(data.get("rng_seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed scenario: {exc!r}") from exc

    def to_json(self) -> str:
        # json emits floats via repr, which round-trips all 17 significant digits
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_json(Path(path).read_text())


class ProfileKind(str, enum.Enum):
    UNIFORM = "uniform"
    HOTSPOT = "hotspot"
    MIXED_PRIORITY = "mixed_priority"


@dataclass(frozen=True)
class TrafficProfile:
    """Generator settings.

    Volumes and rates are given in queue quanta (multiples of ``dq``), unit
    powers in power quanta (multiples of ``dp``).
    """

    kind: ProfileKind
    flow_count: int
    unit_count: int
    beam_count: int = 2
    slot_count: int = 1
    volume_range: Tuple[float, float] = (1.0, 4.0)
    rate_range: Tuple[float, float] = (1.0, 2.0)
    weight_choices: Tuple[float, ...] = (1.0, 2.0, 4.0)
    priority_bands: Tuple[Tuple[float, float], ...] = ((1.0, 2.0), (8.0, 16.0))
    hotspot_fraction: float = 0.25
    hotspot_share: float = 0.5
    power_range: Tuple[float, float] = (1.0, 2.0)
    power_budget_fraction: float = 0.75
    offbeam_rate_factor: float = 0.5
    correlated_weights: bool = False
    dq: float = 1.0
    dp: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        for name in ("flow_count", "unit_count", "beam_count", "slot_count"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        for name in ("volume_range", "rate_range", "power_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigurationError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if not self.weight_choices or any(w <= 0 for w in self.weight_choices):
            raise ConfigurationError("weight_choices must be non-empty and positive")
        if len(self.priority_bands) < 2:
            raise ConfigurationError("priority_bands needs at least two bands")
        bands = sorted(self.priority_bands)
        for lo, hi in bands:
            if not (0 < lo <= hi):
                raise ConfigurationError(f"priority band {(lo, hi)} is empty or non-positive")
        for (_, hi), (lo, _) in zip(bands, bands[1:]):
            if lo <= hi:
                raise ConfigurationError("priority bands must be disjoint")
        if not (0 < self.hotspot_fraction <= 1):
            raise ConfigurationError("hotspot_fraction must be in (0, 1]")
        if not (0 < self.hotspot_share <= 1):
            raise ConfigurationError("hotspot_share must be in (0, 1]")
        if not self.power_budget_fraction > 0:
            raise ConfigurationError("power_budget_fraction must be > 0")
        if self.offbeam_rate_factor < 0:
            raise ConfigurationError("offbeam_rate_factor must be >= 0")
        if not (self.dq > 0 and self.dp > 0):
            raise ConfigurationError("dq and dp must be > 0")

    @property
    def hot_beam_count(self) -> int:
        return min(self.beam_count, max(1, round(self.hotspot_fraction * self.beam_count)))


def _quantize(value: float, quantum: float, minimum: int = 0) -> float:
    return max(minimum, int(round(value / quantum))) * quantum


def _round_robin(order: Sequence[int], beams: Sequence[int]) -> Dict[int, int]:
    return {k: beams[i % len(beams)] for i, k in enumerate(order)}


def generate_scenario(profile: TrafficProfile, seed: int) -> Scenario:
    """Draw a random instance for ``profile``; identical (profile, seed) give identical output."""
    rng = np.random.default_rng(seed)
    p = profile
    n_flows, n_units, n_beams = p.flow_count, p.unit_count, p.beam_count

    units = []
    for i in range(n_units):
        slot = (i // n_beams) % p.slot_count
        freq = i // (n_beams * p.slot_count)
        power = _quantize(rng.uniform(*p.power_range), 1.0, minimum=1) * p.dp
        units.append(ResourceUnit(id=i, beam=i % n_beams, frequency=freq, slot=slot, power_required=power))

    volumes = [_quantize(rng.uniform(*p.volume_range), 1.0, minimum=1) * p.dq for _ in range(n_flows)]

    beam_perm = [int(b) for b in rng.permutation(n_beams)]
    if p.kind is ProfileKind.MIXED_PRIORITY:
        bands = sorted(p.priority_bands)
        band_of = [k % len(bands) for k in range(n_flows)]
        band_of = [int(b) for b in rng.permutation(band_of)]
        weights = [float(rng.uniform(*bands[b])) for b in band_of]
    else:
        weights = [float(rng.choice(p.weight_choices)) for _ in range(n_flows)]

    if p.correlated_weights:
        # larger backlog gets larger weight
        by_volume = sorted(range(n_flows), key=lambda k: (volumes[k], k))
        ranked = sorted(weights)
        weights = [0.0] * n_flows
        for rank, k in enumerate(by_volume):
            weights[k] = ranked[rank]

    if p.kind is ProfileKind.HOTSPOT:
        hot = beam_perm[: p.hot_beam_count]
        cold = beam_perm[p.hot_beam_count :] or hot
        by_weight = sorted(range(n_flows), key=lambda k: (-weights[k], k))
        total = sum(weights)
        hot_flows: List[int] = []
        acc = 0.0
        for k in by_weight:
            if acc >= p.hotspot_share * total:
                break
            hot_flows.append(k)
            acc += weights[k]
        cold_flows = [k for k in range(n_flows) if k not in hot_flows]
        home = {**_round_robin(hot_flows, hot), **_round_robin(cold_flows, cold)}
    else:
        home = _round_robin(range(n_flows), beam_perm)

    flows = []
    for k in range(n_flows):
        rates = {}
        for u in units:
            draw = rng.uniform(*p.rate_range)
            if u.beam == home[k]:
                rates[u.id] = _quantize(draw, 1.0, minimum=1) * p.dq
            else:
                rates[u.id] = _quantize(draw * p.offbeam_rate_factor, 1.0) * p.dq
        flows.append(Flow(id=k, weight=weights[k], queue_capacity=volumes[k], rates=rates, beam=home[k]))

    power_limits = {}
    for s in range(p.slot_count):
        demand = sum(u.power_required for u in units if u.slot == s)
        quanta = max(1, math.floor(p.power_budget_fraction * demand / p.dp + 1e-9))
        power_limits[s] = quanta * p.dp

    return Scenario(flows=flows, units=units, power_limits=power_limits, dq=p.dq, dp=p.dp, rng_seed=int(seed))


def rescale_scenario(s: Scenario, factor: float) -> Scenario:
    """Divide rates, backlogs, unit powers and power limits by ``factor``.

    Weights and the quanta ``dq``/``dp`` are left alone, so the slack-bit
    count shrinks while the feasible set is unchanged.
    """
    if not factor > 0:
        raise DomainError(f"rescale factor must be > 0, got {factor}")
    flows = [
        replace(f, queue_capacity=f.queue_capacity / factor, rates={u: r / factor for u, r in f.rates.items()})
        for f in s.flows
    ]
    units = [replace(u, power_required=u.power_required / factor) for u in s.units]
    limits = {slot: lim / factor for slot, lim in s.power_limits.items()}
    return Scenario(flows=flows, units=units, power_limits=limits, dq=s.dq, dp=s.dp, rng_seed=s.rng_seed)
