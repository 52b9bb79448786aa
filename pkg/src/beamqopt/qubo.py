"""Penalty-form QUBO compilation of a scenario.

Variable layout (bit i of a bitstring is variable i):

* decision bits x_ku, flow-major then unit-minor, indices 0 .. |K||U|-1
* power slack bits, ordered by (slot, b)
* queue slack bits, ordered by (flow, b)

Energy is ``offset + sum_i linear[i] x_i + sum_{i<j} quadratic[i, j] x_i x_j``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from beamqopt.errors import CapacityError, DomainError
from beamqopt.model import QUEUE_SCOPES, QueueScope, Schedule
from beamqopt.scenario import Scenario

Lambdas = Tuple[float, float, float]

# dense energy tables beyond this many bits are refused
MAX_TABLE_BITS = 26


class DegenerateCapacityWarning(UserWarning):
    """Capacity smaller than its slack quantum; a single slack bit is used."""


def slack_bit_count(capacity: float, quantum: float) -> int:
    """Number of binary slack bits, floor(log2(capacity / quantum)) + 1.

    Ratios below 1 (including a zero capacity) get a single bit.
    """
    if not quantum > 0:
        raise DomainError("slack quantum must be > 0")
    if capacity < 0:
        raise DomainError("capacity must be >= 0")
    ratio = capacity / quantum
    if ratio < 1:
        return 1
    m = math.floor(math.log2(ratio))
    # guard floor() against log2 rounding at exact powers of two
    while 2.0 ** (m + 1) <= ratio:
        m += 1
    while 2.0**m > ratio:
        m -= 1
    return m + 1


@dataclass(frozen=True)
class SlackConstraint:
    """One squared-equality penalty: (sum coef*x + sum 2^b*quantum*y - capacity)^2."""

    kind: str  # "power" or "queue"
    key: Any  # slot, flow id, or (flow id, slot)
    terms: Tuple[Tuple[int, float], ...]
    capacity: float
    quantum: float
    slack_bits: Tuple[int, ...]

    def slack_weights(self) -> List[float]:
        return [2.0**b * self.quantum for b in range(len(self.slack_bits))]

    def residual(self, x: np.ndarray) -> float:
        return self.capacity - sum(c * x[i] for i, c in self.terms)

    def best_slack(self, x: np.ndarray) -> int:
        """Slack integer t minimising (used + t*quantum - capacity)^2 over the available bits."""
        top = 2 ** len(self.slack_bits) - 1
        return int(min(max(round(self.residual(x) / self.quantum), 0), top))


@dataclass(frozen=True)
class VariableIndex:
    decision: Dict[Tuple[int, int], int]
    power_slack: Dict[Tuple[int, int], int]
    queue_slack: Dict[Tuple[Any, int], int]
    total_bits: int

    @property
    def decision_bits(self) -> int:
        return len(self.decision)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total_bits": self.total_bits,
            "decision": [{"flow": k, "unit": u, "bit": i} for (k, u), i in self.decision.items()],
            "power_slack": [{"slot": s, "b": b, "bit": i} for (s, b), i in self.power_slack.items()],
            "queue_slack": [
                {"flow": key[0], "slot": key[1], "b": b, "bit": i} if isinstance(key, tuple)
                else {"flow": key, "b": b, "bit": i}
                for (key, b), i in self.queue_slack.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "VariableIndex":
        queue = {}
        for e in d["queue_slack"]:
            key = (e["flow"], e["slot"]) if "slot" in e else e["flow"]
            queue[(key, e["b"])] = e["bit"]
        return cls(
            decision={(e["flow"], e["unit"]): e["bit"] for e in d["decision"]},
            power_slack={(e["slot"], e["b"]): e["bit"] for e in d["power_slack"]},
            queue_slack=queue,
            total_bits=int(d["total_bits"]),
        )


@dataclass(frozen=True)
class QuboModel:
    n: int
    linear: Dict[int, float]
    quadratic: Dict[Tuple[int, int], float]
    offset: float
    lambdas: Lambdas
    index: VariableIndex
    constraints: Tuple[SlackConstraint, ...] = ()
    queue_sum_scope: QueueScope = "all_units"

    def matrix(self) -> np.ndarray:
        """Upper-triangular coefficient matrix with the linear terms on the diagonal."""
        Q = np.zeros((self.n, self.n))
        for i, v in self.linear.items():
            Q[i, i] = v
        for (i, j), v in self.quadratic.items():
            Q[i, j] = v
        return Q

    def slack_counts(self) -> Dict[str, List[Tuple[Any, int]]]:
        out: Dict[str, List[Tuple[Any, int]]] = {"power": [], "queue": []}
        for c in self.constraints:
            out[c.kind].append((c.key, len(c.slack_bits)))
        return out

    @cached_property
    def energies(self) -> np.ndarray:
        """Read-only cached ``energy_table()``."""
        table = self.energy_table()
        table.setflags(write=False)
        return table

    def energy_table(self) -> np.ndarray:
        """Energy of every basis state z, where bit i of z is variable i."""
        if self.n > MAX_TABLE_BITS:
            raise CapacityError(f"energy table for {self.n} bits exceeds the {MAX_TABLE_BITS}-bit limit")
        Q = self.matrix()
        table = np.array([self.offset])
        for m in range(self.n):
            # coupling of bit m to every configuration of bits 0..m-1
            coupling = np.zeros(1)
            for j in range(m):
                coupling = np.concatenate([coupling, coupling + Q[j, m]])
            table = np.concatenate([table, table + Q[m, m] + coupling])
        return table


def as_bits(x: Sequence[int] | str | np.ndarray, n: int) -> np.ndarray:
    """Normalise a bitstring (sequence of 0/1 or a '0'/'1' string, variable 0 first)."""
    if isinstance(x, str):
        arr = np.array([int(c) for c in x], dtype=np.int64)
    else:
        arr = np.asarray(x, dtype=np.int64).ravel()
    if arr.shape[0] != n:
        raise DomainError(f"bitstring has length {arr.shape[0]}, model has {n} variables")
    if np.any((arr != 0) & (arr != 1)):
        raise DomainError("bitstring entries must be 0 or 1")
    return arr


def bits_to_str(x: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in x)


def index_to_bits(z: int, n: int) -> np.ndarray:
    return np.array([(z >> i) & 1 for i in range(n)], dtype=np.int64)


def bits_to_index(x: Sequence[int]) -> int:
    return int(sum(int(b) << i for i, b in enumerate(x)))


def default_lambdas(s: Scenario) -> Lambdas:
    """Penalty weights large enough that one violation outweighs the whole objective.

    lambda_i = 2 * max(w*r) * |K| * |U| / g_i with g1 = 1 and g2, g3 the
    squared smallest possible violation of the power and queue constraints.
    """
    values = s.value_matrix
    top = float(values.max()) if values.size else 0.0
    if top <= 0:
        return (1.0, 1.0, 1.0)
    base = 2.0 * top * len(s.flows) * len(s.units)
    p = s.powers[s.powers > 0]
    r = s.rate_matrix[s.rate_matrix > 0]
    p_step = min(float(p.min()), s.dp) if p.size else s.dp
    r_step = min(float(r.min()), s.dq) if r.size else s.dq
    return (base, base / p_step**2, base / r_step**2)


def _add_square(
    linear: Dict[int, float],
    quadratic: Dict[Tuple[int, int], float],
    terms: Sequence[Tuple[int, float]],
    constant: float,
    lam: float,
) -> float:
    """Accumulate lam * (sum c_i x_i - constant)^2 for distinct binary x_i; returns the offset part."""
    for a, (i, ci) in enumerate(terms):
        linear[i] = linear.get(i, 0.0) + lam * (ci * ci - 2.0 * constant * ci)
        for j, cj in terms[a + 1 :]:
            key = (i, j) if i < j else (j, i)
            quadratic[key] = quadratic.get(key, 0.0) + 2.0 * lam * ci * cj
    return lam * constant * constant


def build_qubo(s: Scenario, lambdas: Lambdas | None = None, queue_sum_scope: QueueScope = "all_units") -> QuboModel:
    """Compile ``s`` into H_obj + l1*H_conflict + l2*H_power + l3*H_queue."""
    if lambdas is None:
        lambdas = default_lambdas(s)
    lambdas = tuple(float(v) for v in lambdas)
    if len(lambdas) != 3 or any(not v > 0 for v in lambdas):
        raise DomainError(f"lambdas must be three positive reals, got {lambdas}")
    if queue_sum_scope not in QUEUE_SCOPES:
        raise DomainError(f"queue_sum_scope must be one of {QUEUE_SCOPES}")
    lam1, lam2, lam3 = lambdas

    n_units = len(s.units)
    decision = {}
    for a, f in enumerate(s.flows):
        for b, u in enumerate(s.units):
            decision[(f.id, u.id)] = a * n_units + b
    nxt = len(decision)

    def _degenerate(what: str, cap: float, q: float) -> None:
        if cap / q < 1:
            warnings.warn(
                f"{what}: capacity {cap:g} is below its quantum {q:g}; using a single slack bit",
                DegenerateCapacityWarning,
                stacklevel=3,
            )

    constraints: List[SlackConstraint] = []
    power_slack: Dict[Tuple[int, int], int] = {}
    for slot in s.slots:
        cap = s.power_limits[slot]
        _degenerate(f"power slot {slot}", cap, s.dp)
        nbits = slack_bit_count(cap, s.dp)
        bits = tuple(range(nxt, nxt + nbits))
        for b, i in enumerate(bits):
            power_slack[(slot, b)] = i
        nxt += nbits
        terms = tuple(
            (decision[(f.id, u.id)], u.power_required)
            for u in s.units
            if u.slot == slot and u.power_required != 0
            for f in s.flows
        )
        constraints.append(SlackConstraint("power", slot, terms, cap, s.dp, bits))

    queue_keys: List[Tuple[Any, List[int]]] = []
    for f in s.flows:
        if queue_sum_scope == "all_units":
            queue_keys.append((f.id, [u.id for u in s.units]))
        else:
            for slot in s.slots:
                queue_keys.append(((f.id, slot), [u.id for u in s.units if u.slot == slot]))
    queue_slack: Dict[Tuple[Any, int], int] = {}
    for key, unit_ids in queue_keys:
        fid = key[0] if isinstance(key, tuple) else key
        flow = s.flows[s.flow_pos[fid]]
        cap = flow.queue_capacity
        _degenerate(f"queue of flow {key}", cap, s.dq)
        nbits = slack_bit_count(cap, s.dq)
        bits = tuple(range(nxt, nxt + nbits))
        for b, i in enumerate(bits):
            queue_slack[(key, b)] = i
        nxt += nbits
        terms = tuple((decision[(fid, uid)], flow.rates[uid]) for uid in unit_ids if flow.rates[uid] != 0)
        constraints.append(SlackConstraint("queue", key, terms, cap, s.dq, bits))

    linear: Dict[int, float] = {}
    quadratic: Dict[Tuple[int, int], float] = {}
    offset = 0.0

    for f in s.flows:
        for u in s.units:
            value = f.weight * f.rates[u.id]
            if value:
                i = decision[(f.id, u.id)]
                linear[i] = linear.get(i, 0.0) - value

    # (S - 1/2)^2 - 1/4 = S^2 - S = 2 * sum_{k<k'} x_ku x_k'u
    for u in s.units:
        bits = [decision[(f.id, u.id)] for f in s.flows]
        for a, i in enumerate(bits):
            for j in bits[a + 1 :]:
                quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 2.0 * lam1

    for c in constraints:
        lam = lam2 if c.kind == "power" else lam3
        slack_terms = [(i, w) for i, w in zip(c.slack_bits, c.slack_weights())]
        offset += _add_square(linear, quadratic, list(c.terms) + slack_terms, c.capacity, lam)

    index = VariableIndex(decision=decision, power_slack=power_slack, queue_slack=queue_slack, total_bits=nxt)
    return QuboModel(
        n=nxt,
        linear={i: v for i, v in sorted(linear.items()) if v != 0.0},
        quadratic={k: v for k, v in sorted(quadratic.items()) if v != 0.0},
        offset=offset,
        lambdas=lambdas,
        index=index,
        constraints=tuple(constraints),
        queue_sum_scope=queue_sum_scope,
    )


def energy(q: QuboModel, x: Sequence[int] | str | np.ndarray) -> float:
    bits = as_bits(x, q.n)
    total = q.offset
    for i, v in q.linear.items():
        if bits[i]:
            total += v
    for (i, j), v in q.quadratic.items():
        if bits[i] and bits[j]:
            total += v
    return float(total)


def decode(q: QuboModel, x: Sequence[int] | str | np.ndarray) -> Schedule:
    bits = as_bits(x, q.n)
    return Schedule.from_pairs(pair for pair, i in q.index.decision.items() if bits[i])


def encode(q: QuboModel, schedule: Schedule, optimal_slack: bool = True) -> np.ndarray:
    """Bitstring for ``schedule``; slack bits set to their penalty-minimising values unless disabled."""
    x = np.zeros(q.n, dtype=np.int64)
    for pair in schedule.pairs:
        if pair not in q.index.decision:
            raise DomainError(f"assignment {pair} is not a decision variable of this model")
        x[q.index.decision[pair]] = 1
    if optimal_slack:
        for c in q.constraints:
            t = c.best_slack(x)
            for b, i in enumerate(c.slack_bits):
                x[i] = (t >> b) & 1
    return x


def minimizers(q: QuboModel, rel_tol: float = 1e-9) -> Tuple[float, np.ndarray]:
    """Brute-force ground energy and every basis index attaining it."""
    table = q.energies
    ground = float(table.min())
    tol = rel_tol * max(1.0, abs(ground))
    return ground, np.flatnonzero(table <= ground + tol)


# --- file export -----------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def qubo_to_text(q: QuboModel) -> str:
    lines = [f"{q.n} {_fmt(q.offset)}"]
    lines += [f"{i} {i} {_fmt(v)}" for i, v in sorted(q.linear.items())]
    lines += [f"{i} {j} {_fmt(v)}" for (i, j), v in sorted(q.quadratic.items())]
    return "\n".join(lines) + "\n"


def parse_qubo_text(text: str) -> Tuple[int, float, Dict[int, float], Dict[Tuple[int, int], float]]:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise DomainError("QUBO file must start with a 'N offset' header")
    n, offset = int(rows[0][0]), float(rows[0][1])
    linear: Dict[int, float] = {}
    quadratic: Dict[Tuple[int, int], float] = {}
    for row in rows[1:]:
        if len(row) != 3:
            raise DomainError(f"bad QUBO line {' '.join(row)!r}")
        i, j, v = int(row[0]), int(row[1]), float(row[2])
        if not (0 <= i <= j < n):
            raise DomainError(f"QUBO entry ({i}, {j}) out of range or not upper-triangular")
        if i == j:
            linear[i] = linear.get(i, 0.0) + v
        else:
            quadratic[(i, j)] = quadratic.get((i, j), 0.0) + v
    return n, offset, linear, quadratic


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".index.json")


def _constraint_to_dict(c: SlackConstraint) -> Dict[str, Any]:
    return {
        "kind": c.kind,
        "key": list(c.key) if isinstance(c.key, tuple) else c.key,
        "terms": [[i, v] for i, v in c.terms],
        "capacity": c.capacity,
        "quantum": c.quantum,
        "slack_bits": list(c.slack_bits),
    }


def _constraint_from_dict(d: Mapping[str, Any]) -> SlackConstraint:
    key = tuple(d["key"]) if isinstance(d["key"], list) else d["key"]
    return SlackConstraint(
        kind=d["kind"],
        key=key,
        terms=tuple((int(i), float(v)) for i, v in d["terms"]),
        capacity=float(d["capacity"]),
        quantum=float(d["quantum"]),
        slack_bits=tuple(int(i) for i in d["slack_bits"]),
    )


def save_qubo(q: QuboModel, path: str | Path, extra: Mapping[str, Any] | None = None) -> Path:
    """Write the coefficient file and its JSON sidecar; returns the sidecar path."""
    path = Path(path)
    path.write_text(qubo_to_text(q))
    meta: Dict[str, Any] = {
        "n": q.n,
        "lambdas": list(q.lambdas),
        "queue_sum_scope": q.queue_sum_scope,
        "index": q.index.to_dict(),
        "constraints": [_constraint_to_dict(c) for c in q.constraints],
    }
    if extra:
        meta.update(extra)
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2) + "\n")
    return side


def load_qubo(path: str | Path) -> Tuple[QuboModel, Dict[str, Any]]:
    """Read a coefficient file and its sidecar; returns the model and the raw sidecar dict."""
    path = Path(path)
    n, offset, linear, quadratic = parse_qubo_text(path.read_text())
    meta = json.loads(sidecar_path(path).read_text())
    index = VariableIndex.from_dict(meta["index"])
    if index.total_bits != n:
        raise DomainError(f"sidecar describes {index.total_bits} bits, QUBO file has {n}")
    q = QuboModel(
        n=n,
        linear=linear,
        quadratic=quadratic,
        offset=offset,
        lambdas=tuple(meta["lambdas"]),
        index=index,
        constraints=tuple(_constraint_from_dict(c) for c in meta.get("constraints", [])),
        queue_sum_scope=meta.get("queue_sum_scope", "all_units"),
    )
    return q, meta
