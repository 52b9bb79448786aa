"""Accept-if-better random search over QAOA angles, and layer-wise depth growth."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from beamqopt.errors import ConfigurationError
from beamqopt.qubo import QuboModel
from beamqopt.quantum.statevector import MixerSpec, QaoaParams, Statevector, expectation, init_uniform, run_ansatz

SeedLike = int | np.random.SeedSequence


@dataclass(frozen=True)
class HillClimbConfig:
    """Proposal settings.

    Each free parameter moves by a uniform draw in [-a_t, a_t] with
    a_t = a0 / (1 + t)**decay. Gamma draws are additionally multiplied by
    ``gamma_scale``; None picks 1 / std(E) over all basis states so that a
    unit gamma step is one "typical" phase spread.
    """

    a0: float = 0.5
    decay: float = 0.3
    gamma_scale: Optional[float] = None
    shots: Optional[int] = None  # None: exact expectation

    def __post_init__(self) -> None:
        if not self.a0 > 0:
            raise ConfigurationError("a0 must be > 0")
        if self.decay < 0:
            raise ConfigurationError("decay must be >= 0")
        if self.gamma_scale is not None and not self.gamma_scale > 0:
            raise ConfigurationError("gamma_scale must be > 0")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be >= 1")


def energy_scale(q: QuboModel) -> float:
    spread = float(np.std(q.energies))
    return spread if spread > 0 else 1.0


def resolve_gamma_scale(q: QuboModel, config: HillClimbConfig) -> float:
    return config.gamma_scale if config.gamma_scale is not None else 1.0 / energy_scale(q)


@dataclass
class OptimizationTrace:
    energies: List[float] = field(default_factory=list)  # incumbent after each iteration
    proposed: List[float] = field(default_factory=list)
    accepted: List[bool] = field(default_factory=list)
    depths: List[int] = field(default_factory=list)
    shots_used: List[int] = field(default_factory=list)  # per evaluation, 0 = exact
    params_per_layer: List[QaoaParams] = field(default_factory=list)
    best_per_depth: List[float] = field(default_factory=list)
    initial_energies: List[float] = field(default_factory=list)  # incumbent before the first step, per depth

    def __len__(self) -> int:
        return len(self.energies)

    def extend(self, other: "OptimizationTrace") -> None:
        for name in ("energies", "proposed", "accepted", "depths", "shots_used", "params_per_layer",
                     "best_per_depth", "initial_energies"):
            getattr(self, name).extend(getattr(other, name))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "accepted", "depth"])
        for i, (e, a, d) in enumerate(zip(self.energies, self.accepted, self.depths)):
            w.writerow([i, format(e, ".17g"), int(a), d])
        return buf.getvalue()

    def depth_summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["depth", "best_energy", "gammas", "betas"])
        for d, (e, p) in enumerate(zip(self.best_per_depth, self.params_per_layer), 1):
            w.writerow([d, format(e, ".17g"), " ".join(format(g, ".17g") for g in p.gammas),
                        " ".join(format(b, ".17g") for b in p.betas)])
        return buf.getvalue()


def random_start(layers: int, seed: SeedLike, gamma_scale: float = 1.0) -> QaoaParams:
    """Random angles: gamma*scale^-1 uniform in [0, pi), beta uniform in [-pi/4, pi/4)."""
    rng = np.random.default_rng(seed)
    gammas = rng.uniform(0.0, np.pi, layers) * gamma_scale
    betas = rng.uniform(-np.pi / 4, np.pi / 4, layers)
    return QaoaParams(tuple(gammas), tuple(betas))


def spsa_optimize(
    q: QuboModel,
    init: Statevector,
    m: MixerSpec,
    start: QaoaParams,
    free_mask: Optional[Sequence[bool]] = None,
    iters: int = 200,
    seed: SeedLike = 0,
    config: HillClimbConfig = HillClimbConfig(),
) -> Tuple[QaoaParams, OptimizationTrace]:
    """Random-search hill climbing: adopt a perturbed point only if its energy is strictly lower.

    ``free_mask`` follows the flat layout of ``QaoaParams.vector()`` (gammas
    then betas); masked-out parameters never move.
    """
    if iters < 1:
        raise ConfigurationError("iters must be >= 1")
    current = start.vector()
    mask = np.ones_like(current, dtype=bool) if free_mask is None else np.asarray(free_mask, dtype=bool)
    if mask.shape != current.shape:
        raise ConfigurationError(f"free_mask has {mask.size} entries, parameters have {current.size}")
    p = start.layers
    scale = np.concatenate([np.full(p, resolve_gamma_scale(q, config)), np.ones(p)])

    perturb_seq, sample_seq = np.random.SeedSequence(seed).spawn(2) if isinstance(seed, int) else seed.spawn(2)
    perturb_rng = np.random.default_rng(perturb_seq)
    sample_rng = np.random.default_rng(sample_seq)
    shots_tag = config.shots or 0

    def evaluate(vec: np.ndarray) -> float:
        state = run_ansatz(q, QaoaParams.from_vector(vec), init, m)
        return expectation(state, q, shots=config.shots, rng=sample_rng)

    trace = OptimizationTrace()
    best = evaluate(current)
    trace.initial_energies.append(best)
    trace.shots_used.append(shots_tag)
    for t in range(iters):
        a_t = config.a0 / (1.0 + t) ** config.decay
        delta = perturb_rng.uniform(-a_t, a_t, size=current.shape) * scale * mask
        candidate = current + delta
        e = evaluate(candidate)
        ok = e < best
        if ok:
            current, best = candidate, e
        trace.proposed.append(e)
        trace.accepted.append(bool(ok))
        trace.energies.append(best)
        trace.depths.append(p)
        trace.shots_used.append(shots_tag)

    result = QaoaParams.from_vector(current)
    trace.params_per_layer.append(result)
    trace.best_per_depth.append(best)
    return result, trace


def layerwise_train(
    q: QuboModel,
    p_max: int,
    m: MixerSpec,
    iters_per_layer: int = 200,
    seed: int = 0,
    init: Optional[Statevector] = None,
    config: HillClimbConfig = HillClimbConfig(),
) -> Tuple[QaoaParams, OptimizationTrace]:
    """Grow the circuit one layer at a time.

    Depth 1 starts from random angles. Each later depth appends
    (gamma, beta) = (0, 0), which leaves the state unchanged, and optimises
    only that new pair while the earlier angles stay frozen.
    """
    if p_max < 1:
        raise ConfigurationError("p_max must be >= 1")
    if init is None:
        init = init_uniform(q.n)
    seeds = np.random.SeedSequence(seed).spawn(p_max + 1)
    params = random_start(1, seeds[0], resolve_gamma_scale(q, config))
    trace = OptimizationTrace()
    for depth in range(1, p_max + 1):
        if depth > 1:
            params = params.extended()
        mask = np.zeros(2 * depth, dtype=bool)
        mask[[depth - 1, 2 * depth - 1]] = True
        params, layer_trace = spsa_optimize(
            q, init, m, params, free_mask=mask, iters=iters_per_layer, seed=seeds[depth], config=config
        )
        trace.extend(layer_trace)
    return params, trace
