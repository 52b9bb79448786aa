"""Solver orchestration shared by the command-line subcommands."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from beamqopt.classical import SolveResult, solve_exact, solve_greedy
from beamqopt.errors import CapacityError, ConfigurationError
from beamqopt.metrics import hamming_profile, histogram_csv, most_probable_schedule, success_probability, throughput_ratio
from beamqopt.model import check_feasibility, weighted_throughput
from beamqopt.qubo import QuboModel, build_qubo, encode
from beamqopt.quantum.optimize import HillClimbConfig, layerwise_train, random_start, resolve_gamma_scale, spsa_optimize
from beamqopt.quantum.statevector import (
    MixerKind,
    MixerSpec,
    expectation,
    init_ry,
    init_uniform,
    max_qubits,
    run_ansatz,
)
from beamqopt.scenario import Scenario, TrafficProfile, generate_scenario, rescale_scenario

SOLVERS = ("exact", "greedy", "qaoa", "layerwise")
QUANTUM_SOLVERS = ("qaoa", "layerwise")


@dataclass(frozen=True)
class QaoaSettings:
    layers: int = 1
    iters: int = 200
    shots: Optional[int] = None  # None: exact expectation
    mixer: MixerKind = MixerKind.TRANSVERSE_X
    phis: str = "greedy"  # "greedy" or comma-separated radians
    seed: int = 0
    a0: float = 0.5
    decay: float = 0.3
    gamma_scale: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mixer", MixerKind(self.mixer))
        if self.layers < 1 or self.iters < 1:
            raise ConfigurationError("layers and iters must be >= 1")

    def hill_climb(self) -> HillClimbConfig:
        return HillClimbConfig(a0=self.a0, decay=self.decay, gamma_scale=self.gamma_scale, shots=self.shots)


@dataclass(frozen=True)
class ExperimentConfig:
    """One pipeline run: scenario source, compilation knobs, solver choice."""

    solver: str
    out_dir: Path
    profile: Optional[TrafficProfile] = None
    profile_seed: int = 0
    scenario_path: Optional[Path] = None
    rescale: float = 1.0
    dq: Optional[float] = None
    dp: Optional[float] = None
    lambdas: Optional[Tuple[float, float, float]] = None
    qaoa: Optional[QaoaSettings] = None
    node_limit: int = 10_000_000

    def __post_init__(self) -> None:
        if (self.profile is None) == (self.scenario_path is None):
            raise ConfigurationError("give exactly one scenario source: a profile or a scenario file")
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}")
        if (self.qaoa is not None) != (self.solver in QUANTUM_SOLVERS):
            raise ConfigurationError("qaoa settings are required for, and only for, quantum solvers")

    def scenario(self) -> Scenario:
        s = generate_scenario(self.profile, self.profile_seed) if self.profile else Scenario.load(self.scenario_path)
        return prepare_scenario(s, self.rescale, self.dq, self.dp)


def prepare_scenario(s: Scenario, rescale: float = 1.0, dq: float | None = None, dp: float | None = None) -> Scenario:
    if rescale != 1.0:
        s = rescale_scenario(s, rescale)
    if dq is not None or dp is not None:
        s = replace(s, dq=s.dq if dq is None else dq, dp=s.dp if dp is None else dp)
    return s


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _classical_payload(res: SolveResult, solver: str) -> Dict[str, Any]:
    return {"solver": solver, **res.to_dict()}


def run_quantum(
    s: Scenario, q: QuboModel, solver: str, settings: QaoaSettings, node_limit: int = 10_000_000
) -> Dict[str, Any]:
    """Optimise angles, read out a schedule and collect every CSV artefact as text."""
    cap = max_qubits()
    if q.n > cap:
        raise CapacityError(f"QUBO has N={q.n} variables but the statevector cap is {cap} qubits")
    t0 = time.perf_counter()

    if settings.mixer is MixerKind.ROTATED_RY:
        if settings.phis == "greedy":
            bits = encode(q, solve_greedy(s, q.queue_sum_scope).schedule)
            phis = tuple(math.pi * float(b) for b in bits)
        else:
            phis = tuple(float(p) for p in settings.phis.split(","))
        mixer = MixerSpec(MixerKind.ROTATED_RY, phis)
        init = init_ry(phis)
    else:
        mixer = MixerSpec()
        init = init_uniform(q.n)

    config = settings.hill_climb()
    if solver == "layerwise":
        params, trace = layerwise_train(q, settings.layers, mixer, settings.iters, settings.seed, init, config)
    else:
        start_seed, opt_seed = np.random.SeedSequence(settings.seed).spawn(2)
        start = random_start(settings.layers, start_seed, resolve_gamma_scale(q, config))
        params, trace = spsa_optimize(q, init, mixer, start, iters=settings.iters, seed=opt_seed, config=config)

    state = run_ansatz(q, params, init, mixer)
    schedule = most_probable_schedule(state, q, s)
    wall = time.perf_counter() - t0

    exact = solve_exact(s, node_limit, q.queue_sum_scope)
    objective = weighted_throughput(s, schedule)
    profile = hamming_profile(state, q, s, encode(q, exact.schedule))
    result = {
        "solver": solver,
        "schedule": [list(p) for p in schedule.sorted_pairs()],
        "objective": objective,
        "optimal": bool(exact.optimal and math.isclose(objective, exact.objective, rel_tol=1e-9, abs_tol=1e-12)),
        "nodes_explored": 0,
        "wall_time_ms": wall * 1000.0,
        "feasible": check_feasibility(s, schedule, q.queue_sum_scope).feasible,
        "n_qubits": q.n,
        "layers": params.layers,
        "gammas": list(params.gammas),
        "betas": list(params.betas),
        "final_energy": expectation(state, q),
        "best_energy_per_depth": trace.best_per_depth,
        "success_probability": success_probability(state, q),
        "exact_objective": exact.objective,
        "throughput_ratio": throughput_ratio(s, schedule, exact.schedule),
        "seed": settings.seed,
    }
    return {
        "result": result,
        "trace.csv": trace.to_csv(),
        "depth_summary.csv": trace.depth_summary_csv(),
        "histogram.csv": histogram_csv(state),
        "hamming_profile.csv": profile.to_csv(),
    }


def run_solver(
    s: Scenario, q: Optional[QuboModel], solver: str, settings: Optional[QaoaSettings], out_dir: Path,
    node_limit: int = 10_000_000,
) -> Dict[str, Any]:
    """Run one solver and write its artefacts into ``out_dir``; returns the result payload."""
    out_dir = Path(out_dir)
    scope = q.queue_sum_scope if q is not None else "all_units"
    if solver == "exact":
        result = _classical_payload(solve_exact(s, node_limit, scope), solver)
    elif solver == "greedy":
        result = _classical_payload(solve_greedy(s, scope), solver)
    elif solver in QUANTUM_SOLVERS:
        if q is None or settings is None:
            raise ConfigurationError("quantum solvers need a QUBO and qaoa settings")
        artefacts = run_quantum(s, q, solver, settings, node_limit)
        result = artefacts.pop("result")
        for name, text in artefacts.items():
            _write(out_dir / name, text)
    else:
        raise ConfigurationError(f"unknown solver {solver!r}")
    _write(out_dir / "result.json", json.dumps(result, indent=2) + "\n")
    return result


def run_experiment(config: ExperimentConfig) -> Dict[str, Any]:
    s = config.scenario()
    q = build_qubo(s, config.lambdas) if config.solver in QUANTUM_SOLVERS else None
    return run_solver(s, q, config.solver, config.qaoa, config.out_dir, config.node_limit)

