"""Statevector QAOA engine and its classical angle optimiser."""

from beamqopt.quantum.optimize import (
    HillClimbConfig,
    OptimizationTrace,
    layerwise_train,
    random_start,
    spsa_optimize,
)
from beamqopt.quantum.statevector import (
    MixerKind,
    MixerSpec,
    QaoaParams,
    Statevector,
    apply_cost,
    apply_mixer,
    expectation,
    init_ry,
    init_uniform,
    max_qubits,
    run_ansatz,
    sample,
)

__all__ = [
    "HillClimbConfig",
    "MixerKind",
    "MixerSpec",
    "OptimizationTrace",
    "QaoaParams",
    "Statevector",
    "apply_cost",
    "apply_mixer",
    "expectation",
    "init_ry",
    "init_uniform",
    "layerwise_train",
    "max_qubits",
    "random_start",
    "run_ansatz",
    "sample",
    "spsa_optimize",
]
