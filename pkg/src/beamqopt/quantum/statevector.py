"""Dense statevector simulation of the QAOA circuit.

Basis index z encodes the bitstring with bit i of z holding qubit/variable i,
so qubit 0 is the least significant bit.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from beamqopt.errors import CapacityError, ConfigurationError, DomainError
from beamqopt.qubo import QuboModel

DEFAULT_MAX_QUBITS = 24


def max_qubits() -> int:
    """Qubit cap; BEAMQOPT_MAX_QUBITS overrides the default of 24."""
    raw = os.environ.get("BEAMQOPT_MAX_QUBITS")
    if not raw:
        return DEFAULT_MAX_QUBITS
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"BEAMQOPT_MAX_QUBITS must be an integer, got {raw!r}") from exc


def check_qubits(n: int) -> None:
    cap = max_qubits()
    if not 1 <= n <= cap:
        raise CapacityError(f"{n} qubits requested; the statevector simulator supports 1..{cap}")


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (2**self.n,):
            raise DomainError(f"amplitude vector of shape {self.amplitudes.shape} does not match {self.n} qubits")

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def basis(cls, bits: Sequence[int]) -> "Statevector":
        """Computational basis state with qubit i set to ``bits[i]``."""
        n = len(bits)
        check_qubits(n)
        amp = np.zeros(2**n, dtype=complex)
        amp[sum(int(b) << i for i, b in enumerate(bits))] = 1.0
        return cls(amp, n)


class MixerKind(str, enum.Enum):
    TRANSVERSE_X = "transverse_x"
    ROTATED_RY = "rotated_ry"


@dataclass(frozen=True)
class MixerSpec:
    kind: MixerKind = MixerKind.TRANSVERSE_X
    phis: Optional[tuple] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", MixerKind(self.kind))
        if self.phis is not None:
            object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        if self.kind is MixerKind.ROTATED_RY and self.phis is None:
            raise ConfigurationError("rotated_ry mixer needs phis")


def ry(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(beta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * beta), 0], [0, np.exp(0.5j * beta)]], dtype=complex)


def rx_mixer(beta: float) -> np.ndarray:
    """exp(-i beta X)."""
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def apply_1q(amplitudes: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    """Apply a 2x2 gate to one qubit; returns a new array."""
    psi = amplitudes.reshape(-1, 2, 2**qubit)
    return np.einsum("ab,xbz->xaz", gate, psi).reshape(-1)


def init_uniform(n: int) -> Statevector:
    check_qubits(n)
    dim = 2**n
    return Statevector(np.full(dim, 1.0 / np.sqrt(dim), dtype=complex), n)


def init_ry(phis: Sequence[float]) -> Statevector:
    """Product state of Ry(phi_j)|0> on every qubit j."""
    n = len(phis)
    check_qubits(n)
    amp = np.ones(1, dtype=complex)
    for phi in phis:
        # qubit j becomes the next more significant bit
        single = np.array([np.cos(phi / 2), np.sin(phi / 2)], dtype=complex)
        amp = np.kron(single, amp)
    return Statevector(amp, n)


def _check_model(v: Statevector, q: QuboModel) -> None:
    if q.n != v.n:
        raise DomainError(f"QUBO has {q.n} variables, state has {v.n} qubits")


def apply_cost(v: Statevector, q: QuboModel, gamma: float) -> Statevector:
    """Multiply amplitude z by exp(-i gamma E(z))."""
    _check_model(v, q)
    return Statevector(v.amplitudes * np.exp(-1j * gamma * q.energies), v.n)


def apply_mixer(v: Statevector, m: MixerSpec, beta: float) -> Statevector:
    amp = v.amplitudes
    if m.kind is MixerKind.TRANSVERSE_X:
        gate = rx_mixer(beta)
        for j in range(v.n):
            amp = apply_1q(amp, gate, j)
    else:
        if m.phis is None or len(m.phis) != v.n:
            raise ConfigurationError(f"rotated_ry mixer needs {v.n} phis, got {None if m.phis is None else len(m.phis)}")
        rzb = rz(beta)
        for j, phi in enumerate(m.phis):
            amp = apply_1q(amp, ry(phi) @ rzb @ ry(-phi), j)
    return Statevector(amp, v.n)


def run_ansatz(q: QuboModel, params: "QaoaParams", init: Statevector, m: MixerSpec) -> Statevector:
    """U_B(beta_p) U_C(gamma_p) ... U_B(beta_1) U_C(gamma_1) |init>."""
    v = init
    for gamma, beta in zip(params.gammas, params.betas):
        v = apply_mixer(apply_cost(v, q, gamma), m, beta)
    return v


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple
    betas: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ConfigurationError("gammas and betas must have the same non-zero length")

    @property
    def layers(self) -> int:
        return len(self.gammas)

    def vector(self) -> np.ndarray:
        """Flat parameters: all gammas, then all betas."""
        return np.array(self.gammas + self.betas)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "QaoaParams":
        vec = list(vec)
        p = len(vec) // 2
        return cls(tuple(vec[:p]), tuple(vec[p:]))

    def extended(self) -> "QaoaParams":
        """One more layer with (gamma, beta) = (0, 0)."""
        return QaoaParams(self.gammas + (0.0,), self.betas + (0.0,))


def _counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(probs, 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def expectation(
    v: Statevector,
    q: QuboModel,
    shots: Optional[int] = None,
    rng: np.random.Generator | int | None = None,
) -> float:
    """<H_QUBO>; exact when ``shots`` is None, otherwise a ``shots``-sample mean."""
    _check_model(v, q)
    probs = v.probabilities
    if shots is None:
        return float(probs @ q.energies)
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    counts = _counts(probs, shots, np.random.default_rng(rng))
    return float(counts @ q.energies / shots)


def sample(v: Statevector, shots: int, seed: int | np.random.Generator | None = 0) -> Dict[str, int]:
    """Measurement histogram keyed by bitstring (qubit 0 first), in basis-index order."""
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    counts = _counts(v.probabilities, shots, np.random.default_rng(seed))
    return {format_bits(z, v.n): int(c) for z, c in enumerate(counts) if c}


def format_bits(z: int, n: int) -> str:
    return "".join("1" if (z >> i) & 1 else "0" for i in range(n))
