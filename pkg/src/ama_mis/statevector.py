"""Dense statevector primitives for the feasibility-preserving ansatz.

Qubit ``v`` is bit ``v`` of the basis index (qubit 0 is least significant).
All gate functions mutate the state in place and return it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .graphs import Assignment, Graph, independence_table, index_to_assignment, popcount_table

MAX_QUBITS = 26


class StateError(ValueError):
    pass


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise StateError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class MixerGate:
    """Open-controlled ``Rx(2*beta)`` on ``target``; fires only when all controls are 0."""

    target: int
    open_controls: tuple[int, ...]
    beta: float

    def __post_init__(self) -> None:
        controls = tuple(sorted(int(c) for c in self.open_controls))
        if self.target in controls:
            raise StateError(f"target {self.target} cannot also be a control")
        if len(set(controls)) != len(controls):
            raise StateError("duplicate control qubits")
        object.__setattr__(self, "open_controls", controls)

    @classmethod
    def for_vertex(cls, g: Graph, v: int, beta: float) -> "MixerGate":
        return cls(v, g.adjacency[v], beta)

    @property
    def control_mask(self) -> int:
        return sum(1 << c for c in self.open_controls)


def init_zero_state(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise StateError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def apply_phase_layer(s: StateVector, gamma: float) -> StateVector:
    """Multiply each basis amplitude by ``exp(i*gamma*popcount(x))``."""
    s.amplitudes *= np.exp(1j * gamma * popcount_table(s.n_qubits))
    return s


def _mixer_pairs(n: int, target: int, control_mask: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.arange(1 << n, dtype=np.int64)
    tbit = 1 << target
    active = (idx & control_mask) == 0
    lo = idx[active & ((idx & tbit) == 0)]
    return lo, lo | tbit, ~active


def apply_mixer(s: StateVector, m: MixerGate, exact_phase: bool = False) -> StateVector:
    """Apply the open-controlled rotation ``[[c, -is], [-is, c]]`` with ``c, s = cos, sin(beta)``.

    With ``exact_phase`` the blocked subspace (some control set) also picks up
    ``exp(-i*beta)``, i.e. the full ``exp(-i*beta*B_v)``.
    """
    n = s.n_qubits
    if not 0 <= m.target < n or any(not 0 <= c < n for c in m.open_controls):
        raise StateError(f"gate indices out of range for {n} qubits: {m}")
    lo, hi, blocked = _mixer_pairs(n, m.target, m.control_mask)
    c, sn = np.cos(m.beta), np.sin(m.beta)
    a0 = s.amplitudes[lo]
    a1 = s.amplitudes[hi]
    s.amplitudes[lo] = c * a0 - 1j * sn * a1
    s.amplitudes[hi] = -1j * sn * a0 + c * a1
    if exact_phase:
        s.amplitudes[blocked] *= np.exp(-1j * m.beta)
    return s


def expectation_hc(s: StateVector) -> float:
    """``<H_C>`` for ``H_C = -sum_v (I - Z_v)/2``, i.e. minus the expected popcount."""
    probs = np.abs(s.amplitudes) ** 2
    return -float(probs @ popcount_table(s.n_qubits))


def support_is_feasible(s: StateVector, g: Graph, tol: float = 1e-12) -> bool:
    if s.n_qubits != g.n:
        raise StateError(f"state has {s.n_qubits} qubits but graph has {g.n} vertices")
    probs = np.abs(s.amplitudes) ** 2
    return bool(np.all(independence_table(g)[probs > tol]))


def basis_probabilities(s: StateVector, cutoff: float = 0.0) -> list[tuple[Assignment, float]]:
    """Nonzero basis probabilities, most likely first (ties by basis index)."""
    probs = np.abs(s.amplitudes) ** 2
    order = np.lexsort((np.arange(probs.size), -probs))
    return [
        (index_to_assignment(int(i), s.n_qubits), float(probs[i]))
        for i in order
        if probs[i] > cutoff
    ]


def dumps_state(s: StateVector) -> str:
    """Text dump, one ``bitstring re im`` line per basis state (small states only)."""
    if s.n_qubits > 10:
        raise StateError("state dumps are limited to 10 qubits")
    lines = []
    for i, a in enumerate(s.amplitudes):
        bits = "".join(str(b) for b in index_to_assignment(i, s.n_qubits))
        lines.append(f"{bits} {a.real:.17g} {a.imag:.17g}")
    return "\n".join(lines) + "\n"


def loads_state(text: str) -> StateVector:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    n = len(rows[0][0])
    amps = np.zeros(1 << n, dtype=np.complex128)
    for bits, re, im in rows:
        amps[sum(int(b) << v for v, b in enumerate(bits))] = complex(float(re), float(im))
    return StateVector(n, amps)


def write_state(s: StateVector, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_state(s))


def product_state(bits: Sequence[int]) -> StateVector:
    n = len(bits)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[sum(int(b) << v for v, b in enumerate(bits))] = 1.0
    return StateVector(n, amps)
