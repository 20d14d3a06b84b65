"""Circuit IR shared by QAOA+, PU, PNU and AMA, plus evaluation and resource models."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .graphs import Graph, popcount_table
from .statevector import StateVector, init_zero_state

DEFAULT_FD_STEP = 1e-4


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseLayer:
    param_index: int


@dataclass(frozen=True)
class MixerLayer:
    vertices: tuple[int, ...]
    param_index: int


Layer = Union[PhaseLayer, MixerLayer]


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        used = sorted(layer.param_index for layer in self.layers)
        if used != list(range(len(used))):
            raise CircuitError(f"parameter indices must be 0..{len(used) - 1}, each used once; got {used}")
        for layer in self.layers:
            if isinstance(layer, MixerLayer):
                if not layer.vertices:
                    raise CircuitError("empty mixer layer")
                if len(set(layer.vertices)) != len(layer.vertices):
                    raise CircuitError(f"duplicate vertices in mixer layer {layer.vertices}")
                if any(not 0 <= v < self.n_qubits for v in layer.vertices):
                    raise CircuitError(f"mixer vertex out of range in {layer.vertices}")

    @property
    def param_count(self) -> int:
        return len(self.layers)

    @property
    def mixer_layers(self) -> list[MixerLayer]:
        return [layer for layer in self.layers if isinstance(layer, MixerLayer)]

    def mixer_occurrences(self) -> list[int]:
        """Every mixer's vertex, in application order."""
        return [v for layer in self.mixer_layers for v in layer.vertices]


# -- builders -----------------------------------------------------------------

def _alternating(n: int, mixer_sets: Sequence[Sequence[int]]) -> Circuit:
    layers: list[Layer] = []
    for vertices in mixer_sets:
        layers.append(PhaseLayer(len(layers)))
        layers.append(MixerLayer(tuple(vertices), len(layers)))
    return Circuit(n, tuple(layers))


def _check_depth(p: int) -> None:
    if p < 1:
        raise CircuitError(f"layer depth p must be >= 1, got {p}")


def _check_n_pm(g: Graph, n_pm: int) -> None:
    if not 1 <= n_pm <= g.n:
        raise CircuitError(f"mixers per layer must be in [1, {g.n}], got {n_pm}")


def random_subset(n: int, size: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(sorted(int(v) for v in rng.choice(n, size=size, replace=False)))


def default_n_pm(n: int) -> int:
    return n // 2 + 1


def build_qaoa_plus(g: Graph, p: int) -> Circuit:
    _check_depth(p)
    return _alternating(g.n, [range(g.n)] * p)


def build_pu(g: Graph, p: int, n_pm: int, seed: int) -> Circuit:
    """One random mixer subset, reused by all ``p`` layers."""
    _check_depth(p)
    _check_n_pm(g, n_pm)
    subset = random_subset(g.n, n_pm, np.random.default_rng(seed))
    return _alternating(g.n, [subset] * p)


def build_pnu(g: Graph, p: int, n_pm: int, seed: int) -> Circuit:
    """A fresh random mixer subset for every layer."""
    _check_depth(p)
    _check_n_pm(g, n_pm)
    rng = np.random.default_rng(seed)
    return _alternating(g.n, [random_subset(g.n, n_pm, rng) for _ in range(p)])


def append_mixer_layer(c: Circuit, vertices: Sequence[int]) -> Circuit:
    """Append a mixer-only layer, keeping ``vertices`` in the given order."""
    vertices = tuple(int(v) for v in vertices)
    if not vertices:
        raise CircuitError("empty mixer layer")
    return Circuit(c.n_qubits, c.layers + (MixerLayer(vertices, c.param_count),))


# -- evaluation ---------------------------------------------------------------

@dataclass(frozen=True)
class Program:
    """A circuit lowered against a graph into flat kernel arrays."""

    n_qubits: int
    param_count: int
    kinds: np.ndarray
    pidx: np.ndarray
    targets: np.ndarray
    masks: np.ndarray
    popcount: np.ndarray = field(repr=False)

    def zero_state(self) -> np.ndarray:
        state = np.zeros(1 << self.n_qubits, dtype=np.complex128)
        state[0] = 1.0
        return state

    def _theta(self, theta) -> np.ndarray:
        theta = np.ascontiguousarray(theta, dtype=np.float64)
        if theta.shape != (self.param_count,):
            raise CircuitError(f"expected {self.param_count} parameters, got {theta.shape[0] if theta.ndim else 0}")
        if not np.all(np.isfinite(theta)):
            raise CircuitError("parameters must be finite")
        return theta

    def state(self, theta, state0: Optional[np.ndarray] = None, exact_phase: bool = False) -> np.ndarray:
        state = self.zero_state() if state0 is None else state0.copy()
        return _kernels.evolve(
            state, self.popcount, self.kinds, self.pidx, self.targets, self.masks,
            self._theta(theta), exact_phase,
        )

    def energy(self, theta, state0: Optional[np.ndarray] = None, exact_phase: bool = False) -> float:
        state0 = self.zero_state() if state0 is None else state0
        return float(_kernels.energy(
            state0, self.popcount, self.kinds, self.pidx, self.targets, self.masks,
            self._theta(theta), exact_phase,
        ))

    def gradient(self, theta, indices=None, h: float = DEFAULT_FD_STEP,
                 state0: Optional[np.ndarray] = None, exact_phase: bool = False) -> np.ndarray:
        theta = self._theta(theta)
        if indices is None:
            indices = np.arange(self.param_count, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.param_count):
            raise CircuitError(f"gradient indices out of range: {indices}")
        state0 = self.zero_state() if state0 is None else state0
        return _kernels.central_gradient(
            state0, self.popcount, self.kinds, self.pidx, self.targets, self.masks,
            theta, indices, float(h), exact_phase,
        )


@lru_cache(maxsize=16)
def _popcount(n: int) -> np.ndarray:
    table = popcount_table(n)
    table.setflags(write=False)
    return table


def compile_circuit(c: Circuit, g: Graph, layers: Optional[Sequence[Layer]] = None) -> Program:
    """Lower ``c`` (or just ``layers`` of it) to kernel arrays; controls are N(v) from ``g``."""
    if c.n_qubits != g.n:
        raise CircuitError(f"circuit has {c.n_qubits} qubits but graph has {g.n} vertices")
    kinds, pidx, targets, masks = [], [], [], []
    for layer in c.layers if layers is None else layers:
        if isinstance(layer, PhaseLayer):
            kinds.append(_kernels.PHASE)
            pidx.append(layer.param_index)
            targets.append(0)
            masks.append(0)
        else:
            for v in layer.vertices:
                kinds.append(_kernels.MIXER)
                pidx.append(layer.param_index)
                targets.append(v)
                masks.append(g.neighbor_masks[v])
    return Program(
        g.n, c.param_count,
        np.array(kinds, dtype=np.int8), np.array(pidx, dtype=np.int64),
        np.array(targets, dtype=np.int64), np.array(masks, dtype=np.int64),
        _popcount(g.n),
    )


def evaluate(c: Circuit, theta, g: Graph, exact_phase: bool = False) -> tuple[StateVector, float]:
    """Evolve ``|0...0>`` through ``c`` and return the final state and ``<H_C>``."""
    prog = compile_circuit(c, g)
    state = StateVector(g.n, prog.state(theta, exact_phase=exact_phase))
    return state, float(_kernels.expectation(state.amplitudes, prog.popcount))


def energy(c: Circuit, theta, g: Graph, exact_phase: bool = False) -> float:
    return compile_circuit(c, g).energy(theta, exact_phase=exact_phase)


def gradient(c: Circuit, theta, g: Graph, indices=None, h: float = DEFAULT_FD_STEP,
             exact_phase: bool = False) -> np.ndarray:
    """Central finite-difference gradient of ``<H_C>`` over ``indices`` (all by default)."""
    return compile_circuit(c, g).gradient(theta, indices, h, exact_phase=exact_phase)


def evaluate_reference(c: Circuit, theta, g: Graph, exact_phase: bool = False) -> tuple[StateVector, float]:
    """Gate-by-gate evaluation through the numpy primitives (slow; for cross-checks)."""
    from .statevector import MixerGate, apply_mixer, apply_phase_layer, expectation_hc

    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (c.param_count,):
        raise CircuitError(f"expected {c.param_count} parameters, got {theta.shape}")
    s = init_zero_state(g.n)
    for layer in c.layers:
        if isinstance(layer, PhaseLayer):
            apply_phase_layer(s, theta[layer.param_index])
        else:
            for v in layer.vertices:
                apply_mixer(s, MixerGate.for_vertex(g, v, theta[layer.param_index]), exact_phase)
    return s, expectation_hc(s)


# -- resource accounting ------------------------------------------------------

@dataclass(frozen=True)
class ResourceModel:
    """Depth and CNOT cost model for circuits with multi-controlled mixers.

    A mixer with ``k >= 1`` open controls costs ``cnot_slope*k + cnot_offset``
    CNOTs unless ``cnot_overrides`` pins that ``k``; an uncontrolled mixer is free.
    """

    depth_per_mixer: int = 3
    phase_layer_depth: int = 1
    cnot_slope: int = 8
    cnot_offset: int = -6
    cnot_overrides: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.depth_per_mixer < 0 or self.phase_layer_depth < 0:
            raise CircuitError("depth costs must be nonnegative")
        object.__setattr__(self, "cnot_overrides", {int(k): int(v) for k, v in dict(self.cnot_overrides).items()})
        if self.cnot_overrides.get(0, 0) != 0:
            raise CircuitError("an uncontrolled mixer must cost 0 CNOTs")
        if any(self.cnot_cost(k) < 0 for k in range(1, 64)):
            raise CircuitError("CNOT costs must be nonnegative")

    def __hash__(self) -> int:
        return hash((self.depth_per_mixer, self.phase_layer_depth, self.cnot_slope,
                     self.cnot_offset, tuple(sorted(self.cnot_overrides.items()))))

    def cnot_cost(self, k: int) -> int:
        if k in self.cnot_overrides:
            return self.cnot_overrides[k]
        if k == 0:
            return 0
        return self.cnot_slope * k + self.cnot_offset


def circuit_depth(c: Circuit, model: ResourceModel = ResourceModel()) -> int:
    depth = 0
    for layer in c.layers:
        if isinstance(layer, PhaseLayer):
            depth += model.phase_layer_depth
        else:
            depth += model.depth_per_mixer * len(layer.vertices)
    return depth


def cnot_count(c: Circuit, g: Graph, model: ResourceModel = ResourceModel()) -> int:
    return sum(model.cnot_cost(g.degree(v)) for v in c.mixer_occurrences())


# -- debug dump ---------------------------------------------------------------

def dumps_circuit(c: Circuit) -> str:
    lines = []
    for layer in c.layers:
        if isinstance(layer, PhaseLayer):
            lines.append(f"P {layer.param_index}")
        else:
            lines.append(f"M {layer.param_index} {','.join(map(str, layer.vertices))}")
    return "\n".join(lines) + "\n"


def loads_circuit(text: str, n_qubits: int) -> Circuit:
    layers: list[Layer] = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "P" and len(parts) == 2:
            layers.append(PhaseLayer(int(parts[1])))
        elif parts[0] == "M" and len(parts) == 3:
            layers.append(MixerLayer(tuple(int(v) for v in parts[2].split(",")), int(parts[1])))
        else:
            raise CircuitError(f"bad circuit line: {line!r}")
    return Circuit(n_qubits, tuple(layers))
