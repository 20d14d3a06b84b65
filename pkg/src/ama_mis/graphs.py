"""Problem instances for maximum independent set and exact classical oracles.

Assignments are tuples of 0/1 ints where position ``v`` holds ``x_v``. When an
assignment is printed as a bitstring, character ``v`` is ``x_v`` (vertex 0 on
the left), which also equals bit ``v`` of the matching basis index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

ORACLE_MAX_N = 26

Assignment = tuple[int, ...]
AssignmentLike = Union[str, Sequence[int]]


class GraphError(ValueError):
    """Invalid graph construction or query."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``."""

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise GraphError(f"vertex count must be nonnegative, got {self.n}")
        normalized = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={self.n}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        edges = list(edges)
        keys = [(min(u, v), max(u, v)) for u, v in edges]
        if len(set(keys)) != len(keys):
            raise GraphError("duplicate edge")
        return cls(n, frozenset(keys))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        """Bitmask of N(v) for each vertex, in basis-index bit positions."""
        return tuple(sum(1 << u for u in a) for a in self.adjacency)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


# -- standard graphs used throughout the tests and docs ----------------------

def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset(itertools.combinations(range(n), 2)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, frozenset((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)))


def empty_graph(n: int) -> Graph:
    return Graph(n)


# -- generators ---------------------------------------------------------------

def generate_er(n: int, p_edge: float, seed: int) -> Graph:
    """G(n, p): each unordered pair is an edge independently with prob ``p_edge``."""
    if n < 1:
        raise GraphError(f"n must be >= 1, got {n}")
    if not 0.0 <= p_edge <= 1.0:
        raise GraphError(f"edge probability must lie in [0, 1], got {p_edge}")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    draws = rng.random(len(pairs))
    return Graph(n, frozenset(pr for pr, r in zip(pairs, draws) if r < p_edge))


def generate_regular(n: int, d: int, seed: int, max_attempts: int = 100_000) -> Graph:
    """Random d-regular simple graph from the pairing model.

    A pairing that produces a self-loop or a repeated edge is discarded as a
    whole and a fresh one is drawn.
    """
    if (n * d) % 2 == 1:
        raise GraphError(f"infeasible degree sequence: n*d must be even (n={n}, d={d})")
    if d < 0 or d >= n:
        raise GraphError(f"degree must satisfy 0 <= d < n, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    points = np.repeat(np.arange(n), d)
    for _ in range(max_attempts):
        perm = rng.permutation(points)
        pairs = perm.reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        keys = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        if len(keys) != len(pairs):
            continue
        return Graph(n, frozenset(keys))
    raise GraphError(f"no simple {d}-regular pairing found after {max_attempts} attempts")


def generate(family: str, n: int, seed: int, er_edge_prob: float = 0.5) -> Graph:
    """Dispatch on a family tag: ``er`` or ``regular-<d>``."""
    if family == "er":
        return generate_er(n, er_edge_prob, seed)
    if family.startswith("regular-"):
        return generate_regular(n, int(family.split("-", 1)[1]), seed)
    raise GraphError(f"unknown graph family {family!r}")


def graph_id(family: str, n: int, seed: int) -> str:
    return f"{family}-{n}-{seed}"


# -- assignments and classical objectives -------------------------------------

def as_assignment(x: AssignmentLike) -> Assignment:
    if isinstance(x, str):
        if any(c not in "01" for c in x):
            raise GraphError(f"not a bitstring: {x!r}")
        return tuple(int(c) for c in x)
    bits = tuple(int(b) for b in x)
    if any(b not in (0, 1) for b in bits):
        raise GraphError(f"assignment entries must be 0/1: {x!r}")
    return bits


def format_bits(x: AssignmentLike) -> str:
    return "".join(str(b) for b in as_assignment(x))


def assignment_to_index(x: AssignmentLike) -> int:
    return sum(b << v for v, b in enumerate(as_assignment(x)))


def index_to_assignment(index: int, n: int) -> Assignment:
    return tuple((index >> v) & 1 for v in range(n))


def _check_length(g: Graph, x: Assignment) -> None:
    if len(x) != g.n:
        raise GraphError(f"assignment length {len(x)} does not match n={g.n}")


def is_independent(g: Graph, x: AssignmentLike) -> bool:
    x = as_assignment(x)
    _check_length(g, x)
    return all(not (x[u] and x[v]) for u, v in g.edges)


def classical_objective(x: AssignmentLike) -> int:
    return sum(as_assignment(x))


def violated_edges(g: Graph, x: AssignmentLike) -> int:
    x = as_assignment(x)
    _check_length(g, x)
    return sum(x[u] * x[v] for u, v in g.edges)


def penalty_energy(g: Graph, x: AssignmentLike, lam: float) -> float:
    """Lagrangian objective: selected-vertex count minus ``lam`` per violated edge."""
    if not lam > 1:
        raise GraphError(f"penalty multiplier must exceed 1, got {lam}")
    x = as_assignment(x)
    return float(classical_objective(x) - lam * violated_edges(g, x))


# -- vectorized tables over all 2^n basis states ------------------------------

def popcount_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        counts += (idx >> v) & 1
    return counts


def violation_table(g: Graph) -> np.ndarray:
    """Number of violated edges for every basis index."""
    idx = np.arange(1 << g.n, dtype=np.int64)
    out = np.zeros(1 << g.n, dtype=np.int64)
    for u, v in g.edges:
        out += ((idx >> u) & 1) & ((idx >> v) & 1)
    return out


def independence_table(g: Graph) -> np.ndarray:
    return violation_table(g) == 0


@dataclass(frozen=True)
class MisOracleResult:
    alpha: int
    optima: tuple[Assignment, ...]


def brute_force_mis(g: Graph) -> MisOracleResult:
    """Exhaustive maximum independent set search over all ``2^n`` assignments."""
    if g.n > ORACLE_MAX_N:
        raise GraphError(f"instance too large for oracle (n={g.n} > {ORACLE_MAX_N})")
    sizes = np.where(independence_table(g), popcount_table(g.n), -1)
    alpha = int(sizes.max())
    optima = tuple(index_to_assignment(int(i), g.n) for i in np.flatnonzero(sizes == alpha))
    return MisOracleResult(alpha, tuple(sorted(optima)))


def penalty_argmax(g: Graph, lam: float = 2.0) -> tuple[float, tuple[Assignment, ...]]:
    """Maximum of the penalty objective and all assignments attaining it."""
    if not lam > 1:
        raise GraphError(f"penalty multiplier must exceed 1, got {lam}")
    values = popcount_table(g.n) - lam * violation_table(g)
    best = values.max()
    winners = tuple(index_to_assignment(int(i), g.n) for i in np.flatnonzero(values == best))
    return float(best), tuple(sorted(winners))


# -- edge-list files ----------------------------------------------------------

def dumps_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def loads_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge-list header must be 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise GraphError(f"header declares {m} edges, found {len(body)}")
    return Graph.from_edges(n, ((int(u), int(v)) for u, v in body))


def write_graph(g: Graph, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps_edge_list(g))
    return path


def read_graph(path: Union[str, Path]) -> Graph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphError(f"cannot read graph file {path}: {exc}") from exc
    return loads_edge_list(text)
