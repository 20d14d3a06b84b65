"""Adaptive mixer allocation: grow mixer-only layers chosen from a per-vertex operator pool.

Each growth step scores every pool vertex by appending it to the layer under
construction, freezing the trained parameters, and averaging over a shared
list of random ``beta`` draws for the new layer:

* ``f_fun`` is the mean of ``-<H_C>`` (expected independent-set size),
* ``f_gra`` is the mean of ``|dF/dbeta|`` for the new layer's parameter,
* ``score = (1 - f1) * f_fun + f1 * f_gra``.

The best-scoring vertex joins the layer and leaves the pool. Selection stops
when the largest ``f_gra`` of the round is at most ``delta_gra`` or the layer
holds ``delta_add`` mixers. All parameters are then re-optimized, with the
previous optimum as warm start and a fresh random ``beta`` for the new layer.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .ansatz import (
    Circuit,
    MixerLayer,
    PhaseLayer,
    append_mixer_layer,
    compile_circuit,
    random_subset,
)
from .graphs import Graph
from .optimizer import ConfigError, OptimizerConfig, RunResult, minimize_program, random_init

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class AmaConfig:
    """AMA hyperparameters; ``None`` sizes resolve to ``n // 2 + 1`` (``n`` for ``max_layers``)."""

    f1: float = 0.5
    sample_sets: int = 10
    delta_add: Optional[int] = None
    delta_gra: float = 1e-3
    initial_subset_size: Optional[int] = None
    outer_tol: float = 0.1
    max_layers: Optional[int] = None
    gradient_mode: str = "new_beta"
    normalize_scores: bool = False
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self) -> None:
        if not 0.0 <= self.f1 <= 1.0:
            raise ConfigError("ama.f1: must lie in [0, 1]")
        if self.sample_sets < 1:
            raise ConfigError("ama.sample_sets: must be >= 1")
        if self.delta_add is not None and self.delta_add < 1:
            raise ConfigError("ama.delta_add: must be >= 1")
        if self.delta_gra < 0:
            raise ConfigError("ama.delta_gra: must be >= 0")
        if self.initial_subset_size is not None and self.initial_subset_size < 1:
            raise ConfigError("ama.initial_subset_size: must be >= 1")
        if not self.outer_tol > 0:
            raise ConfigError("ama.outer_tol: must be > 0")
        if self.max_layers is not None and self.max_layers < 0:
            raise ConfigError("ama.max_layers: must be >= 0")
        if self.gradient_mode not in ("new_beta", "full"):
            raise ConfigError("ama.gradient_mode: expected 'new_beta' or 'full'")

    def resolved(self, n: int) -> "AmaConfig":
        """Fill graph-size dependent defaults and check them against ``n``."""
        half = n // 2 + 1
        cfg = replace(
            self,
            delta_add=half if self.delta_add is None else self.delta_add,
            initial_subset_size=half if self.initial_subset_size is None else self.initial_subset_size,
            max_layers=n if self.max_layers is None else self.max_layers,
        )
        if cfg.delta_add > n:
            raise ConfigError(f"ama.delta_add: must be <= n={n}")
        if cfg.initial_subset_size > n:
            raise ConfigError(f"ama.initial_subset_size: must be <= n={n}")
        return cfg


@dataclass(frozen=True)
class MixerScore:
    vertex: int
    f_fun: float
    f_gra: float
    score: float


def _score(f1: float, f_fun: float, f_gra: float) -> float:
    return (1.0 - f1) * f_fun + f1 * f_gra


def samples_digest(samples: Sequence[float]) -> str:
    return hashlib.sha256(np.asarray(samples, dtype=np.float64).tobytes()).hexdigest()[:16]


@dataclass
class SelectionRecord:
    step: int
    round: int
    vertex: int
    f_fun: float
    f_gra: float
    score: float
    max_f_gra: float
    samples_hash: str
    candidates: list[MixerScore] = field(default_factory=list)


@dataclass
class OptimizationRecord:
    step: int
    mixers: tuple[int, ...]
    expectation: float
    iterations: int
    init_params: list[float]
    final_params: list[float]


@dataclass
class AmaTrace:
    selections: list[SelectionRecord] = field(default_factory=list)
    optimizations: list[OptimizationRecord] = field(default_factory=list)
    circuit: Optional[Circuit] = None

    @property
    def growth_steps(self) -> int:
        return len(self.optimizations) - 1

    def layers(self) -> list[tuple[int, ...]]:
        """Selected vertices per growth step, in selection order."""
        out: dict[int, list[int]] = {}
        for rec in self.selections:
            out.setdefault(rec.step, []).append(rec.vertex)
        return [tuple(out[k]) for k in sorted(out)]

    def to_records(self) -> list[dict]:
        """One flat record per selection (round, vertex, f_fun, f_gra, score, ...)."""
        return [
            {
                "step": r.step, "round": r.round, "vertex": r.vertex,
                "f_fun": r.f_fun, "f_gra": r.f_gra, "score": r.score,
                "max_f_gra": r.max_f_gra, "samples_hash": r.samples_hash,
            }
            for r in self.selections
        ]

    def to_dict(self) -> dict:
        return {
            "selections": self.to_records(),
            "optimizations": [asdict(o) for o in self.optimizations],
        }

    def dumps_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.to_records())


def build_initial_circuit(g: Graph, cfg: AmaConfig, seed) -> Circuit:
    """Phase layer on every qubit plus one mixer layer on a random vertex subset."""
    size = cfg.initial_subset_size if cfg.initial_subset_size is not None else g.n // 2 + 1
    if not 1 <= size <= g.n:
        raise ConfigError(f"ama.initial_subset_size: must be in [1, {g.n}], got {size}")
    subset = random_subset(g.n, size, np.random.default_rng(seed))
    return Circuit(g.n, (PhaseLayer(0), MixerLayer(subset, 1)))


class _CandidateScorer:
    """Scores pool vertices on top of a frozen trained circuit.

    The trained prefix is evolved once; each candidate only re-runs the
    growth layer from that cached state.
    """

    def __init__(self, c: Circuit, params, g: Graph, cfg: AmaConfig):
        self.c, self.g, self.cfg = c, g, cfg
        self.params = np.asarray(params, dtype=np.float64)
        self.ocfg = cfg.optimizer
        self.prefix_state = compile_circuit(c, g).state(self.params, exact_phase=self.ocfg.exact_mixer_phase)

    def score(self, candidate: int, selected: Sequence[int], samples: Sequence[float]) -> MixerScore:
        if candidate in selected:
            raise ConfigError(f"vertex {candidate} is already in the layer under construction")
        grown = append_mixer_layer(self.c, tuple(selected) + (candidate,))
        exact = self.ocfg.exact_mixer_phase
        h = self.ocfg.fd_step
        if self.cfg.gradient_mode == "new_beta":
            # growth layer only, its single parameter relabelled to index 0
            layer = MixerLayer(grown.layers[-1].vertices, 0)
            prog = compile_circuit(Circuit(self.g.n, (layer,)), self.g)
            one = np.array([0], dtype=np.int64)
            funs, gras = [], []
            for beta in samples:
                theta = np.array([beta])
                funs.append(-prog.energy(theta, self.prefix_state, exact))
                gras.append(abs(prog.gradient(theta, one, h, self.prefix_state, exact)[0]))
        else:
            prog = compile_circuit(grown, self.g)
            funs, gras = [], []
            for beta in samples:
                theta = np.append(self.params, beta)
                funs.append(-prog.energy(theta, exact_phase=exact))
                gras.append(float(np.linalg.norm(prog.gradient(theta, None, h, exact_phase=exact))))
        f_fun = float(np.mean(funs))
        f_gra = float(np.mean(gras))
        return MixerScore(candidate, f_fun, f_gra, _score(self.cfg.f1, f_fun, f_gra))


def score_candidate(c_trained: Circuit, trained_params, g: Graph, candidate: int,
                    shared_samples: Sequence[float], cfg: AmaConfig,
                    selected: Sequence[int] = ()) -> MixerScore:
    """Evaluation-function score of adding ``candidate`` to the growth layer ``selected``."""
    return _CandidateScorer(c_trained, trained_params, g, cfg).score(candidate, selected, shared_samples)


def _normalize(scores: list[MixerScore], f1: float) -> list[MixerScore]:
    fun_scale = max(abs(s.f_fun) for s in scores) or 1.0
    gra_scale = max(abs(s.f_gra) for s in scores) or 1.0
    out = []
    for s in scores:
        f_fun, f_gra = s.f_fun / fun_scale, s.f_gra / gra_scale
        out.append(MixerScore(s.vertex, f_fun, f_gra, _score(f1, f_fun, f_gra)))
    return out


def _argmax(scores: list[MixerScore]) -> MixerScore:
    best = max(s.score for s in scores)
    cut = best - TIE_TOL * max(1.0, abs(best))
    return min((s for s in scores if s.score >= cut), key=lambda s: s.vertex)


def grow_layer(c: Circuit, params, g: Graph, cfg: AmaConfig, seed,
               step: int = 1) -> tuple[Circuit, list[SelectionRecord]]:
    """Select mixers one at a time from a fresh pool and append them as one new layer."""
    cfg = cfg.resolved(g.n)
    rng = np.random.default_rng(seed)
    lo, hi = cfg.optimizer.init_range
    scorer = _CandidateScorer(c, params, g, cfg)
    pool = list(range(g.n))
    selected: list[int] = []
    records: list[SelectionRecord] = []
    while True:
        samples = rng.uniform(lo, hi, size=cfg.sample_sets)
        scores = [scorer.score(v, selected, samples) for v in sorted(pool)]
        if cfg.normalize_scores:
            scores = _normalize(scores, cfg.f1)
        pick = _argmax(scores)
        max_gra = max(s.f_gra for s in scores)
        selected.append(pick.vertex)
        pool.remove(pick.vertex)
        records.append(SelectionRecord(
            step, len(records), pick.vertex, pick.f_fun, pick.f_gra, pick.score,
            max_gra, samples_digest(samples), scores,
        ))
        if not (max_gra > cfg.delta_gra and len(selected) < cfg.delta_add) or not pool:
            break
    return append_mixer_layer(c, selected), records


def run_ama(g: Graph, cfg: AmaConfig = AmaConfig(), seed=0) -> tuple[RunResult, AmaTrace]:
    """One full AMA run: pre-train the initial circuit, then grow and re-optimize."""
    cfg = cfg.resolved(g.n)
    ocfg = cfg.optimizer
    ss = np.random.SeedSequence(seed)
    subset_seed, init_seed, grow_ss = ss.spawn(3)

    circuit = build_initial_circuit(g, cfg, subset_seed)
    init = random_init(circuit.param_count, ocfg, init_seed)
    result = minimize_program(compile_circuit(circuit, g), init, ocfg)
    trace = AmaTrace()
    trace.optimizations.append(OptimizationRecord(
        0, circuit.layers[1].vertices, result.final_expectation, result.iterations,
        init.tolist(), result.best_params.tolist(),
    ))
    total_iters = result.iterations
    f_prev = result.final_expectation

    for step, step_ss in enumerate(grow_ss.spawn(cfg.max_layers), start=1):
        select_seed, beta_seed = step_ss.spawn(2)
        grown, records = grow_layer(circuit, result.best_params, g, cfg, select_seed, step=step)
        trace.selections.extend(records)
        init = np.concatenate([result.best_params, random_init(1, ocfg, beta_seed)])
        new = minimize_program(compile_circuit(grown, g), init, ocfg)
        total_iters += new.iterations
        trace.optimizations.append(OptimizationRecord(
            step, grown.layers[-1].vertices, new.final_expectation, new.iterations,
            init.tolist(), new.best_params.tolist(),
        ))
        log.debug("ama step %d: layer %s, F=%.6f (prev %.6f)", step, grown.layers[-1].vertices,
                  new.final_expectation, f_prev)
        circuit, result = grown, new
        if abs(new.final_expectation - f_prev) < cfg.outer_tol:
            break
        f_prev = new.final_expectation

    trace.circuit = circuit
    summary = RunResult(result.final_expectation, result.best_params, total_iters, result.trajectory)
    return summary, trace
