"""Experiment campaigns: seeded multi-graph, multi-run sweeps and metric tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .ama import AmaConfig, run_ama
from .ansatz import (
    Circuit,
    ResourceModel,
    build_pnu,
    build_pu,
    build_qaoa_plus,
    circuit_depth,
    cnot_count,
    compile_circuit,
    default_n_pm,
)
from .graphs import Graph, brute_force_mis, generate, graph_id, independence_table
from .optimizer import ConfigError, OptimizerConfig, minimize_program, random_init

log = logging.getLogger(__name__)

ALGORITHMS = ("ama", "qaoa_plus", "pu", "pnu")
RUNTIME_CONSTANT = 0.1
CSV_COLUMNS = ("algo", "p", "n", "oar", "aar", "total_itrs", "total_cds", "total_cnots", "total_runtime")
RUN_COLUMNS = ("graph_id", "algo", "p", "n", "run", "seed", "expectation", "ar",
               "iterations", "depth", "cnots", "feasible")


class DegenerateInstanceError(ValueError):
    pass


def approximation_ratio(f: float, f_min: float) -> float:
    """``f / f_min`` clamped to ``[0, 1]``."""
    if f_min == 0:
        raise DegenerateInstanceError("ground energy is 0; approximation ratio undefined")
    return min(1.0, max(0.0, f / f_min))


def runtime_estimate(iterations: float, constant: float = RUNTIME_CONSTANT) -> float:
    if iterations < 0:
        raise ValueError("iteration count must be nonnegative")
    return constant * iterations


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of plain values."""
    payload = json.dumps([str(p) for p in parts], separators=(",", ":")).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class ExperimentConfig:
    graph_family: str = "regular-3"
    sizes: tuple[int, ...] = (8, 10, 12)
    graphs_per_size: int = 20
    algorithms: tuple[str, ...] = ALGORITHMS
    depths: tuple[int, ...] = (4, 5, 6)
    runs_per_setting: int = 100
    master_seed: int = 0
    er_edge_prob: float = 0.5
    n_pm: Optional[int] = None
    runtime_constant: float = RUNTIME_CONSTANT
    oar_runs_per_depth: int = 200
    oar_ama_runs_per_vertex: int = 50
    oar_max_depth: Optional[int] = None
    oar_targets: tuple[float, ...] = (0.9, 0.95, 0.99)
    ama: AmaConfig = field(default_factory=AmaConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    resources: ResourceModel = field(default_factory=ResourceModel)

    def __post_init__(self) -> None:
        for name in ("sizes", "algorithms", "depths", "oar_targets"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.graph_family != "er" and not self.graph_family.startswith("regular-"):
            raise ConfigError(f"experiment.graph_family: expected 'er' or 'regular-<d>', got {self.graph_family!r}")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise ConfigError("experiment.sizes: must be a nonempty list of positive sizes")
        if self.graphs_per_size < 1:
            raise ConfigError("experiment.graphs_per_size: must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"experiment.algorithms: unknown {bad}; choose from {list(ALGORITHMS)}")
        if any(p < 1 for p in self.depths):
            raise ConfigError("experiment.depths: every depth must be >= 1")
        if self.runs_per_setting < 1:
            raise ConfigError("experiment.runs_per_setting: must be >= 1")
        if not 0.0 <= self.er_edge_prob <= 1.0:
            raise ConfigError("experiment.er_edge_prob: must lie in [0, 1]")
        if self.n_pm is not None and self.n_pm < 1:
            raise ConfigError("experiment.n_pm: must be >= 1")
        if not self.runtime_constant >= 0:
            raise ConfigError("experiment.runtime_constant: must be >= 0")
        if self.oar_runs_per_depth < 1 or self.oar_ama_runs_per_vertex < 1:
            raise ConfigError("experiment.oar_runs_per_depth / oar_ama_runs_per_vertex: must be >= 1")
        if any(not 0 < t <= 1 for t in self.oar_targets):
            raise ConfigError("experiment.oar_targets: every target must lie in (0, 1]")

    def graph_seeds(self, n: int) -> list[int]:
        return [derive_seed(self.master_seed, "graph", self.graph_family, n, k) % 2**32
                for k in range(self.graphs_per_size)]

    def graphs(self) -> list[tuple[str, Graph]]:
        out = []
        for n in self.sizes:
            for s in self.graph_seeds(n):
                out.append((graph_id(self.graph_family, n, s), generate(self.graph_family, n, s, self.er_edge_prob)))
        return out


@dataclass(frozen=True)
class RunRecord:
    graph_id: str
    algo: str
    p: Optional[int]
    n: int
    run: int
    seed: int
    expectation: float
    ar: float
    iterations: int
    depth: int
    cnots: int
    feasible: bool


@dataclass(frozen=True)
class MetricsRow:
    algorithm: str
    p: Optional[int]
    n: int
    oar: float
    aar: float
    total_itrs: float
    total_cds: float
    total_cnots: float
    total_runtime: float


@dataclass(frozen=True)
class OarCostRow:
    algorithm: str
    n: int
    target_oar: float
    min_depth_reaching: Optional[float]
    expected_runs: Optional[float]
    expected_itrs: Optional[float]
    expected_runtime: Optional[float]
    expected_depth: Optional[float]
    expected_cnots: Optional[float]
    graphs_reached: int
    graphs_total: int

    @property
    def unreached(self) -> bool:
        return self.graphs_reached == 0


# -- single runs ----------------------------------------------------------------

def _ama_config(cfg: ExperimentConfig) -> AmaConfig:
    return replace(cfg.ama, optimizer=cfg.optimizer)


def _baseline_circuit(g: Graph, algo: str, p: int, n_pm: int, seed) -> Circuit:
    if algo == "qaoa_plus":
        return build_qaoa_plus(g, p)
    if algo == "pu":
        return build_pu(g, p, n_pm, seed)
    if algo == "pnu":
        return build_pnu(g, p, n_pm, seed)
    raise ConfigError(f"unknown algorithm {algo!r}")


def run_single(g: Graph, algo: str, p: Optional[int], seed: int,
               cfg: ExperimentConfig) -> tuple[Circuit, float, int, np.ndarray]:
    """One optimization run; returns (final circuit, expectation, iterations, params)."""
    if algo == "ama":
        res, trace = run_ama(g, _ama_config(cfg), seed)
        return trace.circuit, res.final_expectation, res.iterations, res.best_params
    circuit_seed, init_seed = np.random.SeedSequence(seed).spawn(2)
    n_pm = cfg.n_pm if cfg.n_pm is not None else default_n_pm(g.n)
    c = _baseline_circuit(g, algo, p, min(n_pm, g.n), circuit_seed)
    res = minimize_program(compile_circuit(c, g), random_init(c.param_count, cfg.optimizer, init_seed), cfg.optimizer)
    return c, res.final_expectation, res.iterations, res.best_params


def _run_cell(args) -> list[RunRecord]:
    gid, g, algo, p, run_indices, cfg = args
    alpha = brute_force_mis(g).alpha
    feasible_mask = independence_table(g)
    out = []
    for r in run_indices:
        seed = derive_seed(cfg.master_seed, gid, algo, p or 0, r)
        c, f, iters, params = run_single(g, algo, p, seed, cfg)
        probs = np.abs(compile_circuit(c, g).state(params, exact_phase=cfg.optimizer.exact_mixer_phase)) ** 2
        feasible = bool(np.all(feasible_mask[probs > 1e-12]))
        out.append(RunRecord(
            gid, algo, p, g.n, r, seed, f, approximation_ratio(f, -alpha), iters,
            circuit_depth(c, cfg.resources), cnot_count(c, g, cfg.resources), feasible,
        ))
    return out


def _execute(cells: list, jobs: int) -> list[RunRecord]:
    if jobs <= 1 or len(cells) <= 1:
        results = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    records = [r for chunk in results for r in chunk]
    order = {a: i for i, a in enumerate(ALGORITHMS)}
    records.sort(key=lambda r: (order[r.algo], r.p or 0, r.n, r.graph_id, r.run))
    return records


def collect_runs(cfg: ExperimentConfig, jobs: int = 1) -> list[RunRecord]:
    """Execute every (graph, algorithm, depth, run) cell of a campaign."""
    cells = []
    for gid, g in cfg.graphs():
        for algo in cfg.algorithms:
            for p in ([None] if algo == "ama" else cfg.depths):
                cells.append((gid, g, algo, p, range(cfg.runs_per_setting), cfg))
    return _execute(cells, jobs)


def aggregate(records: Sequence[RunRecord], runtime_constant: float = RUNTIME_CONSTANT) -> list[MetricsRow]:
    """Per-graph OAR/AAR/totals, averaged over the graphs of each (algorithm, p, n)."""
    per_graph: dict[tuple, dict[str, list[RunRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        per_graph[(r.algo, r.p, r.n)][r.graph_id].append(r)
    order = {a: i for i, a in enumerate(ALGORITHMS)}
    rows = []
    for key in sorted(per_graph, key=lambda k: (order[k[0]], k[1] or 0, k[2])):
        algo, p, n = key
        graphs = per_graph[key]
        stats = []
        for gid in sorted(graphs):
            runs = sorted(graphs[gid], key=lambda r: r.run)
            ars = [r.ar for r in runs]
            stats.append((
                max(ars),
                math.fsum(ars) / len(ars),
                float(sum(r.iterations for r in runs)),
                float(sum(r.depth for r in runs)),
                float(sum(r.cnots for r in runs)),
            ))
        k = len(stats)
        oar, aar, itrs, cds, cnots = (math.fsum(col) / k for col in zip(*stats))
        rows.append(MetricsRow(algo, p, n, oar, min(aar, oar), itrs, cds, cnots,
                               runtime_estimate(itrs, runtime_constant)))
    return rows


def run_campaign(cfg: ExperimentConfig, jobs: int = 1,
                 records_out: Optional[list] = None) -> list[MetricsRow]:
    records = collect_runs(cfg, jobs)
    if records_out is not None:
        records_out.extend(records)
    return aggregate(records, cfg.runtime_constant)


# -- resources to reach a target OAR ----------------------------------------------

def collect_oar_sweep(cfg: ExperimentConfig, jobs: int = 1,
                      algorithms: Sequence[str] = ("ama", "qaoa_plus", "pnu")) -> list[RunRecord]:
    """Depth sweep ``p = 1..p_max`` with ``oar_runs_per_depth * p`` runs each for
    the baselines, and ``oar_ama_runs_per_vertex * n`` runs for AMA."""
    cells = []
    for gid, g in cfg.graphs():
        for algo in algorithms:
            if algo == "ama":
                cells.append((gid, g, algo, None, range(cfg.oar_ama_runs_per_vertex * g.n), cfg))
                continue
            p_max = cfg.oar_max_depth if cfg.oar_max_depth is not None else g.n
            for p in range(1, p_max + 1):
                cells.append((gid, g, algo, p, range(cfg.oar_runs_per_depth * p), cfg))
    return _execute(cells, jobs)


@dataclass(frozen=True)
class _GraphCost:
    depth_level: Optional[int]
    t_avg: float
    itrs: float
    runtime: float
    depth: float
    cnots: float


def expected_runs(successes: int, runs: int) -> float:
    """Expected number of runs to first success, ``c / s``."""
    if successes <= 0:
        raise ValueError("no successes: target unreached")
    return runs / successes


def _graph_cost(runs_by_p: dict, target: float, runtime_constant: float) -> Optional[_GraphCost]:
    for p in sorted(runs_by_p, key=lambda q: q or 0):
        runs = runs_by_p[p]
        s = sum(1 for r in runs if r.ar >= target)
        if s == 0:
            continue
        t = expected_runs(s, len(runs))
        mean_itrs = math.fsum(r.iterations for r in runs) / len(runs)
        return _GraphCost(
            p, t, t * mean_itrs, t * runtime_estimate(mean_itrs, runtime_constant),
            t * math.fsum(r.depth for r in runs) / len(runs),
            t * math.fsum(r.cnots for r in runs) / len(runs),
        )
    return None


def oar_cost_rows(records: Sequence[RunRecord], target_oar: float,
                  runtime_constant: float = RUNTIME_CONSTANT) -> list[OarCostRow]:
    if not 0 < target_oar <= 1:
        raise ConfigError("target_oar: must lie in (0, 1]")
    grouped: dict[tuple, dict[str, dict]] = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for r in records:
        grouped[(r.algo, r.n)][r.graph_id][r.p].append(r)
    order = {a: i for i, a in enumerate(ALGORITHMS)}
    rows = []
    for algo, n in sorted(grouped, key=lambda k: (order[k[0]], k[1])):
        graphs = grouped[(algo, n)]
        costs = [_graph_cost(graphs[gid], target_oar, runtime_constant) for gid in sorted(graphs)]
        hit = [c for c in costs if c is not None]
        if not hit:
            rows.append(OarCostRow(algo, n, target_oar, None, None, None, None, None, None, 0, len(costs)))
            continue

        def mean(attr):
            return math.fsum(getattr(c, attr) for c in hit) / len(hit)

        depth_level = None if algo == "ama" else mean("depth_level")
        rows.append(OarCostRow(
            algo, n, target_oar, depth_level, mean("t_avg"), mean("itrs"), mean("runtime"),
            mean("depth"), mean("cnots"), len(hit), len(costs),
        ))
    return rows


def oar_cost_protocol(cfg: ExperimentConfig, target_oar: Union[float, Sequence[float], None] = None,
                      jobs: int = 1) -> list[OarCostRow]:
    targets = cfg.oar_targets if target_oar is None else (
        [target_oar] if isinstance(target_oar, (int, float)) else list(target_oar))
    records = collect_oar_sweep(cfg, jobs)
    return [row for t in targets for row in oar_cost_rows(records, t, cfg.runtime_constant)]


# -- serialization ----------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.4f}"


def results_csv(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.algorithm, "" if r.p is None else r.p, r.n, _fmt(r.oar), _fmt(r.aar),
                    _fmt(r.total_itrs), _fmt(r.total_cds), _fmt(r.total_cnots), _fmt(r.total_runtime)])
    return buf.getvalue()


def _row_dict(r: MetricsRow) -> dict:
    d = asdict(r)
    d["algo"] = d.pop("algorithm")
    return {k: d[k] for k in CSV_COLUMNS}


def results_json(rows: Iterable[MetricsRow]) -> str:
    return json.dumps([_row_dict(r) for r in rows], indent=2) + "\n"


def parse_results_json(text: str) -> list[MetricsRow]:
    out = []
    for d in json.loads(text):
        d = dict(d)
        d["algorithm"] = d.pop("algo")
        out.append(MetricsRow(**d))
    return out


def parse_results_csv(text: str) -> list[MetricsRow]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        out.append(MetricsRow(
            d["algo"], int(d["p"]) if d["p"] else None, int(d["n"]),
            *(float(d[k]) for k in CSV_COLUMNS[3:]),
        ))
    return out


def _write(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def serialize_results(rows: Sequence[MetricsRow], fmt: str, path: Union[str, Path]) -> Path:
    if fmt == "csv":
        return _write(path, results_csv(rows))
    if fmt == "json":
        return _write(path, results_json(rows))
    raise ValueError(f"unknown format {fmt!r}")


def runs_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for r in records:
        w.writerow([r.graph_id, r.algo, "" if r.p is None else r.p, r.n, r.run, r.seed,
                    repr(r.expectation), repr(r.ar), r.iterations, r.depth, r.cnots, int(r.feasible)])
    return buf.getvalue()


def parse_runs_csv(text: str) -> list[RunRecord]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        out.append(RunRecord(
            d["graph_id"], d["algo"], int(d["p"]) if d["p"] else None, int(d["n"]), int(d["run"]),
            int(d["seed"]), float(d["expectation"]), float(d["ar"]), int(d["iterations"]),
            int(d["depth"]), int(d["cnots"]), bool(int(d["feasible"])),
        ))
    return out


def oar_cost_csv(rows: Iterable[OarCostRow]) -> str:
    cols = [f.name for f in fields(OarCostRow)] + ["unreached"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        vals = []
        for c in cols:
            v = getattr(r, c)
            if isinstance(v, bool):
                vals.append(int(v))
            elif isinstance(v, float):
                vals.append(_fmt(v))
            else:
                vals.append("" if v is None else v)
        w.writerow(vals)
    return buf.getvalue()


# -- plot data (long format: series,x,y) --------------------------------------------

METRICS = ("oar", "aar", "total_itrs", "total_cds", "total_cnots", "total_runtime")
COST_METRICS = ("expected_itrs", "expected_runtime", "expected_depth", "expected_cnots")


def _long_csv(points: Iterable[tuple[str, object, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("series", "x", "y"))
    for s, x, y in points:
        w.writerow((s, x, _fmt(y)))
    return buf.getvalue()


def campaign_plot_data(rows: Sequence[MetricsRow]) -> dict[str, str]:
    """Metric-vs-n bars per algorithm (baselines split by depth)."""
    files = {}
    for metric in METRICS:
        pts = [(r.algorithm if r.p is None else f"{r.algorithm}-p{r.p}", r.n, getattr(r, metric)) for r in rows]
        files[f"{metric}_vs_n.csv"] = _long_csv(pts)
    return files


def oar_cost_plot_data(rows: Sequence[OarCostRow]) -> dict[str, str]:
    """Expected resource vs target OAR curves, one file per (metric, n)."""
    files = {}
    for n in sorted({r.n for r in rows}):
        for metric in COST_METRICS:
            pts = [(r.algorithm, _fmt(r.target_oar), getattr(r, metric))
                   for r in rows if r.n == n and not r.unreached]
            files[f"{metric}_vs_oar_n{n}.csv"] = _long_csv(pts)
    return files


def write_plot_data(files: dict[str, str], out_dir: Union[str, Path]) -> list[Path]:
    out_dir = Path(out_dir)
    return [_write(out_dir / name, text) for name, text in sorted(files.items())]
