"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .ama import run_ama
from .ansatz import (
    build_pnu,
    build_pu,
    build_qaoa_plus,
    circuit_depth,
    cnot_count,
    default_n_pm,
    dumps_circuit,
    evaluate,
)
from .bench import (
    approximation_ratio,
    campaign_plot_data,
    collect_oar_sweep,
    collect_runs,
    aggregate,
    derive_seed,
    oar_cost_csv,
    oar_cost_plot_data,
    oar_cost_rows,
    parse_results_csv,
    parse_results_json,
    results_csv,
    results_json,
    runs_csv,
    write_plot_data,
)
from .config import dumps_config, load_config
from .graphs import (
    GraphError,
    brute_force_mis,
    format_bits,
    generate,
    penalty_argmax,
    read_graph,
    write_graph,
)
from .optimizer import ConfigError, minimize, random_init
from .statevector import basis_probabilities, support_is_feasible

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
BASELINES = ("qaoa_plus", "pu", "pnu")

log = logging.getLogger("ama_mis")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides experiment.master_seed)")
    p.add_argument("--print-config", action="store_true", help="echo the resolved config before running")


def _resolve(args):
    overrides = list(args.overrides)
    if getattr(args, "seed", None) is not None:
        overrides.append(f"experiment.master_seed={args.seed}")
    cfg = load_config(args.config, overrides)
    if args.print_config:
        print(dumps_config(cfg))
    return cfg


# -- commands ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        gseed = derive_seed(args.seed, "graph", args.family, args.n, k) % 2**32
        g = generate(args.family, args.n, gseed, args.edge_prob)
        path = write_graph(g, out / f"{args.family}-{args.n}-seed{gseed}.graph")
        print(path)
    return EXIT_OK


def _solve_report(g, algo, p, seed, cfg) -> dict:
    alpha = brute_force_mis(g).alpha
    trace = None
    if algo == "ama":
        res, trace = run_ama(g, replace(cfg.ama, optimizer=cfg.optimizer), seed)
        circuit = trace.circuit
    else:
        circuit_seed, init_seed = np.random.SeedSequence(seed).spawn(2)
        n_pm = min(cfg.n_pm or default_n_pm(g.n), g.n)
        circuit = {"qaoa_plus": lambda: build_qaoa_plus(g, p),
                   "pu": lambda: build_pu(g, p, n_pm, circuit_seed),
                   "pnu": lambda: build_pnu(g, p, n_pm, circuit_seed)}[algo]()
        res = minimize(circuit, g, random_init(circuit.param_count, cfg.optimizer, init_seed), cfg.optimizer)
    state, f = evaluate(circuit, res.best_params, g, cfg.optimizer.exact_mixer_phase)
    report = {
        "algorithm": algo,
        "p": p,
        "n": g.n,
        "edges": g.m,
        "seed": seed,
        "alpha": alpha,
        "expectation": f,
        "ar": approximation_ratio(f, -alpha) if alpha > 0 else None,
        "iterations": res.iterations,
        "depth": circuit_depth(circuit, cfg.resources),
        "cnots": cnot_count(circuit, g, cfg.resources),
        "feasible": support_is_feasible(state, g, 1e-12),
        "top_probabilities": [[format_bits(x), pr] for x, pr in basis_probabilities(state)[:5]],
        "params": res.best_params.tolist(),
        "circuit": dumps_circuit(circuit).splitlines(),
    }
    if trace is not None:
        report["trace"] = trace.to_dict()
    return report


def cmd_solve(args) -> int:
    if args.algo == "ama" and args.p is not None:
        raise UsageError("p not applicable to ama")
    if args.algo in BASELINES and args.p is None:
        raise UsageError(f"--p is required for {args.algo}")
    cfg = _resolve(args)
    g = read_graph(args.graph)
    seed = args.seed if args.seed is not None else cfg.master_seed
    report = _solve_report(g, args.algo, args.p, seed, cfg)
    if args.json == "-":
        print(json.dumps(report, indent=2))
        return EXIT_OK
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2) + "\n")
    print(f"algorithm    {args.algo}" + ("" if args.p is None else f" (p={args.p})"))
    print(f"graph        n={g.n} m={g.m} alpha={report['alpha']}")
    print(f"expectation  {report['expectation']:.6f}")
    ar = report["ar"]
    print(f"AR           {ar:.4f}" if ar is not None else "AR           n/a (alpha=0)")
    print(f"iterations   {report['iterations']}")
    print(f"depth        {report['depth']}")
    print(f"CNOTs        {report['cnots']}")
    print(f"feasible     {report['feasible']}")
    print("top basis states:")
    for bits, pr in report["top_probabilities"]:
        print(f"  {bits}  {pr:.4f}")
    if "trace" in report:
        print("ama trace (step round vertex f_fun f_gra score):")
        for r in report["trace"]["selections"]:
            print(f"  {r['step']} {r['round']} {r['vertex']} {r['f_fun']:.4f} {r['f_gra']:.4f} {r['score']:.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _resolve(args)
    out = Path(args.out_dir)
    records = collect_runs(cfg, jobs=args.jobs)
    rows = aggregate(records, cfg.runtime_constant)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(results_csv(rows))
    (out / "results.json").write_text(results_json(rows))
    (out / "runs.csv").write_text(runs_csv(records))
    (out / "config.toml").write_text(dumps_config(cfg))
    write_plot_data(campaign_plot_data(rows), out / "plotdata")
    infeasible = sum(not r.feasible for r in records)
    if infeasible:
        log.error("%d runs ended with infeasible support", infeasible)
        return EXIT_RUNTIME
    print(results_csv(rows), end="")
    return EXIT_OK


def cmd_oar_cost(args) -> int:
    cfg = _resolve(args)
    targets = args.target or list(cfg.oar_targets)
    out = Path(args.out_dir)
    records = collect_oar_sweep(cfg, jobs=args.jobs, algorithms=args.algorithms)
    rows = [row for t in targets for row in oar_cost_rows(records, t, cfg.runtime_constant)]
    out.mkdir(parents=True, exist_ok=True)
    (out / "oar_cost.csv").write_text(oar_cost_csv(rows))
    (out / "runs.csv").write_text(runs_csv(records))
    (out / "config.toml").write_text(dumps_config(cfg))
    write_plot_data(oar_cost_plot_data(rows), out / "plotdata")
    print(oar_cost_csv(rows), end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = read_graph(args.graph)
    res = brute_force_mis(g)
    best, winners = penalty_argmax(g, 2.0)
    print(f"alpha={res.alpha}")
    print(f"optima={len(res.optima)}")
    for x in res.optima:
        print(format_bits(x))
    if winners == res.optima and best == res.alpha:
        print("penalty-check: ok")
        return EXIT_OK
    print("penalty-check: MISMATCH")
    return EXIT_RUNTIME


def cmd_report(args) -> int:
    path = Path(args.results)
    text = path.read_text()
    rows = parse_results_json(text) if path.suffix == ".json" else parse_results_csv(text)
    header = f"{'algo':<10}{'p':>3}{'n':>4}{'OAR':>9}{'AAR':>9}{'ITRs':>12}{'CDs':>12}{'CNOTs':>13}{'runtime':>11}"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r.algorithm:<10}{'-' if r.p is None else r.p:>3}{r.n:>4}{r.oar:>9.4f}{r.aar:>9.4f}"
              f"{r.total_itrs:>12.1f}{r.total_cds:>12.1f}{r.total_cnots:>13.1f}{r.total_runtime:>11.3f}")
    if args.plot_dir:
        write_plot_data(campaign_plot_data(rows), args.plot_dir)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ama-mis", description="QAOA+ / adaptive mixer allocation benchmarks for MIS")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write seeded random graphs as edge-list files")
    p.add_argument("--family", required=True, help="er or regular-<d>")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edge-prob", type=float, default=0.5, help="ER edge probability")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="optimize one graph with one algorithm")
    p.add_argument("graph", type=Path)
    p.add_argument("--algo", required=True, choices=("ama",) + BASELINES)
    p.add_argument("--p", type=int, help="layer depth (baselines only)")
    p.add_argument("--json", help="write the JSON report to this path ('-' for stdout only)")
    _config_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a full campaign and write results + plot data")
    _config_args(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oar-cost", help="expected resources to reach target OARs")
    _config_args(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--target", type=float, action="append", help="target OAR (repeatable)")
    p.add_argument("--algorithms", nargs="+", default=["ama", "qaoa_plus", "pnu"],
                   choices=("ama",) + BASELINES)
    p.set_defaults(func=cmd_oar_cost)

    p = sub.add_parser("oracle", help="exact MIS by enumeration, with penalty cross-check")
    p.add_argument("graph", type=Path)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="pretty-print a results.csv / results.json")
    p.add_argument("results", type=Path)
    p.add_argument("--plot-dir", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ama-mis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"ama-mis: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphError, OSError, ValueError) as exc:
        print(f"ama-mis: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
