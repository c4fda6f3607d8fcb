"""Command-line drivers: single runs, fault heatmap sweeps, stress tests, cost model.

Exit codes: 0 on success, 1 when a block fails to converge, 2 on usage errors.
``FTPIT_THREADS`` caps worker processes for heatmap sweeps; cells are
independent and results are written in sorted order either way.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import faults, overhead, records
from .config import RunConfig, build_simulation, default_config, load_config
from .controller import run_block, run_simulation
from .errors import ConfigurationError, FtpitError, UsageError


def _strategy_hook(cfg: RunConfig):
    """Resolve the (strategy, plan) pair a config asks for; (None, None) when fault-free."""
    if cfg.strategy == "none":
        return None, None
    strategy = faults.RecoveryStrategy(cfg.strategy)
    if cfg.fault_plan:
        plan = faults.read_fault_plan(cfg.fault_plan)
    elif cfg.fault_step >= 0 and cfg.fault_iteration >= 1:
        plan = faults.generate_fault_plan(
            faults.EXPLICIT_LIST, events=[(cfg.fault_step, cfg.fault_iteration)])
    else:
        raise UsageError(
            "strategy set but no fault source: give fault_step/fault_iteration, "
            "a fault_plan file, or run via 'stress'")
    return strategy, plan


def _run_and_write(cfg: RunConfig, out_dir: Path, baseline_summary=None,
                   plan=None, strategy=None, tag: str = "") -> tuple[list, int]:
    setup = build_simulation(cfg)
    hook = faults.make_fault_hook(plan, strategy) if plan is not None else None
    results = run_simulation(setup, fault_hook=hook)

    run_id = cfg.run_id()
    suffix = f"-{tag}" if tag else ""
    baseline_k = None
    if baseline_summary is not None:
        blocks = baseline_summary["blocks"]
        if len(blocks) >= len(results):
            baseline_k = [blocks[i]["k_last_rank"] for i in range(len(results))]
    summary = records.summarize(results, run_id, cfg.resolved(), baseline_k)
    out_dir.mkdir(parents=True, exist_ok=True)
    records.write_csv(out_dir / f"residuals{suffix}.csv", records.RESIDUAL_HEADER,
                      records.residual_rows(run_id, results))
    records.write_summary(out_dir / f"summary{suffix}.json", summary)
    exit_code = 0 if all(r.converged for r in results) else 1
    return results, exit_code


def cmd_run(args) -> int:
    cfg = _load(args)
    baseline_summary = records.read_summary(args.baseline) if args.baseline else None
    strategy, plan = _strategy_hook(cfg)
    _, code = _run_and_write(cfg, Path(args.out), baseline_summary,
                             plan=plan, strategy=strategy)
    return code


def _sweep_cell(payload):
    """One heatmap cell: a fresh single-block run with one planted fault."""
    cfg_dict, strategy_name, step, iteration = payload
    cfg = RunConfig(**cfg_dict)
    setup = build_simulation(cfg)
    plan = faults.generate_fault_plan(faults.EXPLICIT_LIST,
                                      events=[(step, iteration)])
    hook = faults.make_fault_hook(plan, faults.RecoveryStrategy(strategy_name))
    result = run_block(setup.hierarchy, setup.num_procs, setup.dt, 0, setup.u0,
                       setup.opts, fault_hook=hook, fingerprint=setup.fingerprint)
    return (strategy_name, step, iteration, result.k_last_rank)


def cmd_sweep_faults(args) -> int:
    cfg = _load(args)
    setup = build_simulation(cfg)
    if setup.num_blocks != 1:
        raise UsageError("sweep-faults needs a single-block configuration")
    strategies = args.strategy or list(faults.ALL_STRATEGIES)
    for name in strategies:
        faults.RecoveryStrategy(name)  # validate early

    baseline = run_block(setup.hierarchy, setup.num_procs, setup.dt, 0, setup.u0,
                         setup.opts, fingerprint=setup.fingerprint)
    if not baseline.converged:
        print("baseline run did not converge", file=sys.stderr)
        return 1
    k_base = baseline.k_last_rank

    cells = [(cfg.resolved(), name, step, iteration)
             for name in strategies
             for step in range(setup.num_procs)
             for iteration in range(1, k_base + 1)]
    workers = int(os.environ.get("FTPIT_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, cells, chunksize=4))
    else:
        outcomes = [_sweep_cell(c) for c in cells]

    rows = [[name, step, iteration, k_total, k_total - k_base]
            for name, step, iteration, k_total in sorted(outcomes)]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records.write_csv(out_dir / "heatmap.csv", records.HEATMAP_HEADER, rows)
    records.write_summary(out_dir / "summary.json", records.summarize(
        [baseline], cfg.run_id(), cfg.resolved()))
    return 0


def cmd_stress(args) -> int:
    cfg = _load(args)
    out_dir = Path(args.out)

    base_cfg = replace(cfg, strategy="none")
    if args.baseline:
        baseline_summary = records.read_summary(args.baseline)
    else:
        _, code = _run_and_write(base_cfg, out_dir, tag="baseline")
        if code != 0:
            return code
        baseline_summary = records.read_summary(out_dir / "summary-baseline.json")
    baseline_counts = [k for block in baseline_summary["blocks"]
                       for k in block["k_per_rank"]]
    baseline_k = [block["k_last_rank"] for block in baseline_summary["blocks"]]

    plan = faults.generate_fault_plan(
        faults.BERNOULLI, probability=cfg.fault_probability, seed=cfg.seed,
        baseline_counts=baseline_counts)
    faults.write_fault_plan(plan, out_dir / "fault_plan.txt")

    rows = []
    worst = 0
    for name in faults.RECOVERY_STRATEGIES:
        run_cfg = replace(cfg, strategy=name)
        results, code = _run_and_write(run_cfg, out_dir, baseline_summary,
                                       plan=plan,
                                       strategy=faults.RecoveryStrategy(name),
                                       tag=name)
        worst = max(worst, code)
        for i, block in enumerate(results):
            n_faults = sum(1 for e in block.fault_events if not e.get("skipped"))
            rows.append([name, block.block_index, block.k_last_rank,
                         block.k_last_rank - baseline_k[i], n_faults])
    records.write_csv(out_dir / "stress.csv", records.STRESS_HEADER, sorted(rows))
    return worst


def cmd_overhead(args) -> int:
    if args.baseline and args.faulty:
        base = records.read_summary(args.baseline)
        faulty = records.read_summary(args.faulty)
        block_b, block_f = base["blocks"][0], faulty["blocks"][0]
        applied = [e for e in block_f["fault_events"] if not e.get("skipped")]
        if not applied:
            raise UsageError("faulty summary contains no applied fault events")
        model = overhead.CostModel(
            num_procs=len(block_b["k_per_rank"]),
            k_iterations=block_b["k_last_rank"],
            k_fault=applied[0]["iteration"],
            k_add=block_f["k_last_rank"] - block_b["k_last_rank"],
            n_coarse=base["config"]["n_coarse"], n_fine=base["config"]["n_fine"],
            gamma_coarse=args.gamma_coarse, gamma_fine=args.gamma_fine,
            n_rec=applied[0]["n_rec"], gamma_rec=args.gamma_rec,
        )
    else:
        model = overhead.CostModel(
            num_procs=args.num_procs, k_iterations=args.k, k_fault=args.k_fault,
            k_add=args.k_add, n_coarse=args.n_coarse, n_fine=args.n_fine,
            gamma_coarse=args.gamma_coarse, gamma_fine=args.gamma_fine,
            n_rec=args.n_rec, gamma_rec=args.gamma_rec,
        )
    report = overhead.efficiency_ratio(model)
    print(json.dumps({
        "t_no_fault": overhead.t_no_fault(model),
        "t_restart": overhead.t_restart(model),
        "t_recovery": overhead.t_recovery(model),
        "overhead_restart": overhead.overhead_restart(model),
        "overhead_recovery": overhead.overhead_recovery(model),
        "ratio": report.ratio,
        "criteria": {
            "k_add_within_k_fault": report.k_add_within_k_fault,
            "n_rec_within_budget": report.n_rec_within_budget,
            "reconstruction_cheap": report.reconstruction_cheap,
        },
        "efficient": report.efficient,
    }, indent=2, sort_keys=True))
    return 0


def _load(args) -> RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        cfg = load_config(path)
    else:
        cfg = default_config(args.problem)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "run_strategy", None):
        overrides["strategy"] = args.run_strategy
    return replace(cfg, **overrides) if overrides else cfg


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file (flat key/value)")
    sub.add_argument("--problem", default="heat",
                     help="built-in preset when no config file is given")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override config seed")
    sub.add_argument("--baseline", help="summary.json of a matching no-fault run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftpit",
        description="Emulated time-parallel PFASST with hard-fault injection "
                    "and forward recovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation per the config")
    _add_common(p_run)
    p_run.add_argument("--strategy", dest="run_strategy",
                       choices=("none",) + faults.ALL_STRATEGIES,
                       help="override config strategy")

    p_sweep = sub.add_parser(
        "sweep-faults",
        help="run one faulty block per (step, iteration) cell and strategy")
    _add_common(p_sweep)
    p_sweep.add_argument("--strategy", action="append",
                         choices=faults.ALL_STRATEGIES,
                         help="strategy to sweep (repeatable; default all)")

    p_stress = sub.add_parser(
        "stress", help="Bernoulli fault stress test over all recovery strategies")
    _add_common(p_stress)

    p_over = sub.add_parser("overhead", help="evaluate the analytic cost model")
    p_over.add_argument("--baseline", help="summary.json of the no-fault run")
    p_over.add_argument("--faulty", help="summary.json of the faulty run")
    p_over.add_argument("-P", "--num-procs", type=int, default=16)
    p_over.add_argument("--k", type=int, default=9)
    p_over.add_argument("--k-fault", type=int, default=0)
    p_over.add_argument("--k-add", type=int, default=0)
    p_over.add_argument("--n-coarse", type=int, default=1)
    p_over.add_argument("--n-fine", type=int, default=1)
    p_over.add_argument("--gamma-coarse", type=float, default=0.1)
    p_over.add_argument("--gamma-fine", type=float, default=1.0)
    p_over.add_argument("--n-rec", type=int, default=0)
    p_over.add_argument("--gamma-rec", type=float, default=0.0)
    return parser


COMMANDS = {
    "run": cmd_run,
    "sweep-faults": cmd_sweep_faults,
    "stress": cmd_stress,
    "overhead": cmd_overhead,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FtpitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
