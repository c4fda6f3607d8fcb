"""Hard-fault injection, forward-recovery strategies, and fault plans.

A hard fault destroys every level of one rank between two iterations. The
recovery strategies rebuild the fine level from neighbor data (constant spread
from the predecessor, or linear interpolation between both neighbors) and can
additionally run capped coarse-level correction sweeps before the next
iteration. ``restart-block`` is the backward-recovery baseline: wipe all ranks
and rerun the predictor.
"""

from dataclasses import dataclass, field

import numpy as np

from .controller import (
    BULK_PROLONG_ORDER,
    BlockContext,
    ProcessState,
    Status,
    predictor,
)
from .errors import ConfigurationError, UsageError
from .sweeper import compute_residual, refresh_f, sweep
from .transfer import compute_fas_tau, restrict_level

RESTART_BLOCK = "restart-block"
ONE_SIDED = "one-sided"
ONE_SIDED_CORR = "one-sided-corr"
TWO_SIDED = "two-sided"
TWO_SIDED_CORR = "two-sided-corr"

RECOVERY_STRATEGIES = (ONE_SIDED, ONE_SIDED_CORR, TWO_SIDED, TWO_SIDED_CORR)
ALL_STRATEGIES = (RESTART_BLOCK,) + RECOVERY_STRATEGIES

EXPLICIT_LIST = "explicit-list"
BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class RecoveryStrategy:
    """Named recovery behavior; ``corr`` variants add coarse-level correction."""

    kind: str

    def __post_init__(self):
        if self.kind not in ALL_STRATEGIES:
            raise ConfigurationError(f"unknown recovery strategy: {self.kind!r}")

    @property
    def two_sided(self) -> bool:
        return self.kind in (TWO_SIDED, TWO_SIDED_CORR)

    @property
    def with_correction(self) -> bool:
        return self.kind in (ONE_SIDED_CORR, TWO_SIDED_CORR)


@dataclass
class FaultPlan:
    """Where faults strike, as (global step, iteration) events."""

    mode: str
    events: list[tuple[int, int]]
    probability: float = 0.0
    seed: int = 0
    baseline_counts: list[int] = field(default_factory=list)

    def events_at(self, block_index: int, num_procs: int,
                  iteration: int) -> list[tuple[int, int]]:
        lo = block_index * num_procs
        hi = lo + num_procs
        return [e for e in self.events if lo <= e[0] < hi and e[1] == iteration]


def generate_fault_plan(mode: str, probability: float = 0.0, seed: int = 0,
                        baseline_counts: list[int] | None = None,
                        events: list[tuple[int, int]] | None = None) -> FaultPlan:
    """Build a fault plan a-priori.

    Bernoulli mode draws once per (step, iteration) cell, iterating steps in
    ascending order and iterations 1..baseline_count(step), so a fixed seed
    reproduces the event list exactly. Faults are only placed in iterations
    that the no-fault run also performs.
    """
    if mode == EXPLICIT_LIST:
        return FaultPlan(mode=mode, events=sorted(events or []))
    if mode != BERNOULLI:
        raise ConfigurationError(f"unknown fault plan mode: {mode!r}")
    if baseline_counts is None:
        raise ConfigurationError("bernoulli fault plans need baseline iteration counts")
    rng = np.random.default_rng(seed)
    drawn = []
    for step, count in enumerate(baseline_counts):
        for iteration in range(1, count + 1):
            if rng.random() < probability:
                drawn.append((step, iteration))
    return FaultPlan(mode=BERNOULLI, events=drawn, probability=probability,
                     seed=seed, baseline_counts=list(baseline_counts))


def write_fault_plan(plan: FaultPlan, path) -> None:
    lines = [f"# mode={plan.mode} p={plan.probability} seed={plan.seed}"]
    lines += [f"{s},{k}" for s, k in plan.events]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_fault_plan(path) -> FaultPlan:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ConfigurationError(f"fault plan {path} is missing its header line")
    header = dict(item.split("=") for item in lines[0][1:].split())
    events = []
    for ln in lines[1:]:
        s, k = ln.split(",")
        events.append((int(s), int(k)))
    return FaultPlan(mode=header["mode"], events=events,
                     probability=float(header["p"]), seed=int(header["seed"]))


def inject_fault(rank: ProcessState) -> None:
    """Destroy all data a rank holds; already-delivered messages survive."""
    for level in rank.levels:
        level.u0 = np.zeros_like(level.u0)
        level.u[:] = 0.0
        level.f_impl[:] = 0.0
        level.f_expl[:] = 0.0
        if level.tau is not None:
            level.tau[:] = 0.0
    rank.status = Status.FAILED


def recover_one_sided(rank: ProcessState, ctx: BlockContext,
                      predecessor_end: np.ndarray,
                      strategy: RecoveryStrategy, k_fault: int,
                      pred_coarse_residual: float = np.inf) -> int:
    """Spread the predecessor's fine end value to all fine nodes (constant interpolation)."""
    fine = rank.levels[0]
    fine.u0 = predecessor_end.copy()
    fine.u[:] = predecessor_end
    refresh_f(fine, ctx.hierarchy.levels[0].problem)
    n_rec = 0
    if strategy.with_correction:
        n_rec = coarse_level_correction(rank, ctx, k_fault, pred_coarse_residual)
    rank.status = Status.ITERATING
    return n_rec


def recover_two_sided(rank: ProcessState, ctx: BlockContext,
                      predecessor_end: np.ndarray,
                      successor_initial: np.ndarray | None,
                      strategy: RecoveryStrategy, k_fault: int,
                      pred_coarse_residual: float = np.inf) -> int:
    """Linear interpolation between the neighbors' values along the node positions.

    The left endpoint takes the predecessor's end value, the right endpoint the
    initial value currently held by the successor. Without a successor (last
    rank in the block) this falls back to one-sided recovery.
    """
    if successor_initial is None:
        return recover_one_sided(rank, ctx, predecessor_end, strategy, k_fault,
                                 pred_coarse_residual)
    fine = rank.levels[0]
    theta = fine.table.nodes
    fine.u0 = predecessor_end.copy()
    fine.u[:] = (np.outer(1.0 - theta, predecessor_end)
                 + np.outer(theta, successor_initial))
    refresh_f(fine, ctx.hierarchy.levels[0].problem)
    n_rec = 0
    if strategy.with_correction:
        n_rec = coarse_level_correction(rank, ctx, k_fault, pred_coarse_residual)
    rank.status = Status.ITERATING
    return n_rec


def coarse_level_correction(rank: ProcessState, ctx: BlockContext, k_fault: int,
                            pred_coarse_residual: float = np.inf) -> int:
    """Improve reconstructed fine values by capped sweeps on the coarsest level.

    Sweeping stops once min(k_fault, P) sweeps are done or the coarse residual
    drops below the predecessor's current coarse residual; the accumulated
    coarse change is then prolonged back up the stack.
    """
    cap = min(k_fault, ctx.num_procs)
    if cap <= 0:
        return 0
    hierarchy = ctx.hierarchy
    coarsest = hierarchy.num_levels - 1
    if coarsest == 0:
        return 0
    levels = rank.levels

    for l in range(0, coarsest):
        pair = hierarchy.pairs[l]
        restrict_level(levels[l], pair, levels[l + 1],
                       hierarchy.levels[l + 1].problem)
        levels[l + 1].tau = compute_fas_tau(levels[l], levels[l + 1], pair)
    snapshot = levels[coarsest].u.copy()

    coarse_problem = hierarchy.levels[coarsest].problem
    n_rec = 0
    while n_rec < cap:
        sweep(levels[coarsest], coarse_problem)
        n_rec += 1
        if compute_residual(levels[coarsest]) < pred_coarse_residual:
            break

    # reconstructed fields are O(1), so prolong the change at bulk order
    delta = levels[coarsest].u - snapshot
    for l in range(coarsest - 1, -1, -1):
        delta = hierarchy.pairs[l].prolong_space_time(
            delta, order=BULK_PROLONG_ORDER)
        levels[l].u += delta
        refresh_f(levels[l], hierarchy.levels[l].problem)
    return n_rec


def make_fault_hook(plan: FaultPlan, strategy: RecoveryStrategy):
    """Build the between-iterations hook run_block expects.

    The hook injects every planned event for the current (block, iteration),
    applies the strategy, and returns one record per event. In bernoulli mode
    an event addressed to an already-converged rank is skipped and logged, as
    such iterations do not exist in the no-fault reference.
    """

    def hook(ctx: BlockContext, iteration: int, ranks: list[ProcessState]):
        applied = []
        events = plan.events_at(ctx.block_index, ctx.num_procs, iteration)
        for step, _ in events:
            p = step - ctx.block_index * ctx.num_procs
            rank = ranks[p]
            record = {"step": step, "iteration": iteration, "rank": p,
                      "strategy": strategy.kind, "n_rec": 0, "skipped": False}
            if plan.mode == BERNOULLI and rank.status is Status.CONVERGED:
                record["skipped"] = True
                applied.append(record)
                continue
            k_fault = iteration
            if strategy.kind == RESTART_BLOCK:
                for r in ranks:
                    inject_fault(r)
                    r.status = Status.ITERATING
                predictor(ranks, ctx.hierarchy, ctx.u0_block, ctx.opts)
                applied.append(record)
                continue
            pred_end = (ctx.u0_block if p == 0
                        else ranks[p - 1].published[0]).copy()
            succ_initial = (None if p == ctx.num_procs - 1
                            else ranks[p + 1].levels[0].u0.copy())
            pred_coarse_residual = (compute_residual(ranks[p - 1].levels[-1])
                                    if p > 0 else np.inf)
            inject_fault(rank)
            if strategy.two_sided:
                record["n_rec"] = recover_two_sided(
                    rank, ctx, pred_end, succ_initial, strategy, k_fault,
                    pred_coarse_residual)
            else:
                record["n_rec"] = recover_one_sided(
                    rank, ctx, pred_end, strategy, k_fault,
                    pred_coarse_residual)
            applied.append(record)
        return applied

    return hook


def compute_k_add(faulty, baseline) -> int:
    """Extra iterations the last rank needed because of the faults (can be negative)."""
    if faulty.fingerprint != baseline.fingerprint:
        raise UsageError("k_add requires runs with identical configurations")
    if faulty.block_index != baseline.block_index:
        raise UsageError("k_add compares the same block of both runs")
    return faulty.k_last_rank - baseline.k_last_rank
