"""Emulated time-parallel PFASST: predictor, iteration schedule, block driver.

P virtual ranks each own one time step's level stack. One call to
``pfasst_iteration`` advances every non-converged rank by one V-cycle,
processing ranks in ascending order so that a rank always sees the values its
predecessor published earlier in the same iteration. This realizes the
pipelined schedule (non-blocking fine sends, blocking coarse receives)
deterministically, without real message passing.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .collocation import CollocationTable, Preconditioner
from .errors import ConfigurationError
from .problems import ProblemSpec
from .sweeper import LevelState, compute_residual, make_level, refresh_f, spread, sweep
from .transfer import TransferPair, coarse_correction, compute_fas_tau, restrict_level


class Status(enum.Enum):
    ITERATING = "iterating"
    CONVERGED = "converged"
    FAILED = "failed"


@dataclass(frozen=True)
class LevelSetup:
    """Immutable per-level configuration shared by all ranks."""

    problem: ProblemSpec
    table: CollocationTable
    qd_impl: Preconditioner
    qd_expl: Preconditioner | None


@dataclass(frozen=True)
class Hierarchy:
    """Level stack (index 0 = finest) plus the transfer pairs between levels."""

    levels: tuple[LevelSetup, ...]
    pairs: tuple[TransferPair, ...]

    def __post_init__(self):
        if len(self.pairs) != len(self.levels) - 1:
            raise ConfigurationError("need one transfer pair per level interface")

    @property
    def num_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class PfasstOptions:
    tolerance: float
    k_max: int = 50
    n_fine: int = 1
    n_coarse: int = 1


@dataclass
class ProcessState:
    """One virtual time-parallel rank."""

    rank: int
    global_step: int
    levels: list[LevelState]
    status: Status = Status.ITERATING
    iterations_done: int = 0
    residual_history: list[float] = field(default_factory=list)
    published: list[np.ndarray | None] = field(default_factory=list)
    # restriction snapshots per level, consumed by the coarse correction
    restricted: list[np.ndarray | None] = field(default_factory=list)

    def publish(self, level_index: int) -> None:
        self.published[level_index] = self.levels[level_index].end_value.copy()


@dataclass
class BlockResult:
    """Outcome of iterating one block of P concurrent steps."""

    block_index: int
    converged: bool
    iteration_count: int
    k_per_rank: list[int]
    residual_records: list[tuple]   # (iteration, rank, residual, status, fault)
    fault_events: list[dict]
    end_value: np.ndarray
    fingerprint: str = ""

    @property
    def k_last_rank(self) -> int:
        return self.k_per_rank[-1]


@dataclass
class BlockContext:
    """Everything a fault hook needs to destroy and rebuild ranks."""

    hierarchy: Hierarchy
    opts: PfasstOptions
    num_procs: int
    dt: float
    block_index: int
    u0_block: np.ndarray


def make_ranks(hierarchy: Hierarchy, num_procs: int, dt: float,
               block_index: int, t0: float = 0.0) -> list[ProcessState]:
    """Allocate fresh process states for one block of steps."""
    ranks = []
    num_levels = hierarchy.num_levels
    for p in range(num_procs):
        step = block_index * num_procs + p
        levels = [
            make_level(ls.problem, ls.table, ls.qd_impl, ls.qd_expl,
                       dt=dt, t_left=t0 + step * dt, finest=(l == 0))
            for l, ls in enumerate(hierarchy.levels)
        ]
        ranks.append(ProcessState(
            rank=p, global_step=step, levels=levels,
            published=[None] * num_levels, restricted=[None] * num_levels,
        ))
    return ranks


# prolongation order for burn-in and recovery, where whole O(1) fields cross
# levels: linear interpolation kinks would dominate the stiff residual there
BULK_PROLONG_ORDER = 4

# iteration corrections also use the bulk order while the iterate is rough
# (residual above this multiple of the tolerance); near the fixed point the
# corrections are small and the configured default order takes over
ROUGH_PHASE_FACTOR = 1e4


def predictor(ranks: list[ProcessState], hierarchy: Hierarchy,
              u0_block: np.ndarray, opts: PfasstOptions) -> None:
    """Burn-in phase: spread the block initial value, then staged coarse sweeps.

    Rank p performs p+1 coarse sweeps; before each stage it receives its
    predecessor's end value from the previous stage and spreads it, so the
    final stage is one sweep on top of a serial one-sweep-per-step coarse
    march. The coarse change is finally carried up the stack in correction
    form, which leaves rank 0's exact initial value untouched.
    """
    num_levels = hierarchy.num_levels
    coarsest = num_levels - 1

    baselines = []
    for rank in ranks:
        value = u0_block
        rank_base = []
        for l in range(num_levels):
            if l > 0:
                value = hierarchy.pairs[l - 1].restrict_space(value)
            spread(rank.levels[l], hierarchy.levels[l].problem, value)
            rank_base.append(value.copy())
        baselines.append(rank_base)

    coarse_problem = hierarchy.levels[coarsest].problem
    end_history: list[list[np.ndarray]] = []
    for p, rank in enumerate(ranks):
        stages = []
        level = rank.levels[coarsest]
        for s in range(p + 1):
            if s >= 1:
                spread(level, coarse_problem, end_history[p - 1][s - 1])
            sweep(level, coarse_problem)
            stages.append(level.end_value.copy())
        end_history.append(stages)

    for p, rank in enumerate(ranks):
        for l in range(coarsest - 1, -1, -1):
            pair = hierarchy.pairs[l]
            below = rank.levels[l + 1]
            delta_u = below.u - baselines[p][l + 1][None, :]
            delta_u0 = below.u0 - baselines[p][l + 1]
            rank.levels[l].u += pair.prolong_space_time(
                delta_u, order=BULK_PROLONG_ORDER)
            rank.levels[l].u0 = rank.levels[l].u0 + pair.prolong_space(
                delta_u0, order=BULK_PROLONG_ORDER)
            refresh_f(rank.levels[l], hierarchy.levels[l].problem)


def pfasst_iteration(ranks: list[ProcessState], hierarchy: Hierarchy,
                     opts: PfasstOptions) -> None:
    """Advance every non-converged rank by one full V-cycle."""
    coarsest = hierarchy.num_levels - 1
    for rank in ranks:
        if rank.status is Status.CONVERGED:
            continue  # frozen ranks keep their published values visible
        pred = ranks[rank.rank - 1] if rank.rank > 0 else None
        levels = rank.levels
        fine_problem = hierarchy.levels[0].problem

        # the staggered schedule means the predecessor's same-iteration fine
        # end value (sent non-blocking after its fine sweep) has arrived by
        # the time this rank starts its own fine sweep
        if pred is not None:
            levels[0].u0 = pred.published[0].copy()
        for _ in range(opts.n_fine):
            sweep(levels[0], fine_problem)
        # convergence is judged on the freshly smoothed state; the corrections
        # below fold in newer neighbor data whose initial value arrives only
        # next iteration
        residual = compute_residual(levels[0])
        rank.publish(0)
        order = (BULK_PROLONG_ORDER
                 if residual > ROUGH_PHASE_FACTOR * opts.tolerance else None)

        if coarsest > 0:
            # downward: restrict and accumulate tau; sweep middle levels
            for l in range(0, coarsest):
                if l > 0:
                    for _ in range(opts.n_coarse):
                        sweep(levels[l], hierarchy.levels[l].problem)
                    rank.publish(l)
                pair = hierarchy.pairs[l]
                restrict_level(levels[l], pair, levels[l + 1],
                               hierarchy.levels[l + 1].problem)
                rank.restricted[l + 1] = levels[l + 1].u.copy()
                levels[l + 1].tau = compute_fas_tau(levels[l], levels[l + 1], pair)

            # coarsest: blocking receive, sweep, publish
            if pred is not None:
                levels[coarsest].u0 = pred.published[coarsest].copy()
            for _ in range(opts.n_coarse):
                sweep(levels[coarsest], hierarchy.levels[coarsest].problem)
            rank.publish(coarsest)

            # upward: receive, correct, sweep (no sweep on the finest level)
            for l in range(coarsest - 1, 0, -1):
                if pred is not None:
                    levels[l].u0 = pred.published[l].copy()
                coarse_correction(levels[l], levels[l + 1], rank.restricted[l + 1],
                                  hierarchy.pairs[l], hierarchy.levels[l].problem,
                                  order=order)
                for _ in range(opts.n_coarse):
                    sweep(levels[l], hierarchy.levels[l].problem)
            coarse_correction(levels[0], levels[1], rank.restricted[1],
                              hierarchy.pairs[0], hierarchy.levels[0].problem,
                              order=order)

        rank.iterations_done += 1
        rank.residual_history.append(residual)
        pred_ok = pred is None or pred.status is Status.CONVERGED
        if residual < opts.tolerance and pred_ok:
            rank.status = Status.CONVERGED
            # freeze the best (post-correction) end values for the successors
            for l in range(len(levels)):
                rank.publish(l)


def run_block(hierarchy: Hierarchy, num_procs: int, dt: float, block_index: int,
              u0_block: np.ndarray, opts: PfasstOptions,
              fault_hook=None, t0: float = 0.0,
              fingerprint: str = "") -> BlockResult:
    """Iterate one block to convergence (or K_max), applying faults between iterations."""
    ranks = make_ranks(hierarchy, num_procs, dt, block_index, t0=t0)
    ctx = BlockContext(hierarchy=hierarchy, opts=opts, num_procs=num_procs,
                       dt=dt, block_index=block_index, u0_block=u0_block)
    predictor(ranks, hierarchy, u0_block, opts)

    records = []
    events: list[dict] = []
    iteration = 0
    converged = False
    while True:
        iteration += 1
        prev = [r.status for r in ranks]
        pfasst_iteration(ranks, hierarchy, opts)
        hit = set()
        if fault_hook is not None:
            applied = fault_hook(ctx, iteration, ranks)
            events.extend(applied)
            hit = {e["rank"] for e in applied if not e.get("skipped")}
        for p, rank in enumerate(ranks):
            if rank.status is Status.CONVERGED:
                status = "converged" if prev[p] is not Status.CONVERGED else "frozen"
            elif prev[p] is Status.CONVERGED:
                status = "frozen"  # was frozen this iteration, then destroyed
            else:
                status = "iterating"
            residual = rank.residual_history[-1] if rank.residual_history else np.inf
            records.append((iteration, p, residual, status, int(p in hit)))
        if all(r.status is Status.CONVERGED for r in ranks):
            converged = True
            break
        if iteration >= opts.k_max:
            break

    return BlockResult(
        block_index=block_index,
        converged=converged,
        iteration_count=iteration,
        k_per_rank=[r.iterations_done for r in ranks],
        residual_records=records,
        fault_events=events,
        end_value=ranks[-1].published[0].copy(),
        fingerprint=fingerprint,
    )


@dataclass
class SimulationSetup:
    """A resolved multi-block run: hierarchy, schedule, and stopping options."""

    hierarchy: Hierarchy
    num_procs: int
    dt: float
    num_steps: int
    opts: PfasstOptions
    u0: np.ndarray
    t0: float = 0.0
    fingerprint: str = ""

    def __post_init__(self):
        if self.num_steps % self.num_procs != 0:
            raise ConfigurationError(
                f"total steps ({self.num_steps}) must be divisible by P ({self.num_procs})"
            )

    @property
    def num_blocks(self) -> int:
        return self.num_steps // self.num_procs


def run_simulation(setup: SimulationSetup, fault_hook=None) -> list[BlockResult]:
    """Run all blocks in sequence, chaining each block's end value to the next.

    Stops early (with partial results) if a block exhausts K_max without
    converging.
    """
    results = []
    u0 = setup.u0.copy()
    for b in range(setup.num_blocks):
        result = run_block(setup.hierarchy, setup.num_procs, setup.dt, b, u0,
                           setup.opts, fault_hook=fault_hook, t0=setup.t0,
                           fingerprint=setup.fingerprint)
        results.append(result)
        if not result.converged:
            break
        u0 = result.end_value.copy()
    return results
