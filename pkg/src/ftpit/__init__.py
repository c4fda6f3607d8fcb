"""Fault-tolerant parallel-in-time integration over emulated PFASST ranks."""

from .collocation import (
    CollocationTable,
    Preconditioner,
    build_integration_matrices,
    build_preconditioner,
    generate_nodes,
    make_table,
)
from .config import RunConfig, build_simulation, default_config, load_config
from .controller import (
    BlockResult,
    Hierarchy,
    LevelSetup,
    PfasstOptions,
    ProcessState,
    SimulationSetup,
    Status,
    make_ranks,
    pfasst_iteration,
    predictor,
    run_block,
    run_simulation,
)
from .faults import (
    FaultPlan,
    RecoveryStrategy,
    compute_k_add,
    coarse_level_correction,
    generate_fault_plan,
    inject_fault,
    make_fault_hook,
    recover_one_sided,
    recover_two_sided,
)
from .overhead import (
    CostModel,
    efficiency_ratio,
    overhead_recovery,
    overhead_restart,
    t_no_fault,
    t_recovery,
    t_restart,
)
from .problems import Grid1D, ProblemSpec, advection1d, dahlquist, grayscott1d, heat1d
from .sweeper import (
    LevelState,
    compute_residual,
    make_level,
    solve_collocation_direct,
    spread,
    sweep,
)
from .transfer import (
    TransferPair,
    coarse_correction,
    compute_fas_tau,
    make_transfer_pair,
    restrict_level,
)

__version__ = "0.1.0"
