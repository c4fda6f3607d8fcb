"""Run configuration: flat JSON ingestion, defaults, and hierarchy assembly."""

import hashlib
import json
from dataclasses import asdict, dataclass, field

from . import collocation, problems
from .controller import Hierarchy, LevelSetup, PfasstOptions, SimulationSetup
from .errors import ConfigurationError
from .transfer import make_transfer_pair

PROBLEMS = ("heat", "advection", "gray-scott", "dahlquist")


@dataclass
class RunConfig:
    """Flat, JSON-compatible description of one simulation."""

    problem: str = "heat"
    num_procs: int = 16
    num_nodes: int = 5
    node_kind: str = collocation.GAUSS_LOBATTO
    # LU sweeps are the only family with strong enough stiff-mode damping to
    # match the reference iteration counts; implicit-euler remains selectable
    preconditioner: str = collocation.LU
    dofs: list[int] = field(default_factory=lambda: [255, 127])
    dt: float = 0.5
    t_end: float = 8.0
    tolerance: float = 1e-9
    k_max: int = 50
    n_fine: int = 1
    n_coarse: int = 1
    prolong_order: int = 2
    strategy: str = "none"
    seed: int = 0
    fault_step: int = -1
    fault_iteration: int = -1
    fault_probability: float = 0.03
    fault_plan: str = ""
    # problem parameters
    nu: float = 0.5
    advection_speed: float = 1.0
    advection_order: int = 2
    gs_feed: float = 0.09
    gs_decay: float = 0.086
    gs_diffusion: float = 0.01
    gs_length: float = 100.0
    decay_variant: str = problems.AS_PRINTED
    dahlquist_lambda: float = -1.0

    def resolved(self) -> dict:
        return asdict(self)

    def fingerprint(self) -> str:
        """Stable hash of everything except the fault plan and strategy."""
        payload = self.resolved()
        for key in ("strategy", "fault_step", "fault_iteration",
                    "fault_probability", "fault_plan", "seed"):
            payload.pop(key)
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def run_id(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def default_config(problem: str) -> RunConfig:
    """Paper-scale defaults for each benchmark problem."""
    if problem == "heat":
        return RunConfig()
    if problem == "advection":
        return RunConfig(problem="advection", dofs=[256, 128], dt=0.125, t_end=2.0)
    if problem == "gray-scott":
        return RunConfig(
            problem="gray-scott", num_procs=32, num_nodes=3,
            node_kind=collocation.GAUSS_RADAU_RIGHT, preconditioner=collocation.LU,
            dofs=[513, 257], dt=2.0, t_end=1280.0, tolerance=1e-7,
            prolong_order=4,
        )
    if problem == "dahlquist":
        return RunConfig(problem="dahlquist", num_procs=4, num_nodes=3,
                         dofs=[1, 1], dt=0.5, t_end=2.0, tolerance=1e-10)
    raise ConfigurationError(f"unknown problem: {problem!r}")


def load_config(path) -> RunConfig:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a flat JSON object")
    base = default_config(data.get("problem", "heat")).resolved()
    unknown = set(data) - set(base)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    base.update(data)
    return RunConfig(**base)


def build_problem(cfg: RunConfig, ndof: int) -> problems.ProblemSpec:
    if cfg.problem == "heat":
        return problems.heat1d(cfg.nu, ndof)
    if cfg.problem == "advection":
        return problems.advection1d(cfg.advection_speed, ndof, cfg.advection_order)
    if cfg.problem == "gray-scott":
        return problems.grayscott1d(cfg.gs_feed, cfg.gs_decay, cfg.gs_diffusion,
                                    cfg.gs_length, ndof, cfg.decay_variant)
    if cfg.problem == "dahlquist":
        return problems.dahlquist(cfg.dahlquist_lambda)
    raise ConfigurationError(f"unknown problem: {cfg.problem!r}")


def build_simulation(cfg: RunConfig) -> SimulationSetup:
    """Assemble tables, problems, transfer operators, and the schedule."""
    table = collocation.make_table(cfg.node_kind, cfg.num_nodes)
    qd_impl = collocation.build_preconditioner(cfg.preconditioner, table)
    qd_expl = collocation.build_preconditioner(collocation.EXPLICIT_EULER, table)

    level_problems = [build_problem(cfg, n) for n in cfg.dofs]
    levels = tuple(
        LevelSetup(problem=p, table=table, qd_impl=qd_impl,
                   qd_expl=qd_expl if p.imex else None)
        for p in level_problems
    )
    pairs = tuple(
        make_transfer_pair(level_problems[l], level_problems[l + 1],
                           table.nodes, table.nodes,
                           prolong_order=cfg.prolong_order)
        for l in range(len(level_problems) - 1)
    )

    num_steps = round(cfg.t_end / cfg.dt)
    if abs(num_steps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, abs(cfg.t_end)):
        raise ConfigurationError("t_end must be an integer multiple of dt")

    return SimulationSetup(
        hierarchy=Hierarchy(levels=levels, pairs=pairs),
        num_procs=cfg.num_procs,
        dt=cfg.dt,
        num_steps=num_steps,
        opts=PfasstOptions(tolerance=cfg.tolerance, k_max=cfg.k_max,
                           n_fine=cfg.n_fine, n_coarse=cfg.n_coarse),
        u0=level_problems[0].initial_condition(0.0),
        fingerprint=cfg.fingerprint(),
    )
