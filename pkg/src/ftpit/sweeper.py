"""SDC sweeps, collocation residuals, and a direct collocation solve for tests.

The sweep kernel works in matrix form with a generic lower-triangular QΔ:

    U^{k+1} = u0 + dt*QΔ_I f_I(U^{k+1}) + dt*QΔ_E f_E(U^{k+1})
            + dt*(Q - QΔ_I) f_I(U^k) + dt*(Q - QΔ_E) f_E(U^k) + tau

solved node by node. With the implicit-Euler QΔ this reproduces the classic
node-to-node recursion exactly; with the strictly lower explicit-Euler QΔ_E it
is the semi-implicit (IMEX) variant. ``tau`` holds the full approximation
scheme correction, integrated from the left step edge, and is None on the
finest level.
"""

from dataclasses import dataclass

import numpy as np

from .collocation import CollocationTable, Preconditioner
from .errors import OracleError, SolverError
from .problems import ProblemSpec


@dataclass
class LevelState:
    """All mutable data one virtual rank holds on one space-time level."""

    table: CollocationTable
    qd_impl: Preconditioner
    qd_expl: Preconditioner | None
    dt: float
    t_left: float
    u0: np.ndarray
    u: np.ndarray            # (M, ndof) node values
    f_impl: np.ndarray       # (M, ndof)
    f_expl: np.ndarray       # (M, ndof), zeros for non-split problems
    tau: np.ndarray | None   # (M, ndof) on coarse levels, None on the finest

    @property
    def num_nodes(self) -> int:
        return self.table.num_nodes

    @property
    def node_times(self) -> np.ndarray:
        return self.t_left + self.dt * self.table.nodes

    @property
    def end_value(self) -> np.ndarray:
        return self.u[-1]

    def f_total(self) -> np.ndarray:
        return self.f_impl + self.f_expl


def make_level(problem: ProblemSpec, table: CollocationTable,
               qd_impl: Preconditioner, qd_expl: Preconditioner | None,
               dt: float, t_left: float, finest: bool = True) -> LevelState:
    """Allocate a level with zeroed values."""
    m, n = table.num_nodes, problem.ndof
    return LevelState(
        table=table, qd_impl=qd_impl,
        qd_expl=qd_expl if problem.imex else None,
        dt=dt, t_left=t_left,
        u0=np.zeros(n), u=np.zeros((m, n)),
        f_impl=np.zeros((m, n)), f_expl=np.zeros((m, n)),
        tau=None if finest else np.zeros((m, n)),
    )


def refresh_f(level: LevelState, problem: ProblemSpec) -> None:
    """Recompute stored right-hand-side values from the current node values."""
    times = level.node_times
    for m in range(level.num_nodes):
        level.f_impl[m] = problem.rhs_impl(level.u[m], times[m])
        if level.qd_expl is not None:
            level.f_expl[m] = problem.rhs_expl(level.u[m], times[m])


def spread(level: LevelState, problem: ProblemSpec, value: np.ndarray) -> None:
    """Set u0 and every node value to ``value`` and refresh F."""
    level.u0 = value.copy()
    level.u[:] = value
    refresh_f(level, problem)


def sweep(level: LevelState, problem: ProblemSpec) -> None:
    """Perform one preconditioned pass over all nodes, updating U and F in place."""
    dt = level.dt
    q = level.table.q_matrix
    qd_i = level.qd_impl.qd
    times = level.node_times

    # iteration-lagged part of the right-hand side, fixed for the whole pass
    lagged = dt * ((q - qd_i) @ level.f_impl)
    if level.qd_expl is not None:
        qd_e = level.qd_expl.qd
        lagged += dt * ((q - qd_e) @ level.f_expl)
    if level.tau is not None:
        lagged = lagged + level.tau

    for m in range(level.num_nodes):
        b = level.u0 + lagged[m]
        if m > 0:
            b = b + dt * (qd_i[m, :m] @ level.f_impl[:m])
            if level.qd_expl is not None:
                b = b + dt * (qd_e[m, :m] @ level.f_expl[:m])
        a = dt * qd_i[m, m]
        if a == 0.0:
            u_new = b
        else:
            try:
                u_new = problem.implicit_solve(a, b, times[m], guess=level.u[m])
            except SolverError as exc:
                raise SolverError(f"implicit solve failed at node {m}: {exc}") from exc
        level.u[m] = u_new
        level.f_impl[m] = problem.rhs_impl(u_new, times[m])
        if level.qd_expl is not None:
            level.f_expl[m] = problem.rhs_expl(u_new, times[m])


def compute_residual(level: LevelState) -> float:
    """Collocation residual: max over nodes of the spatial infinity norm."""
    res = level.u0[None, :] + level.dt * (level.table.q_matrix @ level.f_total()) \
        - level.u
    if level.tau is not None:
        res = res + level.tau
    return float(np.max(np.abs(res)))


def solve_collocation_direct(problem: ProblemSpec, u0: np.ndarray, dt: float,
                             table: CollocationTable, t_left: float = 0.0,
                             tol: float = 1e-14, max_iter: int = 10_000) -> np.ndarray:
    """Solve the collocation system U = u0 + dt*Q*F(U) without sweeping.

    Linear problems are assembled densely and solved in one shot; otherwise a
    Picard iteration is used, which requires dt*L to be a contraction.
    """
    m = table.num_nodes
    n = u0.size
    times = t_left + dt * table.nodes
    q = table.q_matrix

    linear = problem.dense_operator(times[0])
    if linear is not None:
        a_mat = linear[0]
        forcing = np.stack([problem.dense_operator(t)[1] for t in times])
        system = np.eye(m * n) - dt * np.kron(q, a_mat)
        rhs = np.tile(u0, m) + dt * (q @ forcing).ravel()
        return np.linalg.solve(system, rhs).reshape(m, n)

    u = np.tile(u0, (m, 1))
    for _ in range(max_iter):
        f = np.stack([problem.rhs(u[j], times[j]) for j in range(m)])
        u_next = u0[None, :] + dt * (q @ f)
        if np.max(np.abs(u_next - u)) <= tol:
            return u_next
        u = u_next
    raise OracleError(f"Picard iteration did not converge in {max_iter} iterations")
