"""Level transfer: spatial injection/interpolation, node matrices, FAS tau.

Spatial restriction is injection on nested factor-2 grids; prolongation is
piecewise-linear interpolation aware of the boundary mode, with a 4th-order
variant selectable per pair or per call (large fields need it: the kinks of a
linear interpolant carry O(h_c^2/h_f^2) second-difference error). Node
transfer matrices are Lagrange interpolation and collapse to the identity
when both levels share a node set.
"""

import numpy as np

from .errors import ConfigurationError
from .problems import DIRICHLET, NEUMANN, PERIODIC, Grid1D, ProblemSpec
from .sweeper import LevelState, refresh_f


def _cubic_midpoints(padded: np.ndarray) -> np.ndarray:
    """Midpoint values of consecutive lattice intervals from 4-point stencils."""
    return (-padded[:-3] + 9.0 * padded[1:-2] + 9.0 * padded[2:-1]
            - padded[3:]) / 16.0


def lagrange_matrix(src_nodes: np.ndarray, dst_nodes: np.ndarray) -> np.ndarray:
    """Interpolation matrix evaluating the Lagrange basis on src at dst points."""
    src = np.asarray(src_nodes, dtype=float)
    dst = np.asarray(dst_nodes, dtype=float)
    if src.size == dst.size and np.allclose(src, dst, atol=1e-14):
        return np.eye(src.size)
    mat = np.empty((dst.size, src.size))
    for j in range(src.size):
        others = np.delete(src, j)
        mat[:, j] = np.prod((dst[:, None] - others[None, :]), axis=1) \
            / np.prod(src[j] - others)
    return mat


class TransferPair:
    """Operators between one fine and one coarse level of the same problem."""

    def __init__(self, fine_grid: Grid1D, coarse_grid: Grid1D,
                 fine_nodes: np.ndarray, coarse_nodes: np.ndarray,
                 components: int = 1, prolong_order: int = 2):
        if fine_grid.boundary != coarse_grid.boundary:
            raise ConfigurationError("levels must share a boundary mode")
        self.boundary = fine_grid.boundary
        self.components = components
        self.nf = fine_grid.num_points
        self.nc = coarse_grid.num_points
        self.identical = self.nf == self.nc
        if not self.identical:
            expected = {DIRICHLET: 2 * self.nc + 1, PERIODIC: 2 * self.nc,
                        NEUMANN: 2 * self.nc - 1}[self.boundary]
            if self.nf != expected:
                raise ConfigurationError(
                    f"grids not nested: fine N={self.nf}, coarse N={self.nc} "
                    f"({self.boundary})"
                )
        if prolong_order not in (2, 4):
            raise ConfigurationError("prolongation order must be 2 or 4")
        self.prolong_order = prolong_order
        self.restrict_nodes = lagrange_matrix(fine_nodes, coarse_nodes)
        self.prolong_nodes = lagrange_matrix(coarse_nodes, fine_nodes)
        self.node_identity = self.restrict_nodes.shape[0] == self.restrict_nodes.shape[1] \
            and np.array_equal(self.restrict_nodes, np.eye(self.restrict_nodes.shape[0]))

    # -- spatial operators on flat (possibly multi-component) vectors --------

    def restrict_space(self, v: np.ndarray) -> np.ndarray:
        if self.identical:
            return v.copy()
        comps = v.reshape(self.components, self.nf)
        if self.boundary == DIRICHLET:
            out = comps[:, 1::2]
        else:
            out = comps[:, 0::2]
        return out.reshape(-1).copy()

    def prolong_space(self, v: np.ndarray, order: int | None = None) -> np.ndarray:
        if self.identical:
            return v.copy()
        comps = v.reshape(self.components, self.nc)
        out = np.empty((self.components, self.nf))
        for i in range(self.components):
            out[i] = self._prolong_1d(comps[i], order or self.prolong_order)
        return out.reshape(-1)

    def _prolong_1d(self, c: np.ndarray, order: int) -> np.ndarray:
        fine = np.empty(self.nf)
        if order == 4 and self.nc < 2:
            order = 2
        if self.boundary == DIRICHLET:
            fine[1::2] = c
            if order == 2:
                fine[2:-1:2] = 0.5 * (c[:-1] + c[1:])
                if self.nc >= 2:
                    # linear extrapolation toward the walls
                    fine[0] = 0.5 * (3.0 * c[0] - c[1])
                    fine[-1] = 0.5 * (3.0 * c[-1] - c[-2])
                else:
                    fine[0] = 0.5 * c[0]
                    fine[-1] = 0.5 * c[-1]
            else:
                # walls are lattice points with value 0; ghosts by odd reflection
                padded = np.concatenate([[-c[0], 0.0], c, [0.0, -c[-1]]])
                fine[0::2] = _cubic_midpoints(padded)
            return fine
        fine[0::2] = c
        if self.boundary == PERIODIC:
            if order == 2:
                fine[1::2] = 0.5 * (c + np.roll(c, -1))
            else:
                fine[1::2] = (-np.roll(c, 1) + 9.0 * c
                              + 9.0 * np.roll(c, -1) - np.roll(c, -2)) / 16.0
        else:  # neumann
            if order == 2:
                fine[1::2] = 0.5 * (c[:-1] + c[1:])
            else:
                # mirror ghosts across the boundary points
                padded = np.concatenate([[c[1]], c, [c[-2]]])
                fine[1::2] = _cubic_midpoints(padded)
        return fine

    # -- space-time operators on (M, ndof) node-value arrays -----------------

    def restrict_space_time(self, values: np.ndarray) -> np.ndarray:
        spatial = np.stack([self.restrict_space(values[m])
                            for m in range(values.shape[0])])
        if self.node_identity:
            return spatial
        return self.restrict_nodes @ spatial

    def prolong_space_time(self, values: np.ndarray,
                           order: int | None = None) -> np.ndarray:
        spatial = np.stack([self.prolong_space(values[m], order=order)
                            for m in range(values.shape[0])])
        if self.node_identity:
            return spatial
        return self.prolong_nodes @ spatial


def make_transfer_pair(fine_problem: ProblemSpec, coarse_problem: ProblemSpec,
                       fine_nodes: np.ndarray, coarse_nodes: np.ndarray,
                       prolong_order: int = 2) -> TransferPair:
    if fine_problem.components != coarse_problem.components:
        raise ConfigurationError("levels must agree on the component count")
    return TransferPair(fine_problem.grid, coarse_problem.grid,
                        fine_nodes, coarse_nodes,
                        components=fine_problem.components,
                        prolong_order=prolong_order)


def restrict_level(fine: LevelState, pair: TransferPair, coarse: LevelState,
                   coarse_problem: ProblemSpec) -> None:
    """Populate coarse U, u0 from fine values; coarse F is recomputed, not restricted."""
    coarse.u[:] = pair.restrict_space_time(fine.u)
    coarse.u0 = pair.restrict_space(fine.u0)
    refresh_f(coarse, coarse_problem)


def compute_fas_tau(fine: LevelState, coarse: LevelState,
                    pair: TransferPair) -> np.ndarray:
    """FAS correction: restricted fine integral minus coarse integral of restricted values.

    Requires ``coarse`` to already hold the restricted fine values with
    recomputed F. For stacks deeper than two levels, the finer level's own tau
    is restricted and added.
    """
    fine_integral = fine.dt * (fine.table.q_matrix @ fine.f_total())
    coarse_integral = coarse.dt * (coarse.table.q_matrix @ coarse.f_total())
    tau = pair.restrict_space_time(fine_integral) - coarse_integral
    if fine.tau is not None:
        tau += pair.restrict_space_time(fine.tau)
    return tau


def coarse_correction(fine: LevelState, coarse_new: LevelState,
                      coarse_old_restricted: np.ndarray, pair: TransferPair,
                      fine_problem: ProblemSpec, order: int | None = None) -> None:
    """Add the prolonged coarse change to the fine values and refresh fine F."""
    fine.u += pair.prolong_space_time(coarse_new.u - coarse_old_restricted,
                                      order=order)
    refresh_f(fine, fine_problem)
