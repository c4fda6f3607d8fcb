"""Concrete initial-value problems: right-hand sides, implicit solvers, grids.

Each problem exposes the split right-hand side ``rhs_impl``/``rhs_expl``, an
``implicit_solve`` honoring ``u - a*rhs_impl(u, t) = b``, an initial condition,
and (where known) the exact solution. State vectors are flat; multi-component
problems stack their components.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_banded

from .errors import ConfigurationError, NumericalError, SolverError

DIRICHLET = "dirichlet"
PERIODIC = "periodic"
NEUMANN = "neumann"


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid. Dirichlet grids store interior points only."""

    num_points: int
    boundary: str
    left: float = 0.0
    right: float = 1.0

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def spacing(self) -> float:
        if self.boundary == DIRICHLET:
            return self.length / (self.num_points + 1)
        if self.boundary == PERIODIC:
            return self.length / self.num_points
        if self.boundary == NEUMANN:
            return self.length / (self.num_points - 1)
        raise ConfigurationError(f"unsupported boundary: {self.boundary!r}")

    @property
    def coordinates(self) -> np.ndarray:
        h = self.spacing
        if self.boundary == DIRICHLET:
            return self.left + h * np.arange(1, self.num_points + 1)
        return self.left + h * np.arange(self.num_points)


class ProblemSpec:
    """Base interface every problem implements.

    Subclasses set ``grid``, ``components``, and ``imex`` (whether the
    right-hand side is split); the default explicit part is zero.
    """

    name = "problem"
    components = 1
    imex = False
    grid: Grid1D | None = None

    @property
    def ndof(self) -> int:
        return self.components * (self.grid.num_points if self.grid else 1)

    def rhs_impl(self, u: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def rhs_expl(self, u: np.ndarray, t: float) -> np.ndarray:
        return np.zeros_like(u)

    def rhs(self, u: np.ndarray, t: float) -> np.ndarray:
        if self.imex:
            return self.rhs_impl(u, t) + self.rhs_expl(u, t)
        return self.rhs_impl(u, t)

    def implicit_solve(self, a: float, b: np.ndarray, t: float,
                       guess: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def initial_condition(self, t0: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def exact_solution(self, t: float) -> np.ndarray | None:
        return None

    def norm(self, v: np.ndarray) -> float:
        return float(np.max(np.abs(v)))

    def dense_operator(self, t: float):
        """Return (A, g) with full rhs = A @ u + g(t) for linear problems, else None."""
        return None


class Dahlquist(ProblemSpec):
    """Scalar test problem u' = lambda*u with closed-form implicit solve."""

    name = "dahlquist"

    def __init__(self, lam: float = -1.0, u0: float = 1.0):
        self.lam = lam
        self.u0 = u0
        self.grid = Grid1D(num_points=1, boundary=PERIODIC)

    @property
    def ndof(self) -> int:
        return 1

    def rhs_impl(self, u, t):
        return self.lam * u

    def implicit_solve(self, a, b, t, guess=None):
        denom = 1.0 - a * self.lam
        if denom == 0.0:
            raise NumericalError("singular implicit solve: a*lambda == 1")
        return b / denom

    def initial_condition(self, t0=0.0):
        return np.array([self.u0 * np.exp(self.lam * t0)])

    def exact_solution(self, t):
        return np.array([self.u0 * np.exp(self.lam * t)])

    def dense_operator(self, t):
        return np.array([[self.lam]]), np.zeros(1)


class HeatForced1D(ProblemSpec):
    """Forced heat equation u_t = nu*u_xx + f(x,t) on (0,1), homogeneous Dirichlet.

    The forcing is chosen so that sin(pi*x)*cos(t) solves the PDE; diffusion is
    treated implicitly, the (time-only) forcing explicitly.
    """

    name = "heat"
    imex = True

    def __init__(self, nu: float = 0.5, num_points: int = 255):
        if num_points < 3 or num_points % 2 == 0:
            raise ConfigurationError("heat1d needs odd N >= 3 for grid nesting")
        self.nu = nu
        self.grid = Grid1D(num_points=num_points, boundary=DIRICHLET)
        self._x = self.grid.coordinates
        self._h2 = self.grid.spacing ** 2

    def rhs_impl(self, u, t):
        lap = np.empty_like(u)
        lap[1:-1] = u[:-2] - 2.0 * u[1:-1] + u[2:]
        lap[0] = -2.0 * u[0] + u[1]
        lap[-1] = u[-2] - 2.0 * u[-1]
        return (self.nu / self._h2) * lap

    def rhs_expl(self, u, t):
        return -np.sin(np.pi * self._x) * (np.sin(t) - self.nu * np.pi ** 2 * np.cos(t))

    def implicit_solve(self, a, b, t, guess=None):
        if a == 0.0:
            return b.copy()
        n = b.size
        c = a * self.nu / self._h2
        ab = np.zeros((3, n))
        ab[0, 1:] = -c
        ab[1, :] = 1.0 + 2.0 * c
        ab[2, :-1] = -c
        return solve_banded((1, 1), ab, b)

    def initial_condition(self, t0=0.0):
        return np.sin(np.pi * self._x) * np.cos(t0)

    def exact_solution(self, t):
        return np.sin(np.pi * self._x) * np.cos(t)

    def dense_operator(self, t):
        n = self.grid.num_points
        main = np.full(n, -2.0)
        off = np.ones(n - 1)
        a_mat = (self.nu / self._h2) * (
            np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
        )
        return a_mat, self.rhs_expl(np.zeros(n), t)


class Advection1D(ProblemSpec):
    """Periodic transport u_t = c*u_x with a centered stencil, treated implicitly."""

    name = "advection"

    def __init__(self, c: float = 1.0, num_points: int = 256, order: int = 2):
        if num_points % 2 != 0:
            raise ConfigurationError("advection1d needs even N for grid nesting")
        if order not in (2, 4):
            raise ConfigurationError("advection stencil order must be 2 or 4")
        self.c = c
        self.order = order
        self.grid = Grid1D(num_points=num_points, boundary=PERIODIC)
        self._x = self.grid.coordinates
        self._h = self.grid.spacing
        self._lu_cache: dict[float, tuple] = {}

    def _derivative(self, u: np.ndarray) -> np.ndarray:
        if self.order == 2:
            return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * self._h)
        return (
            -np.roll(u, -2) + 8.0 * np.roll(u, -1) - 8.0 * np.roll(u, 1) + np.roll(u, 2)
        ) / (12.0 * self._h)

    def rhs_impl(self, u, t):
        return self.c * self._derivative(u)

    def implicit_solve(self, a, b, t, guess=None):
        if a == 0.0:
            return b.copy()
        key = float(a)
        if key not in self._lu_cache:
            n = self.grid.num_points
            sys = np.eye(n) - a * self.c * self._derivative_matrix()
            self._lu_cache[key] = lu_factor(sys)
        return lu_solve(self._lu_cache[key], b)

    def _derivative_matrix(self) -> np.ndarray:
        n = self.grid.num_points
        d = np.zeros((n, n))
        idx = np.arange(n)
        if self.order == 2:
            d[idx, (idx + 1) % n] = 1.0 / (2.0 * self._h)
            d[idx, (idx - 1) % n] = -1.0 / (2.0 * self._h)
        else:
            d[idx, (idx + 2) % n] = -1.0 / (12.0 * self._h)
            d[idx, (idx + 1) % n] = 8.0 / (12.0 * self._h)
            d[idx, (idx - 1) % n] = -8.0 / (12.0 * self._h)
            d[idx, (idx - 2) % n] = 1.0 / (12.0 * self._h)
        return d

    def initial_condition(self, t0=0.0):
        return np.cos(2.0 * np.pi * (self._x + self.c * t0))

    def exact_solution(self, t):
        return np.cos(2.0 * np.pi * (self._x + self.c * t))

    def dense_operator(self, t):
        return self.c * self._derivative_matrix(), np.zeros(self.grid.num_points)


AS_PRINTED = "as-printed"
STANDARD = "standard"


class GrayScott1D(ProblemSpec):
    """Two-component reaction-diffusion system on [0, L] with Neumann boundaries.

    State is the stacked vector [u, v]. The full right-hand side (diffusion and
    reaction) is treated implicitly; the implicit solve runs Newton with an
    analytic pentadiagonal Jacobian in interleaved component ordering.

    The decay term acting on the second equation is switchable: the
    ``as-printed`` variant uses -B*u, the ``standard`` variant -B*v.
    """

    name = "gray-scott"
    components = 2

    def __init__(self, feed: float = 0.09, decay: float = 0.086,
                 diffusion: float = 0.01, length: float = 100.0,
                 num_points: int = 513, decay_variant: str = AS_PRINTED,
                 newton_atol: float = 1e-9, newton_rtol: float = 1e-8,
                 newton_maxiter: int = 50):
        if decay_variant not in (AS_PRINTED, STANDARD):
            raise ConfigurationError(f"unknown decay variant: {decay_variant!r}")
        if num_points < 3 or num_points % 2 == 0:
            raise ConfigurationError("grayscott1d needs odd N >= 3 for grid nesting")
        self.feed = feed
        self.decay = decay
        self.diffusion = diffusion
        self.decay_variant = decay_variant
        self.newton_atol = newton_atol
        self.newton_rtol = newton_rtol
        self.newton_maxiter = newton_maxiter
        self.grid = Grid1D(num_points=num_points, boundary=NEUMANN,
                           left=0.0, right=length)
        self._x = self.grid.coordinates
        self._h2 = self.grid.spacing ** 2

    def _laplacian(self, w: np.ndarray) -> np.ndarray:
        lap = np.empty_like(w)
        lap[1:-1] = w[:-2] - 2.0 * w[1:-1] + w[2:]
        lap[0] = 2.0 * (w[1] - w[0])
        lap[-1] = 2.0 * (w[-2] - w[-1])
        return lap / self._h2

    def rhs_impl(self, w, t):
        n = self.grid.num_points
        u, v = w[:n], w[n:]
        react = u * v * v
        decay = self.decay * (u if self.decay_variant == AS_PRINTED else v)
        du = self._laplacian(u) - react + self.feed * (1.0 - u)
        dv = self.diffusion * self._laplacian(v) + react - decay
        return np.concatenate([du, dv])

    def rhs_jacobian(self, w: np.ndarray) -> np.ndarray:
        """Dense Jacobian of the right-hand side in stacked [u, v] ordering."""
        n = self.grid.num_points
        u, v = w[:n], w[n:]
        lap = self._laplacian_matrix()
        jac = np.zeros((2 * n, 2 * n))
        jac[:n, :n] = lap - np.diag(v * v) - self.feed * np.eye(n)
        jac[:n, n:] = np.diag(-2.0 * u * v)
        jac[n:, n:] = self.diffusion * lap + np.diag(2.0 * u * v)
        jac[n:, :n] = np.diag(v * v)
        if self.decay_variant == AS_PRINTED:
            jac[n:, :n] -= self.decay * np.eye(n)
        else:
            jac[n:, n:] -= self.decay * np.eye(n)
        return jac

    def _laplacian_matrix(self) -> np.ndarray:
        n = self.grid.num_points
        lap = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) \
            + np.diag(np.ones(n - 1), -1)
        lap[0, 1] = 2.0
        lap[-1, -2] = 2.0
        return lap / self._h2

    def _newton_banded(self, a: float, w: np.ndarray) -> np.ndarray:
        """Banded storage of I - a*J in interleaved [u0, v0, u1, v1, ...] order."""
        n = self.grid.num_points
        u, v = w[:n], w[n:]
        h2 = self._h2
        uv2 = 2.0 * u * v
        vv = v * v

        diag_u = -2.0 / h2 - vv - self.feed
        diag_v = self.diffusion * (-2.0 / h2) + uv2
        if self.decay_variant == STANDARD:
            diag_v = diag_v - self.decay
        # neighbor coupling: interior 1/h2, boundary rows 2/h2 (mirrored ghost)
        east_u = np.full(n - 1, 1.0 / h2)
        west_u = np.full(n - 1, 1.0 / h2)
        east_u[0] = 2.0 / h2
        west_u[-1] = 2.0 / h2

        ab = np.zeros((5, 2 * n))
        ab[2, 0::2] = 1.0 - a * diag_u
        ab[2, 1::2] = 1.0 - a * diag_v
        # +1 band: u-row coupling to v at the same point
        ab[1, 1::2] = -a * (-uv2)
        # -1 band: v-row coupling to u at the same point
        cross = vv - (self.decay if self.decay_variant == AS_PRINTED else 0.0)
        ab[3, 0::2] = -a * cross
        # +2 band: same-component east neighbors
        ab[0, 2::2] = -a * east_u
        ab[0, 3::2] = -a * self.diffusion * east_u
        # -2 band: same-component west neighbors
        ab[4, 0:-2:2] = -a * west_u
        ab[4, 1:-2:2] = -a * self.diffusion * west_u
        return ab

    def implicit_solve(self, a, b, t, guess=None):
        if a == 0.0:
            return b.copy()
        n = self.grid.num_points
        w = b.copy() if guess is None else guess.copy()
        res0 = None
        for _ in range(self.newton_maxiter):
            g = w - a * self.rhs_impl(w, t) - b
            gnorm = float(np.max(np.abs(g)))
            if res0 is None:
                res0 = gnorm
            if gnorm <= self.newton_atol or gnorm <= self.newton_rtol * res0:
                return w
            ab = self._newton_banded(a, w)
            rhs = np.empty(2 * n)
            rhs[0::2] = g[:n]
            rhs[1::2] = g[n:]
            delta = solve_banded((2, 2), ab, rhs)
            w[:n] -= delta[0::2]
            w[n:] -= delta[1::2]
        raise SolverError(
            f"Gray-Scott Newton did not converge in {self.newton_maxiter} iterations"
        )

    def initial_condition(self, t0=0.0):
        bump = np.sin(np.pi * self._x / self.grid.length) ** 100
        return np.concatenate([1.0 - 0.5 * bump, 0.25 * bump])


def heat1d(nu: float, num_points: int) -> HeatForced1D:
    return HeatForced1D(nu=nu, num_points=num_points)


def advection1d(c: float, num_points: int, order: int = 2) -> Advection1D:
    return Advection1D(c=c, num_points=num_points, order=order)


def grayscott1d(feed: float, decay: float, diffusion: float, length: float,
                num_points: int, decay_variant: str = AS_PRINTED) -> GrayScott1D:
    return GrayScott1D(feed=feed, decay=decay, diffusion=diffusion, length=length,
                       num_points=num_points, decay_variant=decay_variant)


def dahlquist(lam: float, u0: float = 1.0) -> Dahlquist:
    return Dahlquist(lam=lam, u0=u0)
