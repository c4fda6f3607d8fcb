"""Collocation nodes, quadrature matrices, and sweep preconditioners.

Everything is built once on the unit interval [0, 1]; the step size enters
only when a sweep is performed. Supported rules both include the right
endpoint, so the value at the last node is the value at the end of the step.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .errors import ConfigurationError, NumericalError

GAUSS_LOBATTO = "gauss-lobatto"
GAUSS_RADAU_RIGHT = "gauss-radau-right"

IMPLICIT_EULER = "implicit-euler"
LU = "lu"
EXPLICIT_EULER = "explicit-euler"


@dataclass(frozen=True)
class CollocationTable:
    """Quadrature nodes plus the integration matrices they induce.

    Attributes
    ----------
    kind : str
        Node family, ``gauss-lobatto`` or ``gauss-radau-right``.
    num_nodes : int
        Number of nodes M.
    nodes : ndarray, shape (M,)
        Strictly increasing nodes on [0, 1].
    q_matrix : ndarray, shape (M, M)
        Row m integrates the Lagrange basis from 0 to node m.
    s_matrix : ndarray, shape (M, M)
        Node-to-node increments of ``q_matrix`` (first row equals Q's).
    weights : ndarray, shape (M,)
        Full-interval quadrature weights (last row of Q).
    """

    kind: str
    num_nodes: int
    nodes: np.ndarray
    q_matrix: np.ndarray
    s_matrix: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Preconditioner:
    """Lower-triangular approximation of the quadrature matrix used by sweeps."""

    kind: str
    qd: np.ndarray


def _legendre_coeffs(degree: int) -> np.ndarray:
    c = np.zeros(degree + 1)
    c[degree] = 1.0
    return c


def _newton_refine(x: np.ndarray, coeffs: np.ndarray, steps: int = 5) -> np.ndarray:
    """Polish eigenvalue root estimates of a Legendre-series polynomial."""
    dcoeffs = legendre.legder(coeffs)
    for _ in range(steps):
        f = legendre.legval(x, coeffs)
        df = legendre.legval(x, dcoeffs)
        x = x - f / df
    return x


def generate_nodes(kind: str, num_nodes: int) -> np.ndarray:
    """Return collocation nodes of the requested family on [0, 1].

    Roots are obtained from the companion-matrix eigenvalues of the defining
    Legendre-series polynomial and refined by Newton iteration; accuracy is
    checked downstream through quadrature exactness.
    """
    if kind == GAUSS_LOBATTO:
        if num_nodes < 2:
            raise ConfigurationError("gauss-lobatto needs at least 2 nodes")
        if num_nodes == 2:
            interior = np.array([])
        else:
            # interior nodes: roots of P'_{M-1}
            dp = legendre.legder(_legendre_coeffs(num_nodes - 1))
            interior = _newton_refine(legendre.legroots(dp), dp)
        x = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    elif kind == GAUSS_RADAU_RIGHT:
        if num_nodes < 1:
            raise ConfigurationError("gauss-radau-right needs at least 1 node")
        if num_nodes == 1:
            x = np.array([1.0])
        else:
            # all nodes (incl. +1): roots of P_M - P_{M-1}
            poly = _legendre_coeffs(num_nodes) - np.pad(
                _legendre_coeffs(num_nodes - 1), (0, 1)
            )
            x = np.sort(_newton_refine(legendre.legroots(poly), poly))
            x[-1] = 1.0
    else:
        raise ConfigurationError(f"unsupported node kind: {kind!r}")

    nodes = 0.5 * (x + 1.0)
    if kind == GAUSS_LOBATTO:
        nodes[0] = 0.0
        nodes[-1] = 1.0
        # enforce the symmetry the rule has analytically
        nodes = 0.5 * (nodes + (1.0 - nodes[::-1]))
    return nodes


def build_integration_matrices(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build (Q, S) for a node vector: q_mj = integral of Lagrange basis j up to node m."""
    nodes = np.asarray(nodes, dtype=float)
    m = nodes.size
    if np.unique(nodes).size != m:
        raise ConfigurationError("duplicate collocation nodes")
    q = np.zeros((m, m))
    for j in range(m):
        others = np.delete(nodes, j)
        basis = np.polynomial.Polynomial.fromroots(others) / np.prod(nodes[j] - others)
        antideriv = basis.integ()
        q[:, j] = antideriv(nodes) - antideriv(0.0)
    s = np.zeros_like(q)
    s[0] = q[0]
    s[1:] = q[1:] - q[:-1]
    return q, s


def make_table(kind: str, num_nodes: int) -> CollocationTable:
    """Generate nodes and matrices in one step."""
    nodes = generate_nodes(kind, num_nodes)
    q, s = build_integration_matrices(nodes)
    return CollocationTable(
        kind=kind,
        num_nodes=num_nodes,
        nodes=nodes,
        q_matrix=q,
        s_matrix=s,
        weights=q[-1].copy(),
    )


def _lu_nopivot_upper(a: np.ndarray) -> np.ndarray:
    """U factor of the Doolittle factorization A = L U without pivoting.

    A zero pivot is tolerated only when the entire column below it is zero
    (happens for Gauss-Lobatto, whose first Q row vanishes); the multipliers
    are then zero and elimination continues.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(np.max(np.abs(a)), 1.0)
    for k in range(n):
        pivot = a[k, k]
        if abs(pivot) <= 1e-14 * scale:
            if np.max(np.abs(a[k + 1:, k]), initial=0.0) > 1e-12 * scale:
                raise NumericalError(
                    f"singular leading minor at position {k} in LU factorization"
                )
            a[k + 1:, k] = 0.0
            continue
        mult = a[k + 1:, k] / pivot
        a[k + 1:, k] = mult
        a[k + 1:, k + 1:] -= np.outer(mult, a[k, k + 1:])
    return np.triu(a)


def build_preconditioner(kind: str, table: CollocationTable) -> Preconditioner:
    """Build the QΔ matrix for one sweep family.

    implicit-euler: lower triangular with node spacings down each column.
    lu: transpose of the U factor of Q^T = L U (no pivoting).
    explicit-euler: spacings shifted one column left, strictly lower triangular.
    """
    nodes = table.nodes
    m = table.num_nodes
    spacing = np.diff(np.concatenate([[0.0], nodes]))
    if kind == IMPLICIT_EULER:
        qd = np.tril(np.tile(spacing, (m, 1)))
    elif kind == EXPLICIT_EULER:
        qd = np.zeros((m, m))
        for row in range(1, m):
            qd[row, : row] = spacing[1 : row + 1]
    elif kind == LU:
        qd = _lu_nopivot_upper(table.q_matrix.T).T
    else:
        raise ConfigurationError(f"unsupported preconditioner kind: {kind!r}")
    return Preconditioner(kind=kind, qd=qd)
