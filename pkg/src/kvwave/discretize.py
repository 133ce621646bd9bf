"""Interface-aligned P1 finite elements for the first-order evolution system.

Continuous piecewise-linear elements on a grid whose nodes contain every
coefficient breakpoint, so the cell-wise integrals of the piecewise-constant
coefficients are exact.  The semi-discrete system is

    M u'' + a K u + K_b u' + M_d u' + M_c y' = 0,
    M y'' +   K y + M_d y'           - M_c u' = 0,

with M the (consistent, not lumped) mass form, K the unit stiffness form,
K_b the b-weighted stiffness, M_c the c-weighted mass and M_d the
viscous-indicator mass (zero except for the auxiliary preset).  The energy
Gram form of the 4-block state U = (u, v, y, z) is

    W = blockdiag(a K, M, K, M),      E(U) = 1/2 U^T W U,

the discrete version of E(t) = 1/2 int (|u_t|^2 + a|u_x|^2 + |y_t|^2 + |y_x|^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConfigError, GridError
from .model import ProblemConfig, validate


@dataclass(frozen=True)
class Grid:
    """Nodes 0 = x_0 < ... < x_N = L with breakpoints snapped onto nodes."""

    nodes: np.ndarray
    interface_node_indices: tuple[int, ...]

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def cell_widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]


def build_grid(config: ProblemConfig, n_cells: int) -> Grid:
    """Uniform target spacing L/n_cells, nearest node moved onto each breakpoint.

    Moving (rather than inserting) nodes keeps the grid near-uniform; the
    result must keep max/min cell width <= 2, else the grid cannot resolve
    the interfaces and a GridError is raised.
    """
    if n_cells < 8:
        raise GridError(f"n_cells must be >= 8, got {n_cells}")
    L = config.L
    nodes = np.linspace(0.0, L, n_cells + 1)
    h = L / n_cells
    taken: dict[int, float] = {}
    for bp in config.interior_breakpoints():
        idx = int(round(bp / h))
        idx = min(max(idx, 1), n_cells - 1)
        if idx in taken and taken[idx] != bp:
            raise GridError("grid cannot resolve interfaces: breakpoints "
                            f"{taken[idx]} and {bp} snap to the same node")
        taken[idx] = bp
        nodes[idx] = bp
    # a snapped node may sit up to h/2 off the lattice (width ratio up to 3);
    # relaxing its free neighbors onto local midpoints restores the bound
    for _ in range(2):
        for idx in sorted(taken):
            for j in (idx - 1, idx + 1):
                if 1 <= j <= n_cells - 1 and j not in taken:
                    nodes[j] = 0.5 * (nodes[j - 1] + nodes[j + 1])
    widths = np.diff(nodes)
    if np.any(widths <= 0):
        raise GridError("grid cannot resolve interfaces: snapping collapsed a cell")
    if widths.max() / widths.min() > 2.0 + 1e-9:
        raise GridError("grid cannot resolve interfaces: cell width ratio "
                        f"{widths.max() / widths.min():.3f} exceeds 2")
    return Grid(nodes, tuple(sorted(taken)))


@dataclass
class State:
    """Four equal-length blocks (u, v, y, z): displacements and velocities."""

    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        n = len(self.u)
        if not (len(self.v) == len(self.y) == len(self.z) == n):
            raise ValueError("state blocks must have equal length")

    @classmethod
    def zeros(cls, n: int, dtype=float) -> "State":
        return cls(*(np.zeros(n, dtype=dtype) for _ in range(4)))

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "State":
        n = len(vec) // 4
        return cls(vec[:n].copy(), vec[n:2 * n].copy(),
                   vec[2 * n:3 * n].copy(), vec[3 * n:].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v, self.y, self.z])

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy(), self.y.copy(), self.z.copy())

    def __len__(self) -> int:
        return len(self.u)


def _sym_tridiag(diag: np.ndarray, off: np.ndarray) -> sp.csr_matrix:
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


def _stiffness(widths: np.ndarray, cellval: np.ndarray) -> sp.csr_matrix:
    """Interior-node stiffness form of -(w(x) phi_x)_x with cell-wise constant w."""
    w = cellval / widths
    return _sym_tridiag(w[:-1] + w[1:], -w[1:-1])


def _mass(widths: np.ndarray, cellval: np.ndarray) -> sp.csr_matrix:
    """Interior-node mass form of w(x) phi with cell-wise constant w (exact)."""
    w = cellval * widths
    return _sym_tridiag((w[:-1] + w[1:]) / 3.0, w[1:-1] / 6.0)


class SemiDiscreteSystem:
    """Assembled forms of one problem instance.  Treat as immutable.

    Attributes M, K, K_b, M_d, M_c are symmetric tridiagonal CSR matrices on
    the interior nodes (Dirichlet rows/columns eliminated); `a` is the wave
    speed coefficient of the u-equation.
    """

    def __init__(self, config: ProblemConfig, grid: Grid,
                 M, K, K_b, M_d, M_c):
        self.config = config
        self.grid = grid
        self.a = config.a
        self.M = M
        self.K = K
        self.K_b = K_b
        self.M_d = M_d
        self.M_c = M_c
        self.n = M.shape[0]
        # banded Cholesky of the mass form, shared by all operator applications
        ab = np.zeros((2, self.n))
        ab[0] = M.diagonal()
        ab[1, :-1] = M.diagonal(1)
        self._m_chol = sla.cholesky_banded(ab, lower=True)
        self._caches: dict = {}

    def mass_solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.cho_solve_banded((self._m_chol, True), rhs)

    def w_blocks(self):
        """The four diagonal blocks of the energy Gram form W."""
        return (self.a * self.K, self.M, self.K, self.M)

    @property
    def W(self):
        """Energy Gram form blockdiag(a K, M, K, M) as one sparse matrix."""
        return sp.block_diag(self.w_blocks(), format="csr")


def assemble(config: ProblemConfig, grid: Grid) -> SemiDiscreteSystem:
    """Assemble mass/stiffness/damping/coupling forms on an aligned grid."""
    violations = validate(config)
    if violations:
        raise ConfigError("invalid config: " + "; ".join(violations))
    for bp in config.interior_breakpoints():
        if not np.any(np.isclose(grid.nodes, bp, rtol=0, atol=1e-12)):
            raise GridError(f"grid/config mismatch: breakpoint {bp} is not a node")

    widths = grid.cell_widths
    mids = 0.5 * (grid.nodes[:-1] + grid.nodes[1:])
    bprof = config.b_profile()
    cprof = config.c_profile()
    dprof = config.viscous_profile(0)
    bv = np.array([bprof(x) for x in mids])
    cv = np.array([cprof(x) for x in mids])
    dv = np.array([dprof(x) for x in mids])
    one = np.ones_like(widths)

    return SemiDiscreteSystem(
        config, grid,
        M=_mass(widths, one),
        K=_stiffness(widths, one),
        K_b=_stiffness(widths, bv),
        M_d=_mass(widths, dv),
        M_c=_mass(widths, cv),
    )


def apply_operator(sys: SemiDiscreteSystem, U: State) -> State:
    """Apply the discrete evolution operator:

    (u, v, y, z) -> (v, -M^{-1}(a K u + K_b v + M_d v + M_c z),
                     z, -M^{-1}(K y + M_d z - M_c v)).
    """
    if len(U) != sys.n:
        raise ValueError(f"dimension mismatch: state has {len(U)} nodes, "
                         f"system has {sys.n}")
    f2 = -(sys.a * (sys.K @ U.u) + sys.K_b @ U.v + sys.M_d @ U.v + sys.M_c @ U.z)
    f4 = -(sys.K @ U.y + sys.M_d @ U.z - sys.M_c @ U.v)
    return State(U.v.copy(), sys.mass_solve(f2), U.z.copy(), sys.mass_solve(f4))


def energy(sys: SemiDiscreteSystem, U: State) -> float:
    """Discrete energy E(U) = 1/2 U^H W U (real and >= 0)."""
    if len(U) != sys.n:
        raise ValueError("dimension mismatch")
    e = (sys.a * np.vdot(U.u, sys.K @ U.u) + np.vdot(U.v, sys.M @ U.v)
         + np.vdot(U.y, sys.K @ U.y) + np.vdot(U.z, sys.M @ U.z))
    return 0.5 * float(e.real)


def w_norm(sys: SemiDiscreteSystem, U: State) -> float:
    return float(np.sqrt(max(2.0 * energy(sys, U), 0.0)))


def w_inner(sys: SemiDiscreteSystem, X: State, U: State) -> complex:
    """Energy inner product <X, U>_W = U^H W X (linear in X)."""
    return complex(sys.a * np.vdot(U.u, sys.K @ X.u) + np.vdot(U.v, sys.M @ X.v)
                   + np.vdot(U.y, sys.K @ X.y) + np.vdot(U.z, sys.M @ X.z))


def dissipation_form(sys: SemiDiscreteSystem, U: State) -> float:
    """D(U) = v^H K_b v + v^H M_d v + z^H M_d z, the exact decay rate of E."""
    d = (np.vdot(U.v, sys.K_b @ U.v) + np.vdot(U.v, sys.M_d @ U.v)
         + np.vdot(U.z, sys.M_d @ U.z))
    return float(d.real)


def random_state(sys: SemiDiscreteSystem, rng: np.random.Generator) -> State:
    return State(*(rng.standard_normal(sys.n) for _ in range(4)))


def export_triplets(A, path: str) -> None:
    """Plain-text (row, col, value) dump with 17 significant digits."""
    coo = sp.coo_matrix(A)
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, val in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {val:.17g}\n")
