"""Finite-difference grid, Kronecker-structured operators and discrete norms.

Unknowns live on the interior nodes with x running fastest, so the vector
index of node (i, j), 1 <= i <= Mx-1, 1 <= j <= My-1, is
(j-1)(Mx-1) + (i-1). Homogeneous Dirichlet values are eliminated.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import AuxFields, CoefficientSet
from .errors import NonPositiveWeight, PreconditionError, SolverBreakdown

log = logging.getLogger(__name__)


def forward_difference(M: int, h: float) -> sp.csr_matrix:
    """The M x (M-1) matrix S: row r is (z_r - z_{r+1})/h with z_0 = z_M = 0."""
    rows = np.concatenate([np.arange(M - 1), np.arange(1, M)])
    cols = np.concatenate([np.arange(M - 1), np.arange(M - 1)])
    vals = np.concatenate([-np.ones(M - 1), np.ones(M - 1)]) / h
    return sp.csr_matrix((vals, (rows, cols)), shape=(M, M - 1))


def half_central(M: int, h: float) -> sp.csr_matrix:
    """The (M-1) x (M-1) matrix S-hat = (1/2h) [-1 on the diagonal, 1 above]."""
    n = M - 1
    return sp.diags([-np.ones(n), np.ones(n - 1)], [0, 1], shape=(n, n), format="csr") / (2 * h)


@dataclass(frozen=True)
class Grid2D:
    Mx: int
    My: int
    xl: float = 0.0
    xr: float = 1.0
    yl: float = 0.0
    yr: float = 1.0

    def __post_init__(self):
        if self.Mx < 2 or self.My < 2:
            raise PreconditionError("Mx and My must be at least 2")
        if not (self.xr > self.xl and self.yr > self.yl):
            raise PreconditionError("empty domain")

    @property
    def hx(self) -> float:
        return (self.xr - self.xl) / self.Mx

    @property
    def hy(self) -> float:
        return (self.yr - self.yl) / self.My

    @property
    def shape(self):
        """(My-1, Mx-1): reshape target for interior vectors."""
        return (self.My - 1, self.Mx - 1)

    @property
    def m(self) -> int:
        return (self.Mx - 1) * (self.My - 1)

    @property
    def domain(self):
        return (self.xl, self.xr, self.yl, self.yr)

    def interior(self):
        """Flattened interior coordinates (x, y)."""
        x = self.xl + self.hx * np.arange(1, self.Mx)
        y = self.yl + self.hy * np.arange(1, self.My)
        X, Y = np.meshgrid(x, y)  # rows follow y, columns x -> x fastest
        return X.ravel(), Y.ravel()

    def x_faces(self):
        """(x_{i+1/2}, y_j), i = 0..Mx-1, j = 1..My-1."""
        x = self.xl + self.hx * (np.arange(self.Mx) + 0.5)
        y = self.yl + self.hy * np.arange(1, self.My)
        X, Y = np.meshgrid(x, y)
        return X.ravel(), Y.ravel()

    def y_faces(self):
        """(x_i, y_{j+1/2}), i = 1..Mx-1, j = 0..My-1."""
        x = self.xl + self.hx * np.arange(1, self.Mx)
        y = self.yl + self.hy * (np.arange(self.My) + 0.5)
        X, Y = np.meshgrid(x, y)
        return X.ravel(), Y.ravel()

    def sample(self, f, *args):
        X, Y = self.interior()
        return np.broadcast_to(np.asarray(f(X, Y, *args), dtype=float), X.shape).copy()


class DifferenceOperators:
    """Kronecker difference matrices of a grid (time independent)."""

    def __init__(self, grid: Grid2D):
        self.grid = grid
        Ix = sp.identity(grid.Mx - 1, format="csr")
        Iy = sp.identity(grid.My - 1, format="csr")
        Sx = forward_difference(grid.Mx, grid.hx)
        Sy = forward_difference(grid.My, grid.hy)
        Shx = half_central(grid.Mx, grid.hx)
        Shy = half_central(grid.My, grid.hy)
        self.Sx, self.Sy, self.Shx, self.Shy = Sx, Sy, Shx, Shy
        self.Dx = sp.kron(Iy, Sx, format="csr")
        self.Dy = sp.kron(Sy, Ix, format="csr")
        self.Cx = sp.kron(Iy, Shx - Shx.T, format="csr")
        self.Cy = sp.kron(Shy - Shy.T, Ix, format="csr")
        self._stencil = self._stencil_pattern()

    def _stencil_pattern(self):
        """COO index arrays for the direct five-point assembly of A."""
        g = self.grid
        nx, ny = g.Mx - 1, g.My - 1
        idx = np.arange(g.m).reshape(ny, nx)
        # x-face (i+1/2, j) joins nodes i and i+1 (0-based face column i)
        fx = np.arange(g.Mx * ny).reshape(ny, g.Mx)
        fy = np.arange(g.My * nx).reshape(g.My, nx)
        return idx, fx, fy

    def stiffness_factored(self, P1, P2):
        return (self.Dx.T @ sp.diags(P1) @ self.Dx + self.Dy.T @ sp.diags(P2) @ self.Dy).tocsr()

    def stiffness_direct(self, P1, P2):
        """Five-point assembly of Dx^T P1 Dx + Dy^T P2 Dy from face weights."""
        g = self.grid
        idx, fx, fy = self._stencil
        ny, nx = idx.shape
        wx = P1[fx] / g.hx ** 2  # (ny, Mx)
        wy = P2[fy] / g.hy ** 2  # (My, nx)
        diag = wx[:, :-1] + wx[:, 1:] + wy[:-1, :] + wy[1:, :]
        rows = [idx.ravel()]
        cols = [idx.ravel()]
        vals = [diag.ravel()]
        # x neighbours
        rows += [idx[:, :-1].ravel(), idx[:, 1:].ravel()]
        cols += [idx[:, 1:].ravel(), idx[:, :-1].ravel()]
        off = -wx[:, 1:-1].ravel()
        vals += [off, off]
        # y neighbours
        rows += [idx[:-1, :].ravel(), idx[1:, :].ravel()]
        cols += [idx[1:, :].ravel(), idx[:-1, :].ravel()]
        off = -wy[1:-1, :].ravel()
        vals += [off, off]
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(g.m, g.m))


_OPS_CACHE: dict = {}


def difference_operators(grid: Grid2D) -> DifferenceOperators:
    ops = _OPS_CACHE.get(grid)
    if ops is None:
        if len(_OPS_CACHE) > 16:
            _OPS_CACHE.clear()
        ops = _OPS_CACHE[grid] = DifferenceOperators(grid)
    return ops


@dataclass
class OperatorSet:
    grid: Grid2D
    t_offset: float
    Pdiag: np.ndarray
    P1_face: np.ndarray
    P2_face: np.ndarray
    P3diag: np.ndarray
    P4diag: np.ndarray
    Cdiag: np.ndarray
    A_stiff: sp.csr_matrix
    B_adv: sp.csr_matrix
    C_reac: sp.dia_matrix = field(repr=False, default=None)

    def __post_init__(self):
        if self.C_reac is None:
            self.C_reac = sp.diags(self.Cdiag)

    @property
    def M(self) -> sp.csr_matrix:
        """-P^{-1} A + B + C."""
        return (-sp.diags(1.0 / self.Pdiag) @ self.A_stiff + self.B_adv + self.C_reac).tocsr()

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        return -(self.A_stiff @ u) / self.Pdiag + self.B_adv @ u + self.Cdiag * u


def assemble_operators(grid: Grid2D, aux: AuxFields, coeffs: CoefficientSet | None,
                       t_offset: float, factored: bool = False) -> OperatorSet:
    """Matrices P, A, B, C of the discrete operator at time ``t_offset``."""
    coeffs = aux.coeffs if coeffs is None else coeffs
    ops = difference_operators(grid)
    X, Y = grid.interior()
    t = float(t_offset)
    P = np.broadcast_to(aux.p(X, Y, t), X.shape).astype(float)
    fxX, fxY = grid.x_faces()
    fyX, fyY = grid.y_faces()
    P1 = np.broadcast_to(aux.p1(fxX, fxY, t), fxX.shape).astype(float)
    P2 = np.broadcast_to(aux.p2(fyX, fyY, t), fyX.shape).astype(float)
    for name, arr in (("p", P), ("p1", P1), ("p2", P2)):
        if not np.all(arr > 0):
            raise NonPositiveWeight(f"{name} has non-positive samples at t={t}")
    P3 = np.broadcast_to(aux.p3(X, Y, t), X.shape).astype(float)
    P4 = np.broadcast_to(aux.p4(X, Y, t), X.shape).astype(float)
    Cd = np.broadcast_to(coeffs.b3(X, Y, t), X.shape).astype(float)
    A = ops.stiffness_factored(P1, P2) if factored else ops.stiffness_direct(P1, P2)
    B = (sp.diags(P3) @ ops.Cx + sp.diags(P4) @ ops.Cy).tocsr()
    return OperatorSet(grid, t, P, P1, P2, P3, P4, Cd, A, B)


def apply_discrete_elliptic(ops: OperatorSet, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (ops.grid.m,):
        raise PreconditionError(f"expected vector of length {ops.grid.m}, got {u.shape}")
    return ops.apply(u)


# --------------------------------------------------------------------------
# discrete norms (grid functions vanishing on the boundary)


def inner(grid: Grid2D, u, v) -> float:
    return float(grid.hx * grid.hy * np.dot(u, v))


def l2_norm(grid: Grid2D, u) -> float:
    return float(np.sqrt(inner(grid, u, u)))


def h1_semi(grid: Grid2D, u) -> float:
    """sqrt(||delta_x u||^2 + ||delta_y u||^2) including boundary-adjacent faces."""
    ops = difference_operators(grid)
    ux = ops.Dx @ u
    uy = ops.Dy @ u
    return float(np.sqrt(grid.hx * grid.hy * (ux @ ux + uy @ uy)))


def h1_norm(grid: Grid2D, u) -> float:
    return float(np.hypot(l2_norm(grid, u), h1_semi(grid, u)))


def export_matrix_market(path, matrix):
    """Write a sparse matrix in coordinate MatrixMarket text form."""
    from scipy.io import mmwrite
    mmwrite(str(path), sp.coo_matrix(matrix))


# --------------------------------------------------------------------------
# linear solves


@dataclass
class SolverOptions:
    mode: str = "auto"          # direct | iterative | auto
    rel_tol: float = 1e-12
    max_iter: int = 500
    direct_limit: int = 250_000  # auto switches to iterative above this size
    restart: int = 60
    preconditioner: str = "amg"  # amg | ilu (iterative mode)

    def resolve(self, m: int) -> str:
        if self.mode == "auto":
            return "direct" if m <= self.direct_limit else "iterative"
        if self.mode not in ("direct", "iterative"):
            raise PreconditionError(f"unknown solver mode {self.mode!r}")
        return self.mode


@dataclass
class SolveInfo:
    mode: str
    iterations: int = 0
    residual: float = 0.0
    seconds: float = 0.0


def _amg_preconditioner(sym):
    import pyamg
    ml = pyamg.smoothed_aggregation_solver(sym.tocsr(), symmetry="symmetric", max_coarse=500)
    return ml.aspreconditioner(cycle="V")


def _ilu_preconditioner(matrix):
    ilu = spla.spilu(matrix.tocsc(), drop_tol=1e-5, fill_factor=20)
    return spla.LinearOperator(matrix.shape, ilu.solve)


def solve_sparse(matrix, rhs, opts: SolverOptions | None = None, sym_part=None,
                 x0=None, info: SolveInfo | None = None):
    """Solve ``matrix @ x = rhs``.

    Direct mode factorises with SuperLU. Iterative mode runs restarted GMRES
    preconditioned either with smoothed-aggregation AMG built on ``sym_part``
    (a symmetric positive definite matrix close to ``matrix``; defaults to
    the symmetric part of ``matrix``) or with an incomplete LU factorisation.
    """
    opts = opts or SolverOptions()
    rhs = np.asarray(rhs, dtype=float)
    m = rhs.shape[0]
    mode = opts.resolve(m)
    start = time.perf_counter()
    bnorm = float(np.linalg.norm(rhs))
    if mode == "direct":
        try:
            lu = spla.splu(sp.csc_matrix(matrix), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SolverBreakdown(f"direct factorisation failed: {exc}", iterations=0) from exc
        x = lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverBreakdown("direct solve produced non-finite values", iterations=0)
        its = 0
    else:
        matrix = sp.csr_matrix(matrix)
        if opts.preconditioner == "ilu":
            M = _ilu_preconditioner(matrix)
        else:
            sym = sym_part if sym_part is not None else 0.5 * (matrix + matrix.T)
            M = _amg_preconditioner(sym)
        count = [0]

        def cb(_):
            count[0] += 1

        x, flag = spla.gmres(matrix, rhs, x0=x0, rtol=opts.rel_tol, atol=0.0,
                             restart=opts.restart, maxiter=opts.max_iter, M=M,
                             callback=cb, callback_type="pr_norm")
        its = count[0]
        res = float(np.linalg.norm(matrix @ x - rhs))
        if flag != 0 or not np.isfinite(res) or res > 10 * opts.rel_tol * max(bnorm, 1e-300):
            raise SolverBreakdown("GMRES did not converge", iterations=its,
                                  residual=res / max(bnorm, 1e-300))
    elapsed = time.perf_counter() - start
    if info is not None:
        info.mode = mode
        info.iterations = its
        info.seconds = elapsed
        info.residual = float(np.linalg.norm(matrix @ x - rhs)) / max(bnorm, 1e-300)
    return x

