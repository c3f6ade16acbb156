"""Time marching for the sub-diffusion and diffusion-wave schemes.

Sub-diffusion (0 < alpha < 1, beta = alpha): at every step

    (D_tau^beta u)^{n-theta} = M^{n-theta} u^{n-theta} + f^{n-theta},
    M = -P^{-1} A + B + C,  u^{n-theta} = (1-theta) u^n + theta u^{n-1}.

Diffusion-wave (1 < alpha < 2, beta = alpha/2) via the symmetric order
reduction with u~ = u - t psi and v^0 = 0:

    (D_tau^beta v)^{n-theta} = M u~^{n-theta} + f^{n-theta} + Psi^{n-theta},
    v^{n-theta} = (D_tau^beta u~)^{n-theta}.

v^n is eliminated from the second relation so each step needs a single
sparse solve for u~^n.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientSet, build_aux
from .errors import PreconditionError, SolverBreakdown
from .kernels import DirectCaputo, FastCaputo, KernelTable, soe_build
from .spatial import (Grid2D, SolveInfo, SolverOptions, assemble_operators,
                      difference_operators, solve_sparse)
from .timegrid import TimeMesh

log = logging.getLogger(__name__)


@dataclass
class ProblemSpec:
    kind: str                       # "subdiffusion" | "diffusionwave"
    alpha: float
    coeffs: CoefficientSet
    source: Callable                # f(x, y, t)
    phi: Callable                   # u(x, y, 0)
    psi: Optional[Callable] = None  # u_t(x, y, 0), diffusion-wave only
    domain: tuple = (0.0, 1.0, 0.0, 1.0)
    T: float = 1.0
    exact: Optional[Callable] = None
    # analytic A(t psi) at (x, y, t); when None the discrete operator is applied
    a_tpsi: Optional[Callable] = None
    sigma: dict = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        if self.kind == "subdiffusion":
            if not 0 < self.alpha < 1:
                raise PreconditionError(f"sub-diffusion needs 0 < alpha < 1, got {self.alpha}")
        elif self.kind == "diffusionwave":
            if not 1 < self.alpha < 2:
                raise PreconditionError(f"diffusion-wave needs 1 < alpha < 2, got {self.alpha}")
            if self.psi is None:
                raise PreconditionError("diffusion-wave problems need psi = u_t(x, 0)")
        else:
            raise PreconditionError(f"unknown problem kind {self.kind!r}")

    @property
    def beta(self) -> float:
        return self.alpha if self.kind == "subdiffusion" else self.alpha / 2.0

    @property
    def theta(self) -> float:
        return self.beta / 2.0

    def grid(self, Mx: int, My: int | None = None) -> Grid2D:
        return Grid2D(Mx, Mx if My is None else My, *self.domain)


@dataclass
class StepStats:
    n: int
    t: float
    assemble_seconds: float
    solve: SolveInfo


@dataclass
class SolutionHistory:
    mesh: TimeMesh
    grid: Grid2D
    kind: str
    u_levels: list = field(default_factory=list)
    v_levels: list = field(default_factory=list)
    errors_l2: list = field(default_factory=list)
    errors_semi: list = field(default_factory=list)
    stats: list = field(default_factory=list)
    psi: Optional[np.ndarray] = None
    kernel_mode: str = "direct"
    soe_terms: int = 0
    wall_seconds: float = 0.0

    @property
    def errors_h1(self) -> np.ndarray:
        return np.hypot(self.errors_l2, self.errors_semi)

    def E1(self, norm: str = "h1") -> float:
        """max over levels 1..N of the discrete H1 (or semi-) norm error."""
        if not self.errors_semi:
            raise PreconditionError("no exact solution was attached to the run")
        errs = self.errors_h1 if norm == "h1" else np.asarray(self.errors_semi)
        return float(np.max(errs))

    def u_tilde(self, n: int) -> np.ndarray:
        """u~^n = u^n - t_n psi (diffusion-wave)."""
        return self.u_levels[n] - self.mesh.nodes[n] * self.psi

    @property
    def final(self) -> np.ndarray:
        return self.u_levels[-1]

    def export_snapshot(self, path, n: int, fmt: str = "text"):
        """Write level n as a row-major interior grid with a one-line header."""
        u = np.asarray(self.u_levels[n]).reshape(self.grid.shape)
        header = f"Mx={self.grid.Mx} My={self.grid.My} n={n} t_n={self.mesh.nodes[n]!r}"
        if fmt == "text":
            np.savetxt(path, u, header=header)
        elif fmt == "binary":
            with open(path, "wb") as fh:
                fh.write((header + "\n").encode())
                fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())
        else:
            raise PreconditionError(f"unknown snapshot format {fmt!r}")


def _make_evaluator(kernel_mode, mesh, beta, m, table, soe_eps, soe):
    if kernel_mode == "direct":
        return DirectCaputo(table, m)
    if kernel_mode == "soe":
        return FastCaputo(mesh, beta, soe, m)
    raise PreconditionError(f"unknown kernel mode {kernel_mode!r}")


def soe_for_mesh(mesh: TimeMesh, beta: float, epsilon: float = 1e-12):
    """SOE valid on [min tau_k, T]; covers every lag used by the history part."""
    delta_t = float(mesh.steps.min())
    return soe_build(beta, epsilon, delta_t, mesh.horizon)


def _check_mesh(problem: ProblemSpec, mesh: TimeMesh):
    if abs(mesh.theta - problem.theta) > 1e-14:
        raise PreconditionError(f"mesh theta {mesh.theta} differs from beta/2 = {problem.theta}")
    if abs(mesh.horizon - problem.T) > 1e-12 * problem.T:
        raise PreconditionError("mesh horizon differs from problem T")


class _ErrorTracker:
    def __init__(self, problem, grid, mesh, history):
        self.exact = problem.exact
        self.grid = grid
        self.mesh = mesh
        self.history = history
        if self.exact is not None:
            self.X, self.Y = grid.interior()
            self.ops = difference_operators(grid)

    def record(self, n, u):
        if self.exact is None:
            return
        e = self.exact(self.X, self.Y, self.mesh.nodes[n]) - u
        g = self.grid
        w = g.hx * g.hy
        ex = self.ops.Dx @ e
        ey = self.ops.Dy @ e
        self.history.errors_l2.append(float(np.sqrt(w * (e @ e))))
        self.history.errors_semi.append(float(np.sqrt(w * (ex @ ex + ey @ ey))))


def _solve_step(opts, K, rhs, sym, n, x0):
    info = SolveInfo(mode="")
    try:
        x = solve_sparse(K, rhs, opts, sym_part=sym, x0=x0, info=info)
    except SolverBreakdown as exc:
        exc.step = n
        raise
    return x, info


def subdiffusion_solve(problem: ProblemSpec, mesh: TimeMesh, grid: Grid2D,
                       solver_opts: SolverOptions | None = None, kernel_mode: str = "direct",
                       store: str = "full", soe_eps: float = 1e-12) -> SolutionHistory:
    if problem.kind != "subdiffusion":
        raise PreconditionError("subdiffusion_solve needs a sub-diffusion problem")
    _check_mesh(problem, mesh)
    opts = solver_opts or SolverOptions()
    start = time.perf_counter()
    beta, theta = problem.beta, problem.theta
    aux = build_aux(problem.coeffs)
    X, Y = grid.interior()
    m = grid.m
    table = KernelTable(mesh, beta)
    soe = soe_for_mesh(mesh, beta, soe_eps) if kernel_mode == "soe" else None
    caputo = _make_evaluator(kernel_mode, mesh, beta, m, table, soe_eps, soe)
    hist = SolutionHistory(mesh, grid, problem.kind, kernel_mode=kernel_mode,
                           soe_terms=soe.n_terms if soe else 0)
    tracker = _ErrorTracker(problem, grid, mesh, hist)
    mode = opts.resolve(m)
    eye = sp.identity(m, format="csr")

    u_prev = np.broadcast_to(problem.phi(X, Y), X.shape).astype(float)
    hist.u_levels.append(u_prev.copy())
    for n in range(1, mesh.N + 1):
        t0 = time.perf_counter()
        t_off = mesh.t_offset(n)
        ops = assemble_operators(grid, aux, problem.coeffs, t_off)
        M = ops.M
        a0 = caputo.leading(n)
        H = caputo.history(n)
        f = np.broadcast_to(problem.source(X, Y, t_off), X.shape)
        rhs = a0 * u_prev - H + theta * (M @ u_prev) + f
        K = a0 * eye - (1.0 - theta) * M
        sym = None
        if mode == "iterative":
            # left-multiply by P so the dominant part is symmetric positive definite
            Pm = sp.diags(ops.Pdiag)
            K = (Pm @ K).tocsr()
            rhs = ops.Pdiag * rhs
            sym = (a0 * Pm + (1.0 - theta) * ops.A_stiff).tocsr()
        t1 = time.perf_counter()
        u, info = _solve_step(opts, K, rhs, sym, n, u_prev)
        caputo.push(u - u_prev)
        hist.stats.append(StepStats(n, mesh.nodes[n], t1 - t0, info))
        tracker.record(n, u)
        if store == "full":
            hist.u_levels.append(u)
        u_prev = u
    if store != "full":
        hist.u_levels.append(u_prev)
    hist.wall_seconds = time.perf_counter() - start
    return hist


def diffwave_solve(problem: ProblemSpec, mesh: TimeMesh, grid: Grid2D,
                   solver_opts: SolverOptions | None = None, kernel_mode: str = "direct",
                   store: str = "full", soe_eps: float = 1e-12) -> SolutionHistory:
    if problem.kind != "diffusionwave":
        raise PreconditionError("diffwave_solve needs a diffusion-wave problem")
    _check_mesh(problem, mesh)
    opts = solver_opts or SolverOptions()
    start = time.perf_counter()
    beta, theta = problem.beta, problem.theta
    aux = build_aux(problem.coeffs)
    X, Y = grid.interior()
    m = grid.m
    table = KernelTable(mesh, beta)
    soe = soe_for_mesh(mesh, beta, soe_eps) if kernel_mode == "soe" else None
    cap_u = _make_evaluator(kernel_mode, mesh, beta, m, table, soe_eps, soe)
    cap_v = _make_evaluator(kernel_mode, mesh, beta, m, table, soe_eps, soe)
    psi = np.broadcast_to(problem.psi(X, Y), X.shape).astype(float)
    hist = SolutionHistory(mesh, grid, problem.kind, psi=psi, kernel_mode=kernel_mode,
                           soe_terms=soe.n_terms if soe else 0)
    tracker = _ErrorTracker(problem, grid, mesh, hist)
    mode = opts.resolve(m)
    eye = sp.identity(m, format="csr")
    w = 1.0 - theta

    u_prev = np.broadcast_to(problem.phi(X, Y), X.shape).astype(float)
    ut_prev = u_prev.copy()  # u~^0 = u^0
    v_prev = np.zeros(m)
    hist.u_levels.append(u_prev.copy())
    hist.v_levels.append(v_prev.copy())
    for n in range(1, mesh.N + 1):
        t0 = time.perf_counter()
        t_off = mesh.t_offset(n)
        ops = assemble_operators(grid, aux, problem.coeffs, t_off)
        M = ops.M
        c = cap_u.leading(n)
        Hu = cap_u.history(n)
        Hv = cap_v.history(n)
        f = np.broadcast_to(problem.source(X, Y, t_off), X.shape)
        if problem.a_tpsi is not None:
            Psi = np.broadcast_to(problem.a_tpsi(X, Y, t_off), X.shape)
        else:
            Psi = t_off * (M @ psi)
        rhs = (c * c * ut_prev - c * (Hu - theta * v_prev)
               + w * (c * v_prev - Hv + theta * (M @ ut_prev) + f + Psi))
        K = c * c * eye - (w * w) * M
        sym = None
        if mode == "iterative":
            Pm = sp.diags(ops.Pdiag)
            K = (Pm @ K).tocsr()
            rhs = ops.Pdiag * rhs
            sym = (c * c * Pm + w * w * ops.A_stiff).tocsr()
        t1 = time.perf_counter()
        ut, info = _solve_step(opts, K, rhs, sym, n, ut_prev)
        v = (c * (ut - ut_prev) + Hu - theta * v_prev) / w
        cap_u.push(ut - ut_prev)
        cap_v.push(v - v_prev)
        u = ut + mesh.nodes[n] * psi
        hist.stats.append(StepStats(n, mesh.nodes[n], t1 - t0, info))
        tracker.record(n, u)
        if store == "full":
            hist.u_levels.append(u)
            hist.v_levels.append(v)
        ut_prev, v_prev, u_prev = ut, v, u
    if store != "full":
        hist.u_levels.append(u_prev)
        hist.v_levels.append(v_prev)
    hist.wall_seconds = time.perf_counter() - start
    return hist


def solve(problem: ProblemSpec, mesh: TimeMesh, grid: Grid2D, **kw) -> SolutionHistory:
    fn = subdiffusion_solve if problem.kind == "subdiffusion" else diffwave_solve
    return fn(problem, mesh, grid, **kw)


def step_residual_check(history: SolutionHistory, problem: ProblemSpec, n: int) -> dict:
    """Re-evaluate the scheme equations at level n from the stored levels.

    Returns max-norm residuals, absolute and relative to the largest term.
    Needs a run with ``store="full"``.
    """
    mesh, grid = history.mesh, history.grid
    if len(history.u_levels) != mesh.N + 1:
        raise PreconditionError("step_residual_check needs all levels (store='full')")
    if n == 0:
        out = {"abs": 0.0, "rel": 0.0}
        if history.kind == "diffusionwave":
            out.update(v_abs=float(np.max(np.abs(history.v_levels[0]))), v_rel=0.0)
        return out
    theta = problem.theta
    table = KernelTable(mesh, problem.beta, nmax=n)
    coeffs = table.coeffs(n)
    X, Y = grid.interior()
    t_off = mesh.t_offset(n)
    ops = assemble_operators(grid, build_aux(problem.coeffs), problem.coeffs, t_off)
    f = np.broadcast_to(problem.source(X, Y, t_off), X.shape)

    def caputo(levels):
        return coeffs @ np.diff(np.asarray(levels[: n + 1]), axis=0)

    def off(levels):
        return (1 - theta) * levels[n] + theta * levels[n - 1]

    if history.kind == "subdiffusion":
        lhs = caputo(history.u_levels)
        Mu = ops.apply(off(history.u_levels))
        r = lhs - Mu - f
        scale = max(np.max(np.abs(lhs)), np.max(np.abs(Mu)), np.max(np.abs(f)), 1e-300)
        return {"abs": float(np.max(np.abs(r))), "rel": float(np.max(np.abs(r)) / scale)}

    ut = [history.u_tilde(k) for k in range(n + 1)]
    psi = history.psi
    if problem.a_tpsi is not None:
        Psi = np.broadcast_to(problem.a_tpsi(X, Y, t_off), X.shape)
    else:
        Psi = t_off * ops.apply(psi)
    lhs1 = caputo(history.v_levels)
    Mu = ops.apply(off(ut))
    r1 = lhs1 - Mu - f - Psi
    scale1 = max(np.max(np.abs(lhs1)), np.max(np.abs(Mu)), np.max(np.abs(f)), 1e-300)
    lhs2 = off(history.v_levels)
    rhs2 = caputo(ut)
    r2 = lhs2 - rhs2
    scale2 = max(np.max(np.abs(lhs2)), np.max(np.abs(rhs2)), 1e-300)
    return {"abs": float(np.max(np.abs(r1))), "rel": float(np.max(np.abs(r1)) / scale1),
            "v_abs": float(np.max(np.abs(r2))), "v_rel": float(np.max(np.abs(r2)) / scale2)}
