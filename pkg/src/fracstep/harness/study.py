"""Convergence studies: run a grid of (alpha, gamma, N, M) cells, record E1
and the observed orders, and write the result tables."""

from __future__ import annotations

import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FracstepError, PreconditionError
from ..steppers import solve
from ..timegrid import build_graded
from .config import ExperimentConfig, gamma_label, resolve_gamma
from .problems import manufactured

log = logging.getLogger(__name__)

COLUMNS = ("alpha", "gamma", "N", "M", "E1", "order", "expected_order", "seconds")


@dataclass
class Row:
    alpha: float
    gamma: float
    gamma_label: str
    N: int
    M: int
    E1: float = math.nan
    order_tau: float | None = None
    order_h: float | None = None
    expected_order: float | None = None
    seconds: float = 0.0
    status: str = "ok"
    message: str = ""
    solver_iterations: int = 0

    @property
    def order(self):
        return self.order_tau if self.order_tau is not None else self.order_h


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def find(self, alpha, gamma_label, N, M):
        for r in self.rows:
            if (math.isclose(r.alpha, alpha) and r.gamma_label == gamma_label
                    and r.N == N and r.M == M):
                return r
        return None

    def column(self, gamma_label, attr="E1"):
        return [getattr(r, attr) for r in self.rows if r.gamma_label == gamma_label]

    @property
    def failed(self):
        return [r for r in self.rows if r.status != "ok"]


def observed_order(e_coarse, e_fine) -> float | None:
    """log2 of the error ratio between a run and its halved-resolution predecessor."""
    if e_coarse is None or e_fine is None:
        return None
    if not (np.isfinite(e_coarse) and np.isfinite(e_fine)) or e_coarse <= 0 or e_fine <= 0:
        return None
    return float(np.log2(e_coarse / e_fine))


def expected_temporal_order(gamma: float, sigmas) -> float:
    return float(min([2.0] + [gamma * s for s in sigmas]))


def _fill_orders(table: ErrorTable, config: ExperimentConfig):
    for r in table.rows:
        prev_n = table.find(r.alpha, r.gamma_label, r.N // 2, r.M) if r.N % 2 == 0 else None
        prev_m = table.find(r.alpha, r.gamma_label, r.N, r.M // 2) if r.M % 2 == 0 else None
        r.order_tau = observed_order(prev_n.E1, r.E1) if prev_n else None
        r.order_h = observed_order(prev_m.E1, r.E1) if prev_m else None
        temporal = r.order_tau is not None or (r.order_h is None and len(config.N) > 1)
        if temporal:
            r.expected_order = expected_temporal_order(r.gamma, config.sigmas(r.alpha))
        else:
            r.expected_order = 2.0


def run_cell(config: ExperimentConfig, alpha: float, gamma: float, N: int, M: int):
    """Solve one (alpha, gamma, N, M) cell; returns the SolutionHistory."""
    kw = {}
    if config.kind == "diffusionwave":
        kw["analytic_psi"] = config.psi == "analytic"
    problem = manufactured(config.kind, alpha, **kw)
    if config.coefficients != "paper_section5":
        from ..coefficients import preset
        problem = manufactured(config.kind, alpha, coeffs=preset(config.coefficients), **kw)
    mesh = build_graded(N, config.T, gamma, problem.theta)
    problem.T = config.T
    return solve(problem, mesh, problem.grid(M), solver_opts=config.solver_options(),
                 kernel_mode=config.kernel, store="last", soe_eps=config.soe_epsilon)


def run_convergence_study(config: ExperimentConfig, progress=None) -> ErrorTable:
    """Solve every (alpha, gamma, N, M) combination and tabulate E1 and orders.

    A failing cell is recorded with status "failed" and the sweep continues.
    """
    table = ErrorTable(meta={
        "name": config.name, "kind": config.kind, "kernel": config.kernel,
        "norm": config.norm, "psi": config.psi, "solver": asdict(config.solver_options()),
        "soe_epsilon": config.soe_epsilon, "T": config.T,
    })
    start = time.perf_counter()
    for alpha in config.alphas:
        alpha = float(alpha)
        for gspec in config.gammas:
            gamma = resolve_gamma(gspec, config.kind, alpha)
            label = gamma_label(gspec)
            for M in sorted(int(m) for m in config.M):
                for N in sorted(int(n) for n in config.N):
                    row = Row(alpha, gamma, label, N, M)
                    t0 = time.perf_counter()
                    try:
                        hist = run_cell(config, alpha, gamma, N, M)
                        row.E1 = hist.E1(config.norm)
                        row.solver_iterations = sum(s.solve.iterations for s in hist.stats)
                    except FracstepError as exc:
                        row.status = "failed"
                        row.message = f"{type(exc).__name__}: {exc}"
                        log.error("cell alpha=%g gamma=%s N=%d M=%d failed: %s",
                                  alpha, label, N, M, exc)
                    row.seconds = time.perf_counter() - t0
                    log.info("alpha=%g gamma=%s N=%d M=%d E1=%.4e (%.1fs)",
                             alpha, label, N, M, row.E1, row.seconds)
                    table.rows.append(row)
                    if progress is not None:
                        progress(row)
    _fill_orders(table, config)
    table.meta["wall_seconds"] = time.perf_counter() - start
    return table


# --------------------------------------------------------------------------
# output


def _fmt_cells(r: Row, missing: str):
    def f2(v):
        return missing if v is None else f"{v:.2f}"
    return [f"{r.alpha:g}", f"{r.gamma:.4g}", str(r.N), str(r.M),
            "nan" if not np.isfinite(r.E1) else f"{r.E1:.4e}",
            f2(r.order), f2(r.expected_order), f"{r.seconds:.2f}"]


def format_table(table: ErrorTable, fmt: str = "csv") -> str:
    if len(table) == 0:
        raise PreconditionError("cannot emit an empty table")
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(",".join(COLUMNS) + "\n")
        for r in table.rows:
            buf.write(",".join(_fmt_cells(r, "")) + "\n")
    elif fmt == "markdown":
        buf.write("| " + " | ".join(COLUMNS) + " |\n")
        buf.write("|" + "|".join("---" for _ in COLUMNS) + "|\n")
        for r in table.rows:
            buf.write("| " + " | ".join(_fmt_cells(r, "*")) + " |\n")
    else:
        raise PreconditionError(f"unknown table format {fmt!r}")
    return buf.getvalue()


_EXT = {"csv": ".csv", "markdown": ".md"}


def emit_table(table: ErrorTable, fmt: str = "csv", path=None) -> Path:
    """Write the table as csv or markdown; returns the file path."""
    text = format_table(table, fmt)
    if path is None:
        path = Path(table.meta.get("name", "study") + _EXT[fmt])
    path = Path(path)
    path.write_text(text)
    return path


def write_plot_data(table: ErrorTable, path) -> Path:
    """Whitespace-separated columns for log-log convergence plots."""
    if len(table) == 0:
        raise PreconditionError("cannot emit an empty table")
    lines = ["# alpha gamma N M E1 log10_N log10_M log10_E1"]
    for r in table.rows:
        le = np.log10(r.E1) if np.isfinite(r.E1) and r.E1 > 0 else float("nan")
        lines.append(f"{r.alpha:g} {r.gamma:.6g} {r.N} {r.M} {r.E1:.6e} "
                     f"{np.log10(r.N):.6f} {np.log10(r.M):.6f} {le:.6f}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_outputs(table: ErrorTable, config: ExperimentConfig) -> list:
    out = Path(config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in config.output.formats:
        written.append(emit_table(table, fmt, out / (config.name + _EXT[fmt])))
    if config.output.plot_data:
        written.append(write_plot_data(table, out / (config.name + "_plot.dat")))
    meta = dict(table.meta, config=config.to_dict(),
                failures=[{"alpha": r.alpha, "gamma": r.gamma_label, "N": r.N, "M": r.M,
                           "message": r.message} for r in table.failed])
    p = out / (config.name + "_meta.json")
    p.write_text(json.dumps(meta, indent=2, default=str))
    written.append(p)
    return written
