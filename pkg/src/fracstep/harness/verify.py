"""Randomised property suites behind ``fracstep verify``.

Every suite returns a SuiteResult with the number of trials and violations.
The same functions drive the acceptance tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as G

from ..coefficients import PRESETS, preset, verify_assumptions
from ..kernels import (KernelTable, a1_monotone, a2_lower_bound, check_quadratic_form_inequality,
                       complementary_bounds_ok, orthogonality_residual, soe_build)
from ..timegrid import RATIO_LIMIT, build_custom, build_graded
from .problems import bump, bump_elliptic, manufactured_diffwave, manufactured_subdiffusion

BETAS = tuple(np.round(np.arange(0.05, 0.951, 0.05), 2))


@dataclass
class SuiteResult:
    name: str
    trials: int = 0
    violations: int = 0
    worst: float = 0.0
    seconds: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.violations == 0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: {self.trials} trials, {self.violations} violations, "
                f"worst={self.worst:.3e} ({self.seconds:.1f}s)")


def random_mesh(rng, N: int, theta: float, T: float = 1.0, max_ratio: float = RATIO_LIMIT):
    """Random partition of [0, T] with tau_{k-1}/tau_k <= max_ratio.

    Steps grow by up to a factor 4 or shrink down to the ratio limit, with
    occasional uniform stretches.
    """
    growth = rng.uniform(1.0 / max_ratio, 4.0, size=N - 1)
    flat = rng.random(N - 1) < 0.2
    growth[flat] = 1.0
    steps = np.cumprod(np.concatenate([[1.0], growth]))
    steps *= T / steps.sum()
    nodes = np.concatenate([[0.0], np.cumsum(steps)])
    nodes[-1] = T
    return build_custom(nodes, theta)


def kernel_properties(n_meshes: int = 1000, seed: int = 0, betas=BETAS, max_n: int = 40):
    """A1 monotonicity and A2 lower bound on random admissible meshes."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("kernel A1/A2")
    t0 = time.perf_counter()
    for i in range(n_meshes):
        beta = float(betas[i % len(betas)])
        N = int(rng.integers(2, max_n + 1))
        mesh = random_mesh(rng, N, beta / 2)
        table = KernelTable(mesh, beta)
        for n in range(1, N + 1):
            row = table.row(n)
            res.trials += 1
            ok = a1_monotone(row) and a2_lower_bound(mesh, row)
            if not ok:
                res.violations += 1
                res.notes.append(f"beta={beta} N={N} n={n}")
    res.seconds = time.perf_counter() - t0
    return res


def quadratic_form_trials(n_trials: int = 10_000, seed: int = 1, m: int = 6, max_n: int = 24):
    """Monte-Carlo check of the weighted quadratic-form inequality."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("quadratic-form inequality")
    t0 = time.perf_counter()
    for _ in range(n_trials):
        beta = float(rng.uniform(0.02, 0.98))
        N = int(rng.integers(1, max_n + 1))
        mesh = random_mesh(rng, N, beta / 2) if N > 1 else build_graded(1, 1.0, 1.0, beta / 2)
        table = KernelTable(mesh, beta)
        n = int(rng.integers(1, N + 1))
        # positive diagonals, non-increasing in time
        q0 = rng.uniform(0.5, 2.0, size=m)
        drops = rng.uniform(0.0, 0.3, size=(n, m)) * (rng.random((n, m)) < 0.7)
        q = np.vstack([q0, q0 * np.cumprod(1.0 - drops, axis=0)])
        z = rng.normal(size=(n + 1, m)) * rng.uniform(0.1, 10.0)
        res.trials += 1
        if not check_quadratic_form_inequality(mesh, table, q, z, n):
            res.violations += 1
    res.seconds = time.perf_counter() - t0
    return res


def complementary_properties(nmax: int = 64, gammas=(1.0, 2.0, 4.0), betas=BETAS):
    """Orthogonality residual and P bounds on graded meshes."""
    res = SuiteResult("complementary kernels")
    t0 = time.perf_counter()
    for gamma in gammas:
        for beta in betas:
            mesh = build_graded(nmax, 1.0, gamma, beta / 2)
            table = KernelTable(mesh, beta)
            for n in range(1, nmax + 1):
                r = orthogonality_residual(table, n)
                res.worst = max(res.worst, r)
                res.trials += 1
                if r > 1e-12 or not complementary_bounds_ok(table, n):
                    res.violations += 1
                    res.notes.append(f"gamma={gamma} beta={beta} n={n} residual={r:.2e}")
    res.seconds = time.perf_counter() - t0
    return res


def soe_accuracy(epsilon: float = 1e-12, betas=(0.1, 0.25, 0.35, 0.5, 0.75, 0.9),
                 N: int = 500, gammas=(1.0, 2.0 / 0.7, 4.0), n_check: int = 20_000):
    """SOE relative error on [tau_1, T], checked on a denser sample than the build."""
    res = SuiteResult("SOE accuracy")
    t0 = time.perf_counter()
    for beta in betas:
        for gamma in gammas:
            mesh = build_graded(N, 1.0, gamma, beta / 2)
            dt = float(mesh.steps.min())
            soe = soe_build(beta, epsilon, dt, 1.0)
            t = np.geomspace(dt, 1.0, n_check)
            err = float(np.max(soe.relative_error(t)))
            res.worst = max(res.worst, err)
            res.trials += 1
            if err > epsilon:
                res.violations += 1
                res.notes.append(f"beta={beta} gamma={gamma} err={err:.2e}")
    res.seconds = time.perf_counter() - t0
    return res


def coefficient_checks(names=None):
    """Structural assumptions for the built-in coefficient presets."""
    res = SuiteResult("coefficient assumptions")
    t0 = time.perf_counter()
    for name in names or sorted(PRESETS):
        report = verify_assumptions(preset(name))
        res.trials += 1
        if not report.all_pass:
            res.violations += 1
            res.notes.append(name)
    res.seconds = time.perf_counter() - t0
    return res


def _caputo_quad(alpha: float, t: float) -> float:
    """Caputo derivative of 1 + t + t^alpha by quadrature of its defining integral."""
    one = lambda s: 1.0
    # the endpoint singularities s^a (t-s)^b go into the algebraic weight
    if alpha < 1:
        # u' = 1 + alpha s^(alpha-1)
        val = quad(one, 0.0, t, weight="alg", wvar=(0.0, -alpha))[0]
        val += alpha * quad(one, 0.0, t, weight="alg", wvar=(alpha - 1.0, -alpha))[0]
        return val / G(1.0 - alpha)
    # u'' = alpha (alpha-1) s^(alpha-2)
    c = alpha * (alpha - 1.0)
    val = c * quad(one, 0.0, t, weight="alg", wvar=(alpha - 2.0, 1.0 - alpha))[0]
    return val / G(2.0 - alpha)


def manufactured_residuals(n_points: int = 20, seed: int = 3,
                           alphas=(0.5, 0.7, 0.9, 1.01, 1.1, 1.5, 1.9)):
    """|D_t^alpha u - A u - f| at random space-time points for the test problems."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("manufactured residuals")
    t0 = time.perf_counter()
    for alpha in alphas:
        pb = manufactured_subdiffusion(alpha) if alpha < 1 else manufactured_diffwave(alpha)
        for _ in range(n_points):
            x, y, t = rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98), rng.uniform(0.01, 1.0)
            lhs = bump(x, y) * _caputo_quad(alpha, t)
            rhs = bump_elliptic(pb.coeffs, x, y, t) * (1 + t + t ** alpha) + pb.source(x, y, t)
            r = abs(lhs - rhs) / max(1.0, abs(lhs))
            res.worst = max(res.worst, r)
            res.trials += 1
            if r > 1e-10:
                res.violations += 1
    res.seconds = time.perf_counter() - t0
    return res


SUITES = {
    "kernels": kernel_properties,
    "inequality": quadratic_form_trials,
    "complementary": complementary_properties,
    "soe": soe_accuracy,
    "coefficients": coefficient_checks,
    "manufactured": manufactured_residuals,
}


def run_all(quick: bool = False):
    kw = {"kernels": {"n_meshes": 100}, "inequality": {"n_trials": 1000}} if quick else {}
    return [fn(**kw.get(name, {})) for name, fn in SUITES.items()]
