"""Acceptance criteria, each checked at its stated tolerance.

Every test records a one-line verdict that is printed in the terminal
summary ("acceptance criteria" section), whether it passes or not.
"""

import time

import mpmath as mp
import numpy as np
import pytest
import sympy as sy

from fracstep.harness import reference, verify
from fracstep.harness.config import ExperimentConfig, gamma_label, resolve_gamma
from fracstep.harness.problems import manufactured
from fracstep.harness.study import run_cell, run_convergence_study
from fracstep.kernels import ab_parts, soe_build
from fracstep.timegrid import build_graded

DESK_M = 400


def _spatial_table(number, kernel="direct"):
    cfg = ExperimentConfig.from_dict(dict(reference.config_dict(number), kernel=kernel))
    t0 = time.perf_counter()
    table = run_convergence_study(cfg)
    return table, time.perf_counter() - t0


@pytest.fixture(scope="module")
def table4_direct():
    return _spatial_table(4)


def _check_spatial(criterion, number, table, seconds, budget, record, title):
    ref = reference.table(number)
    worst_rel, worst_ord, lines = 0.0, 0.0, []
    ok = not table.failed
    for col in ref.columns:
        label = gamma_label(col.gamma)
        for i, M in enumerate(ref.M):
            row = table.find(ref.alpha, label, ref.N[0], M)
            rel = abs(row.E1 - col.E1[i]) / col.E1[i]
            worst_rel = max(worst_rel, rel)
            bad = rel > 0.02
            if row.order_h is not None:
                dev = abs(row.order_h - 2.0)
                worst_ord = max(worst_ord, dev)
                bad |= dev > 0.05
            ok &= not bad
            lines.append(f"gamma={label:<10} M={M:<3} E1={row.E1:.4e} ref={col.E1[i]:.4e} "
                         f"rel={rel:.2%} order={row.order_h if row.order_h is None else round(row.order_h, 3)}"
                         + ("  <-- out of tolerance" if bad else ""))
    ok &= seconds < budget
    record(criterion, title, ok,
           f"max rel E1 dev {worst_rel:.3%} (tol 2%), max |order-2| {worst_ord:.3f} (tol 0.05), "
           f"{seconds:.0f}s (budget {budget:.0f}s)", lines)
    return ok


def test_criterion_01_table4(table4_direct, record):
    table, seconds = table4_direct
    assert _check_spatial(1, 4, table, seconds, 120, record, "spatial table 4 (alpha=0.7, N=500)")


def test_criterion_02_table9(record):
    table, seconds = _spatial_table(9)
    assert _check_spatial(2, 9, table, seconds, 180, record, "spatial table 9 (alpha=1.5, N=500)")


# --------------------------------------------------------------------------
# criterion 3: temporal orders at M=400

TEMPORAL_TABLES = (1, 2, 3, 5, 6, 7, 8)


def _temporal_runs(number):
    ref = reference.table(number)
    solver = {"mode": "direct"}
    uniform = ExperimentConfig(kind=ref.kind, alphas=[ref.alpha], gammas=[1], N=[8, 16, 32],
                               M=[DESK_M], solver=solver)
    graded = ExperimentConfig(kind=ref.kind, alphas=[ref.alpha],
                              gammas=[c.gamma for c in ref.columns[1:]], N=[16, 32],
                              M=[DESK_M], solver=solver)
    rows = run_convergence_study(uniform).rows + run_convergence_study(graded).rows
    return {(r.gamma_label, r.N): r for r in rows}


@pytest.mark.slow
def test_criterion_03_temporal_orders(record):
    t0 = time.perf_counter()
    lines, failures, n_checks = [], [], 0
    for number in TEMPORAL_TABLES:
        ref = reference.table(number)
        rows = _temporal_runs(number)
        for ci, col in enumerate(ref.columns):
            label = gamma_label(col.gamma)
            checks = [(16, 0.25), (32, 0.25)] if ci == 0 else [(32, 0.15)]
            for N, tol in checks:
                if number == 1 and ci == 2 and N == 32:
                    tol = 0.3
                row = rows[(label, N)]
                published = col.orders[ref.N.index(N)]
                got = row.order_tau
                n_checks += 1
                ok = got is not None and abs(got - published) <= tol
                lines.append(f"table {number} alpha={ref.alpha:<4} gamma={label:<10} N={N:<2} "
                             f"E1={row.E1:.4e} order={got:.2f} published={published:.2f} "
                             f"(+-{tol}) theoretical={col.theoretical:.2f}"
                             + ("" if ok else "  <-- out of tolerance"))
                if not ok:
                    failures.append(f"table {number} gamma={label} N={N}")
    seconds = time.perf_counter() - t0
    budget = 20 * 60
    passed = not failures and seconds < budget
    detail = (f"{n_checks - len(failures)}/{n_checks} order checks within tolerance, "
              f"{seconds / 60:.1f} min (budget 20 min)")
    if failures:
        detail += "; failing: " + ", ".join(failures)
    record(3, f"temporal orders at M={DESK_M} (tables 1-3, 5-8)", passed, detail, lines)
    assert passed, detail


# --------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_04_paper_scale_cell(record):
    cfg = ExperimentConfig(kind="subdiffusion", alphas=[0.5], gammas=[4], N=[8], M=[1000],
                           solver={"mode": "iterative", "rel_tol": 1e-10})
    t0 = time.perf_counter()
    hist = run_cell(cfg, 0.5, 4.0, 8, 1000)
    seconds = time.perf_counter() - t0
    E1 = hist.E1("semi")
    published = reference.table(1).columns[1].E1[1]
    rel = abs(E1 - published) / published
    its = [s.solve.iterations for s in hist.stats]
    passed = rel <= 0.02 and seconds < 30 * 60 and all(i > 0 for i in its)
    record(4, "table 1 cell alpha=0.5 gamma=4 N=8 M=1000, iterative solver", passed,
           f"E1={E1:.5e} published={published:.4e} rel={rel:.3%} (tol 2%), "
           f"GMRES its/step {min(its)}-{max(its)}, {seconds:.0f}s (budget 1800s)")
    assert passed


def test_criterion_05_kernel_properties(record):
    res = verify.kernel_properties(n_meshes=1000)
    record(5, "A1 monotonicity and A2 lower bound on 1000 random meshes", res.passed,
           f"{res.trials} rows, {res.violations} violations, betas 0.05..0.95")
    assert res.passed and len(verify.BETAS) == 19


def test_criterion_06_quadratic_form(record):
    res = verify.quadratic_form_trials(n_trials=10_000)
    record(6, "weighted quadratic-form inequality, 10^4 random trials", res.passed,
           f"{res.trials} trials, {res.violations} violations")
    assert res.passed and res.trials == 10_000


def test_criterion_07_complementary(record):
    res = verify.complementary_properties(nmax=64, gammas=(1.0, 2.0, 4.0))
    record(7, "complementary kernels, n <= 64, gamma in {1, 2, 4}", res.passed,
           f"{res.trials} rows, worst identity residual {res.worst:.2e} (tol 1e-12), "
           f"{res.violations} violations")
    assert res.passed


def test_criterion_08_soe_equivalence(table4_direct, record):
    direct, _ = table4_direct
    soe, seconds = _spatial_table(4, kernel="soe")
    diffs = []
    for rd, rs in zip(direct.rows, soe.rows):
        assert (rd.gamma_label, rd.M) == (rs.gamma_label, rs.M)
        diffs.append(abs(rd.E1 - rs.E1))
    worst_diff = max(diffs)
    # the SOE built for each table-4 mesh meets eps on [tau_1, T]
    ref = reference.table(4)
    worst_soe = 0.0
    for col in ref.columns:
        gamma = resolve_gamma(col.gamma, ref.kind, ref.alpha)
        mesh = build_graded(500, 1.0, gamma, ref.alpha / 2)
        tau1 = float(mesh.steps[0])
        s = soe_build(ref.alpha, 1e-12, tau1, 1.0)
        t = np.geomspace(tau1, 1.0, 50_000)
        worst_soe = max(worst_soe, float(np.max(s.relative_error(t))))
    passed = (worst_diff <= 1e-8 and worst_soe <= 1e-12 and not soe.failed
              and soe.meta["kernel"] == "soe")
    record(8, "SOE vs direct on the full table-4 run", passed,
           f"max |E1_soe - E1_direct| = {worst_diff:.2e} (tol 1e-8), "
           f"SOE max rel error on [tau_1, T] = {worst_soe:.2e} (tol 1e-12), soe run {seconds:.0f}s")
    assert passed


# --------------------------------------------------------------------------
# criterion 9: closed-form a/b against mpmath quadrature


def _oracle_ab(nodes, theta, beta, n, k):
    mp.mp.dps = 40
    t = [mp.mpf(float(v)) for v in nodes]
    b_ = mp.mpf(beta)
    tau_n = t[n] - t[n - 1]
    t_off = t[n] - mp.mpf(theta) * tau_n
    tau_k = t[k] - t[k - 1]
    g = mp.gamma(1 - b_)
    if k == n:
        # singular at s = t_off: with r = t_off - s = v^p, r^-beta dr = p v dv
        p = 2 / (1 - b_)
        a = mp.quad(lambda v: p * v, [0, (t_off - t[k - 1]) ** (1 / p)]) / (tau_k * g)
        return a, None
    a = mp.quad(lambda s: (t_off - s) ** (-b_), [t[k - 1], t[k]]) / (tau_k * g)
    mid = (t[k - 1] + t[k]) / 2
    tau_k1 = t[k + 1] - t[k]
    b = mp.quad(lambda s: (t_off - s) ** (-b_) * (s - mid), [t[k - 1], mid, t[k]])
    b *= 2 / (tau_k * (tau_k + tau_k1) * g)
    return a, b


def test_criterion_09_kernel_oracle(record):
    rng = np.random.default_rng(2024)
    worst, n_tuples, violations = 0.0, 1000, 0
    for i in range(n_tuples):
        beta = float(rng.uniform(0.02, 0.98))
        N = int(rng.integers(2, 65))
        if i % 2:
            mesh = verify.random_mesh(rng, N, beta / 2)
        else:
            mesh = build_graded(N, 1.0, float(rng.uniform(1.0, 6.0)), beta / 2)
        n = int(rng.integers(1, N + 1))
        k = int(rng.integers(1, n + 1))
        a, b = ab_parts(mesh, beta, n)
        oa, ob = _oracle_ab(mesh.nodes, mesh.theta, beta, n, k)
        errs = [abs(a[k - 1] - float(oa)) / abs(float(oa))]
        if ob is not None:
            errs.append(abs(b[k - 1] - float(ob)) / abs(float(ob)))
        e = max(errs)
        worst = max(worst, e)
        violations += e > 1e-11
    passed = violations == 0
    record(9, "closed-form a/b coefficients vs mpmath quadrature, 1000 tuples", passed,
           f"worst relative deviation {worst:.2e} (tol 1e-11), {violations} violations")
    assert passed


# --------------------------------------------------------------------------
# criterion 10: manufactured sources against a symbolic operator and a
# quadrature Caputo derivative


def _symbolic_operator():
    x, y, t = sy.symbols("x y t", real=True)
    u = sy.sin(sy.pi * x) * sy.sin(sy.pi * y)
    a1 = sy.exp(x + y) * (1 + sy.cos(t))
    a2 = sy.exp((x + y) * t) * (1 + t ** sy.Rational(3, 2))
    b1, b2, b3 = sy.sin(x * y * t), sy.cos(x * y * t), (x ** 2 + y ** 2) * t
    Au = (a1 * sy.diff(u, x, 2) + a2 * sy.diff(u, y, 2) + b1 * sy.diff(u, x)
          + b2 * sy.diff(u, y) + b3 * u)
    return sy.lambdify((x, y, t), Au, "mpmath"), sy.lambdify((x, y), u, "mpmath")


def _endpoint_quad(c0, c1, t):
    """int_0^t s^c0 (t-s)^c1 ds by quadrature, c0, c1 > -1.

    The interval is split at t/2 and each half is mapped with s = v^q
    (or t - s = v^q), q = 2/(1+c), which leaves a smooth integrand.
    """
    h = t / 2
    q0, q1 = 2 / (1 + c0), 2 / (1 + c1)
    left = mp.quad(lambda v: q0 * v * (t - v ** q0) ** c1, [0, h ** (1 / q0)])
    right = mp.quad(lambda v: q1 * v * (t - v ** q1) ** c0, [0, h ** (1 / q1)])
    return left + right


def _caputo_time_factor(alpha, t):
    """Caputo derivative of 1 + t + t^alpha by quadrature of its defining integral."""
    mp.mp.dps = 30
    a, t = mp.mpf(alpha), mp.mpf(t)
    if alpha < 1:
        # u' = 1 + alpha s^(alpha-1)
        val = _endpoint_quad(0, -a, t) + a * _endpoint_quad(a - 1, -a, t)
        return val / mp.gamma(1 - a)
    # u'' = alpha (alpha-1) s^(alpha-2)
    return a * (a - 1) * _endpoint_quad(a - 2, 1 - a, t) / mp.gamma(2 - a)


def test_criterion_10_manufactured_residuals(record):
    Au, u_space = _symbolic_operator()
    rng = np.random.default_rng(10)
    worst, violations, n = 0.0, 0, 0
    for alpha in (0.5, 0.7, 0.9, 1.01, 1.1, 1.5, 1.9):
        kind = "subdiffusion" if alpha < 1 else "diffusionwave"
        pb = manufactured(kind, alpha)
        for _ in range(20):
            x, y, t = rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98), rng.uniform(0.01, 1.0)
            lhs = u_space(x, y) * _caputo_time_factor(alpha, t)
            rhs = Au(x, y, t) * (1 + t + mp.mpf(t) ** alpha) + pb.source(x, y, t)
            r = float(abs(lhs - rhs) / max(1, abs(lhs)))
            worst = max(worst, r)
            violations += r > 1e-10
            n += 1
    scipy_suite = verify.manufactured_residuals(n_points=20)
    passed = violations == 0 and scipy_suite.passed
    record(10, "D_t^alpha u = A u + f at 20 random points per alpha (manufactured problems)", passed,
           f"{n} points, worst scaled residual {worst:.2e} (tol 1e-10), "
           f"independent scipy check worst {scipy_suite.worst:.2e}")
    assert passed
