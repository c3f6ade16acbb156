import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.io import mmread

from fracstep.coefficients import build_aux, preset
from fracstep.errors import PreconditionError, SolverBreakdown
from fracstep.spatial import (Grid2D, SolveInfo, SolverOptions, apply_discrete_elliptic,
                              assemble_operators, difference_operators, export_matrix_market,
                              h1_norm, h1_semi, inner, l2_norm, solve_sparse)


def _ops(name, M, t=0.3):
    c = preset(name)
    return assemble_operators(Grid2D(M, M), build_aux(c), c, t)


def test_single_node_stiffness():
    ops = _ops("identity", 2)
    assert ops.A_stiff.shape == (1, 1)
    assert ops.A_stiff.toarray()[0, 0] == pytest.approx(16.0)
    assert ops.B_adv.nnz == 0 or np.all(ops.B_adv.data == 0)


def test_grid_layout():
    g = Grid2D(4, 3)
    assert g.m == 6 and g.shape == (2, 3)
    X, Y = g.interior()
    # x runs fastest
    np.testing.assert_allclose(X[:3], [0.25, 0.5, 0.75])
    np.testing.assert_allclose(Y[:3], 1 / 3)
    with pytest.raises(PreconditionError):
        Grid2D(1, 4)


def test_factored_equals_direct():
    c = preset("paper_section5")
    g = Grid2D(13, 9)
    aux = build_aux(c)
    A1 = assemble_operators(g, aux, c, 0.4, factored=True).A_stiff
    A2 = assemble_operators(g, aux, c, 0.4, factored=False).A_stiff
    scale = abs(A1).max()
    assert abs(A1 - A2).max() <= 1e-13 * scale
    assert abs(A1 - A1.T).max() <= 1e-13 * scale


@pytest.mark.parametrize("M", [6, 8, 17])
def test_stiffness_psd_and_half_central_bounds(M):
    ops = _ops("paper_section5", M)
    d = difference_operators(ops.grid)
    g = ops.grid
    rng = np.random.default_rng(M)
    for _ in range(1000 // 3):
        z = rng.normal(size=g.m)
        assert z @ (ops.A_stiff @ z) > 0
        Z = z.reshape(g.shape)
        # row-wise 1D bounds: 4 h^2 |S-hat z|^2 <= h^2 |S z|^2, for S-hat and its transpose
        for row in Z:
            Sz = d.Sx @ row
            for Sh in (d.Shx, d.Shx.T):
                assert 4 * np.sum((Sh @ row) ** 2) <= np.sum(Sz ** 2) * (1 + 1e-12)
        for col in Z.T:
            Sz = d.Sy @ col
            for Sh in (d.Shy, d.Shy.T):
                assert 4 * np.sum((Sh @ col) ** 2) <= np.sum(Sz ** 2) * (1 + 1e-12)


def test_apply_zero_and_reaction_only():
    ops = _ops("paper_section5", 8)
    np.testing.assert_array_equal(apply_discrete_elliptic(ops, np.zeros(ops.grid.m)), 0.0)
    small = 1e-8
    c = preset("identity")
    one = lambda x, y, t: np.ones(np.broadcast(x, y, t).shape)
    c = c.with_overrides(a1=lambda x, y, t: small * one(x, y, t),
                         a2=lambda x, y, t: small * one(x, y, t), b3=one)
    ops = assemble_operators(Grid2D(8, 8), build_aux(c), c, 0.0)
    u = np.random.default_rng(0).normal(size=ops.grid.m)
    np.testing.assert_allclose(apply_discrete_elliptic(ops, u), u, atol=1e-4)
    with pytest.raises(PreconditionError):
        apply_discrete_elliptic(ops, np.zeros(3))


def test_laplacian_second_order():
    errs = []
    for M in (16, 32, 64):
        ops = _ops("identity", M)
        X, Y = ops.grid.interior()
        u = np.sin(np.pi * X) * np.sin(np.pi * Y)
        errs.append(np.max(np.abs(apply_discrete_elliptic(ops, u) + 2 * np.pi ** 2 * u)))
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    np.testing.assert_allclose(slopes, 2.0, atol=0.1)


def test_variable_operator_second_order():
    from fracstep.harness.problems import bump_elliptic
    c = preset("paper_section5")
    errs = []
    for M in (16, 32, 64):
        ops = _ops("paper_section5", M, t=0.6)
        X, Y = ops.grid.interior()
        u = np.sin(np.pi * X) * np.sin(np.pi * Y)
        errs.append(np.max(np.abs(ops.apply(u) - bump_elliptic(c, X, Y, 0.6))))
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    np.testing.assert_allclose(slopes, 2.0, atol=0.1)


def test_norms_single_node():
    g = Grid2D(2, 2)
    u = np.ones(1)
    assert l2_norm(g, u) == pytest.approx(0.5)
    assert h1_semi(g, u) == pytest.approx(2.0)
    assert h1_norm(g, u) == pytest.approx(np.sqrt(4.25))
    for f in (l2_norm, h1_semi, h1_norm):
        assert f(g, np.zeros(1)) == 0.0


def test_norms_of_bump():
    g = Grid2D(64, 64)
    X, Y = g.interior()
    u = np.sin(np.pi * X) * np.sin(np.pi * Y)
    assert l2_norm(g, u) == pytest.approx(0.5, rel=1e-12)
    assert h1_semi(g, u) == pytest.approx(np.pi / np.sqrt(2), rel=1e-3)
    assert inner(g, u, u) == pytest.approx(0.25, rel=1e-12)


def test_poincare_ratio_bounded():
    rng = np.random.default_rng(5)
    ratios = []
    for M in (8, 16, 32, 64):
        g = Grid2D(M, M)
        ratios.append(max(l2_norm(g, u) / h1_semi(g, u)
                          for u in rng.normal(size=(20, g.m))))
    # the smooth extreme is 1/(sqrt(2) pi) ~ 0.225
    assert max(ratios) < 0.23


def test_solve_identity_and_poisson():
    r = np.arange(5.0)
    np.testing.assert_allclose(solve_sparse(sp.identity(5), r), r)
    T = sp.diags([-np.ones(4), 2 * np.ones(5), -np.ones(4)], [-1, 0, 1])
    b = np.array([1.0, -2.0, 0.5, 3.0, 1.0])
    np.testing.assert_allclose(solve_sparse(T, b), np.linalg.solve(T.toarray(), b),
                               rtol=1e-12, atol=1e-12)


def test_solve_iterative_matches_direct():
    ops = _ops("paper_section5", 24)
    K = sp.identity(ops.grid.m) * 50.0 - 0.7 * ops.M
    b = np.random.default_rng(1).normal(size=ops.grid.m)
    x_d = solve_sparse(K, b, SolverOptions(mode="direct"))
    for pre in ("amg", "ilu"):
        info = SolveInfo("iterative")
        x_i = solve_sparse(K, b, SolverOptions(mode="iterative", preconditioner=pre), info=info)
        assert info.iterations > 0 and info.residual < 1e-11
        np.testing.assert_allclose(x_i, x_d, rtol=1e-8, atol=1e-10 * np.abs(x_d).max())


def test_singular_raises():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(SolverBreakdown):
        solve_sparse(A, np.ones(2), SolverOptions(mode="direct"))


def test_solver_mode_resolution():
    assert SolverOptions().resolve(1000) == "direct"
    assert SolverOptions().resolve(10 ** 6) == "iterative"
    with pytest.raises(PreconditionError):
        SolverOptions(mode="magic").resolve(4)


def test_matrix_market_export(tmp_path):
    ops = _ops("paper_section5", 6)
    path = tmp_path / "A.mtx"
    export_matrix_market(path, ops.A_stiff)
    back = sp.csr_matrix(mmread(str(path)))
    assert abs(back - ops.A_stiff).max() <= 1e-14 * abs(ops.A_stiff).max()


@settings(max_examples=30, deadline=None)
@given(Mx=st.integers(2, 12), My=st.integers(2, 12), t=st.floats(0, 1), seed=st.integers(0, 999))
def test_stiffness_quadratic_form(Mx, My, t, seed):
    c = preset("paper_section5")
    g = Grid2D(Mx, My)
    ops = assemble_operators(g, build_aux(c), c, t)
    z = np.random.default_rng(seed).normal(size=g.m)
    d = difference_operators(g)
    # z^T A z equals the weighted sum of squared face differences
    expect = (d.Dx @ z) @ (ops.P1_face * (d.Dx @ z)) + (d.Dy @ z) @ (ops.P2_face * (d.Dy @ z))
    assert z @ (ops.A_stiff @ z) == pytest.approx(expect, rel=1e-12)
    assert expect > 0
