import json

import numpy as np
import pytest

from fracstep.errors import PreconditionError
from fracstep.harness import cli, reference, verify
from fracstep.harness.config import ExperimentConfig, gamma_label, resolve_gamma
from fracstep.harness.problems import (gamma_opt, manufactured_diffwave,
                                       manufactured_subdiffusion)
from fracstep.harness.study import (ErrorTable, Row, emit_table, format_table,
                                    observed_order, run_convergence_study, write_outputs)


def test_manufactured_values():
    pb = manufactured_subdiffusion(0.5)
    assert pb.exact(0.5, 0.5, 1.0) == pytest.approx(3.0, rel=1e-15)
    assert pb.phi(0.5, 0.5) == pytest.approx(1.0)
    assert pb.sigma == {"sigma1": 0.5}
    pw = manufactured_diffwave(1.5)
    assert pw.psi(0.5, 0.5) == pytest.approx(1.0)
    assert pw.sigma == {"sigma2": 1.5, "sigma3": 0.75}
    assert gamma_opt("diffusionwave", 1.5) == pytest.approx(2.6667, abs=1e-4)
    assert gamma_opt("subdiffusion", 0.7) == pytest.approx(2 / 0.7)
    with pytest.raises(PreconditionError):
        manufactured_subdiffusion(1.5)
    with pytest.raises(PreconditionError):
        manufactured_diffwave(0.5)


def test_manufactured_residual_suite():
    res = verify.manufactured_residuals(n_points=5)
    assert res.passed and res.worst <= 1e-10


def test_gamma_resolution():
    assert resolve_gamma(1, "subdiffusion", 0.5) == 1.0
    assert resolve_gamma("opt", "subdiffusion", 0.5) == 4.0
    assert resolve_gamma("2.5/alpha", "subdiffusion", 0.5) == 5.0
    assert resolve_gamma("opt", "diffusionwave", 1.6) == pytest.approx(2.5)
    assert gamma_label("opt") == "gamma_opt" and gamma_label(2.0) == "2"
    with pytest.raises(PreconditionError):
        resolve_gamma("fast", "subdiffusion", 0.5)


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig(kind="subdiffusion", alphas=[0.5], N=[4, 8], M=[8],
                           gammas=[1, "opt"], solver={"mode": "direct"})
    p = tmp_path / "c.json"
    cfg.dump(p)
    back = ExperimentConfig.load(p)
    assert back.to_dict() == cfg.to_dict()
    assert back.solver_options().mode == "direct"
    assert back.override(kernel="soe", formats=["csv"]).output.formats == ["csv"]


@pytest.mark.parametrize("bad", [
    {"alphas": []},
    {"alphas": [1.2]},
    {"kernel": "fft"},
    {"norm": "max"},
    {"gammas": ["x/beta"]},
    {"colour": "red"},
])
def test_config_rejects(bad):
    data = {"kind": "subdiffusion", "alphas": [0.5], "N": [4], "M": [4]}
    data.update(bad)
    with pytest.raises(PreconditionError):
        ExperimentConfig.from_dict(data)


def test_observed_order():
    assert observed_order(4e-2, 1e-2) == pytest.approx(2.0)
    assert observed_order(None, 1e-2) is None
    assert observed_order(float("nan"), 1e-2) is None


def _rows():
    return ErrorTable(rows=[
        Row(0.7, 1.0, "1", 500, 4, E1=3.6943e-01, expected_order=2.0),
        Row(0.7, 1.0, "1", 500, 8, E1=9.1710e-02, order_h=2.01, expected_order=2.0),
    ], meta={"name": "golden"})


def test_markdown_golden():
    expected = (
        "| alpha | gamma | N | M | E1 | order | expected_order | seconds |\n"
        "|---|---|---|---|---|---|---|---|\n"
        "| 0.7 | 1 | 500 | 4 | 3.6943e-01 | * | 2.00 | 0.00 |\n"
        "| 0.7 | 1 | 500 | 8 | 9.1710e-02 | 2.01 | 2.00 | 0.00 |\n"
    )
    assert format_table(_rows(), "markdown") == expected


def test_emit_csv_one_row(tmp_path):
    t = ErrorTable(rows=_rows().rows[:1], meta={"name": "one"})
    p = emit_table(t, "csv", tmp_path / "one.csv")
    lines = p.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == "alpha,gamma,N,M,E1,order,expected_order,seconds"


def test_emit_empty_raises():
    with pytest.raises(PreconditionError):
        format_table(ErrorTable(), "csv")
    with pytest.raises(PreconditionError):
        format_table(_rows(), "latex")


def test_small_study(tmp_path):
    cfg = ExperimentConfig(kind="subdiffusion", alphas=[0.5], N=[4, 8], M=[8],
                           gammas=[1, "opt"], name="small",
                           output={"dir": str(tmp_path), "formats": ["csv", "markdown"]})
    table = run_convergence_study(cfg)
    assert len(table) == 4 and not table.failed
    r = table.find(0.5, "gamma_opt", 8, 8)
    assert r.order_tau is not None and r.expected_order == 2.0
    assert table.find(0.5, "1", 8, 8).expected_order == 0.5
    assert table.find(0.5, "1", 4, 8).order is None
    files = [p.name for p in write_outputs(table, cfg)]
    assert files == ["small.csv", "small.md", "small_plot.dat", "small_meta.json"]
    dat = np.loadtxt(tmp_path / "small_plot.dat")
    assert dat.shape == (4, 8)
    np.testing.assert_allclose(dat[:, 7], np.log10(dat[:, 4]), atol=1e-6)


def test_failing_cell_recorded(tmp_path):
    cfg = ExperimentConfig(kind="subdiffusion", alphas=[0.5], N=[2, 4], M=[8],
                           solver={"mode": "iterative", "rel_tol": 1e-15, "max_iter": 1,
                                   "restart": 2},
                           output={"dir": str(tmp_path)})
    table = run_convergence_study(cfg)
    assert len(table.failed) == 2
    assert "SolverBreakdown" in table.failed[0].message


# published N=8 orders of table 5 that disagree with the published E1 ratios
KNOWN_ORDER_MISPRINTS = {(5, 1, 8), (5, "opt", 8)}


def test_reference_tables_consistent():
    mismatched = set()
    for n, t in reference.TABLES.items():
        for col in t.columns:
            assert len(col.E1) == 4 and col.orders[0] is None
            got = np.log2(np.array(col.E1[:-1]) / np.array(col.E1[1:]))
            for k, (g, o) in enumerate(zip(got, col.orders[1:])):
                if abs(g - o) > 0.011:
                    mismatched.add((n, col.gamma, t.sweep[k + 1]))
    assert mismatched == KNOWN_ORDER_MISPRINTS
    assert reference.table(4).columns[0].E1[0] == 3.6943e-01
    assert reference.config_dict(1, 400)["M"] == [400]
    with pytest.raises(KeyError):
        reference.table(10)


def test_cli_verify(capsys):
    assert cli.main(["verify", "--quick", "--suite", "coefficients", "soe"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2


def test_cli_verify_failure(monkeypatch, capsys):
    bad = lambda: verify.SuiteResult("broken", trials=1, violations=1)
    monkeypatch.setitem(verify.SUITES, "coefficients", bad)
    assert cli.main(["verify", "--suite", "coefficients"]) == cli.EXIT_PROPERTY
    assert "[FAIL] broken" in capsys.readouterr().out


def test_cli_reproduce_small(tmp_path, capsys):
    code = cli.main(["reproduce", "--table", "4", "--N", "20", "--out", str(tmp_path), "--quiet"])
    assert code == 0
    out = capsys.readouterr().out
    assert "comparison with reference table 4" in out
    assert (tmp_path / "table4.csv").exists() and (tmp_path / "table4.md").exists()


def test_cli_run_solver_failure(tmp_path, capsys):
    cfg = {"kind": "subdiffusion", "alphas": [0.5], "N": [2], "M": [6],
           "solver": {"mode": "iterative", "rel_tol": 1e-15, "max_iter": 1, "restart": 2}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code = cli.main(["run", "--config", str(p), "--out", str(tmp_path), "--quiet"])
    assert code == cli.EXIT_SOLVER


def test_cli_run_auto_m(tmp_path):
    data = cli._resolve_m({"M": "auto"}, paper_scale=False)
    assert data["M"] == [400]
    assert cli._resolve_m({"M": [400, 8]}, paper_scale=True)["M"] == [1000, 8]


def test_shipped_configs_load():
    from pathlib import Path
    import fracstep.harness as h
    paths = sorted((Path(h.__file__).parent / "configs").glob("*.json"))
    assert len(paths) == 2
    for p in paths:
        data = cli._resolve_m(json.loads(p.read_text()), paper_scale=False)
        ExperimentConfig.from_dict(data)


def test_cli_run_shipped_config(tmp_path, capsys):
    from pathlib import Path
    import fracstep.harness as h
    p = Path(h.__file__).parent / "configs" / "diffwave_quick.json"
    assert cli.main(["run", "--config", str(p), "--out", str(tmp_path), "--quiet"]) == 0
    out = capsys.readouterr().out
    assert "gamma" in out and (tmp_path / "diffwave_quick.md").exists()
