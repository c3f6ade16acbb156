"""Command line entry point ``fracstep``.

    fracstep run --config study.json [--paper-scale] [--kernel soe|direct]
                 [--format csv|markdown] [--out DIR]
    fracstep reproduce --table 1..9 [--paper-scale] [--kernel ...] [--N 4 8 16 32]
    fracstep verify [--quick] [--suite NAME ...]

Exit codes: 0 success, 2 property-suite failure, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import FracstepError
from . import reference, verify
from .config import ExperimentConfig, gamma_label
from .study import format_table, run_convergence_study, write_outputs

EXIT_OK, EXIT_PROPERTY, EXIT_SOLVER = 0, 2, 3
DESK_M, PAPER_M = 400, 1000

log = logging.getLogger("fracstep")


def _resolve_m(data: dict, paper_scale: bool):
    """``"M": "auto"`` means the temporal-study resolution (400, or 1000 with --paper-scale)."""
    if data.get("M") == "auto":
        data["M"] = [PAPER_M if paper_scale else DESK_M]
    elif paper_scale:
        data["M"] = [PAPER_M if int(m) == DESK_M else int(m) for m in data["M"]]
    return data


def _overrides(args) -> dict:
    kw = {}
    if getattr(args, "kernel", None):
        kw["kernel"] = args.kernel
    if getattr(args, "norm", None):
        kw["norm"] = args.norm
    if getattr(args, "out", None):
        kw["dir"] = args.out
    if getattr(args, "format", None):
        kw["formats"] = [args.format]
    return kw


def _exit_code(table) -> int:
    if any("SolverBreakdown" in r.message for r in table.failed):
        return EXIT_SOLVER
    return EXIT_SOLVER if table.failed else EXIT_OK


def _progress(row):
    print(f"  alpha={row.alpha:g} gamma={row.gamma_label} N={row.N} M={row.M} "
          f"E1={row.E1:.4e} ({row.seconds:.1f}s)", file=sys.stderr, flush=True)


def cmd_run(args) -> int:
    import json
    data = json.loads(Path(args.config).read_text())
    data = _resolve_m(data, args.paper_scale)
    config = ExperimentConfig.from_dict(data).override(**_overrides(args))
    table = run_convergence_study(config, progress=None if args.quiet else _progress)
    for p in write_outputs(table, config):
        print(f"wrote {p}")
    fmt = config.output.formats[0] if config.output.formats else "markdown"
    print(format_table(table, fmt))
    return _exit_code(table)


def comparison_lines(table, ref: reference.RefTable) -> list:
    """Measured vs reference E1 and orders, one line per cell."""
    lines = []
    for col in ref.columns:
        label = gamma_label(col.gamma)
        for i, k in enumerate(ref.sweep):
            N, M = (k, ref.M[0]) if ref.direction == "temporal" else (ref.N[0], k)
            row = next((r for r in table.rows if r.gamma_label == label and r.N == N), None) \
                if ref.direction == "temporal" else \
                next((r for r in table.rows if r.gamma_label == label and r.M == M), None)
            if row is None:
                continue
            rel = abs(row.E1 - col.E1[i]) / col.E1[i]
            o_ref = "*" if col.orders[i] is None else f"{col.orders[i]:.2f}"
            o_got = "*" if row.order is None else f"{row.order:.2f}"
            lines.append(f"gamma={label:<10} {'N' if ref.direction == 'temporal' else 'M'}={k:<4} "
                         f"E1={row.E1:.4e} ref={col.E1[i]:.4e} rel={rel:6.2%} "
                         f"order={o_got} ref_order={o_ref}")
    return lines


def cmd_reproduce(args) -> int:
    ref = reference.table(args.table)
    data = reference.config_dict(args.table, PAPER_M if args.paper_scale else DESK_M,
                                 Ns=args.N)
    formats = list(dict.fromkeys([args.format or "markdown", "csv"]))
    data["output"] = {"dir": args.out or "results", "formats": formats}
    config = ExperimentConfig.from_dict(data).override(**_overrides(args))
    table = run_convergence_study(config, progress=None if args.quiet else _progress)
    for p in write_outputs(table, config):
        print(f"wrote {p}")
    print(format_table(table, "markdown"))
    note = "" if ref.direction == "spatial" or args.paper_scale else \
        f" (reference used M={PAPER_M}, this run M={DESK_M})"
    print(f"comparison with reference table {ref.number}{note}:")
    for line in comparison_lines(table, ref):
        print("  " + line)
    return _exit_code(table)


def cmd_verify(args) -> int:
    names = args.suite or list(verify.SUITES)
    quick = {"kernels": {"n_meshes": 100}, "inequality": {"n_trials": 1000}}
    ok = True
    for name in names:
        fn = verify.SUITES[name]
        res = fn(**(quick.get(name, {}) if args.quick else {}))
        print(res.line(), flush=True)
        for note in res.notes[:5]:
            print(f"    {note}")
        ok &= res.passed
    return EXIT_OK if ok else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracstep", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--paper-scale", action="store_true",
                        help=f"use M={PAPER_M} instead of {DESK_M} for temporal studies")
        sp.add_argument("--kernel", choices=["soe", "direct"])
        sp.add_argument("--format", choices=["csv", "markdown"])
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--norm", choices=["semi", "h1"], help="norm used for E1")
        sp.add_argument("--quiet", action="store_true")

    r = sub.add_parser("run", help="run a convergence study from a JSON config")
    r.add_argument("--config", required=True)
    common(r)
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("reproduce", help="regenerate one of the reference tables")
    rp.add_argument("--table", type=int, required=True, choices=range(1, 10))
    rp.add_argument("--N", type=int, nargs="+", help="override the N sweep")
    common(rp)
    rp.set_defaults(func=cmd_reproduce)

    v = sub.add_parser("verify", help="run the kernel, inequality and coefficient property suites")
    v.add_argument("--quick", action="store_true", help="fewer random trials")
    v.add_argument("--suite", nargs="+", choices=sorted(verify.SUITES))
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FracstepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
