"""Compiled vs NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--N 500] [--repeat 3]

Times the coefficient table, the complementary recursion and the SOE
accumulator update for both ``fracstep._ckernels`` and
``fracstep._kernels_py`` and checks that the results agree.
"""

import argparse
import timeit

import numpy as np
from scipy.special import gamma

from fracstep import _kernels_py as py_backend
from fracstep.kernels import soe_build
from fracstep.timegrid import build_graded

try:
    from fracstep import _ckernels as c_backend
except ImportError:  # extension not built
    c_backend = None


def cases(N, beta=0.7, gamma_=2.0 / 0.7, m=400 ** 2):
    mesh = build_graded(N, 1.0, gamma_, beta / 2)
    args = (mesh.nodes, mesh.theta, beta, N, gamma(2 - beta), gamma(1 - beta))
    table = np.asarray(py_backend.alikhanov_table(*args))
    soe = soe_build(beta, 1e-12, float(mesh.steps.min()), 1.0)
    rng = np.random.default_rng(0)
    U = rng.normal(size=(soe.n_terms, m))
    c1, c2 = rng.normal(size=m), rng.normal(size=m)

    def soe_step(mod):
        decay, e0, g = mod.soe_cell_weights(soe.nodes, float(mesh.steps[N // 2]))
        mod.soe_update(U, np.asarray(decay), np.asarray(e0), np.asarray(g), c1, c2)

    return {
        f"alikhanov_table N={N}": lambda mod: mod.alikhanov_table(*args),
        f"complementary_table N={N}": lambda mod: mod.complementary_table(table, N),
        f"soe_update {soe.n_terms} terms x m={m}": soe_step,
    }


def check_parity(N):
    mesh = build_graded(N, 1.0, 3.0, 0.35)
    args = (mesh.nodes, 0.35, 0.7, N, gamma(1.3), gamma(0.3))
    a = np.asarray(py_backend.alikhanov_table(*args))
    b = np.asarray(c_backend.alikhanov_table(*args))
    scale = np.abs(a).max()
    return float(np.abs(a - b).max() / scale)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if c_backend is None:
        print("compiled extension not available; only the NumPy backend can run")
    print(f"{'kernel':<40} {'numpy [s]':>10} {'cython [s]':>11} {'speed-up':>9}")
    for name, fn in cases(args.N).items():
        t_py = min(timeit.repeat(lambda: fn(py_backend), number=1, repeat=args.repeat))
        if c_backend is None:
            print(f"{name:<40} {t_py:10.4f} {'-':>11} {'-':>9}")
            continue
        t_c = min(timeit.repeat(lambda: fn(c_backend), number=1, repeat=args.repeat))
        print(f"{name:<40} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:8.1f}x")
    if c_backend is not None:
        print(f"max relative difference of the coefficient tables: {check_parity(64):.2e}")


if __name__ == "__main__":
    main()
