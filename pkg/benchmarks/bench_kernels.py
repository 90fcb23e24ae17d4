"""Time the compiled and pure-Python Picard kernels on the benchmark contract.

Usage: python benchmarks/bench_kernels.py [--n 200] [--repeat 3]
"""

import argparse
import time

import numpy as np

from va_engine import kernels
from va_engine.boundary import TimeGrid, _plan, picard_solve
from va_engine.contract import ContractSpec
from va_engine.mortality import MortalityModel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    spec, mort = ContractSpec(), MortalityModel()
    grid = TimeGrid(spec.T, args.n)
    plan = _plan(spec, mort, grid, "trapezoid")
    b0 = 0.5 * (1.0 + (grid.times / spec.T) ** 2)
    names = ["python"] + (["cython"] if kernels.compiled is not None else [])

    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'task':<28}" + "".join(f"{n:>12}" for n in names) + f"{'speed-up':>12}")
    rows = [
        ("jacobi sweep", lambda name: kernels.backend(name).picard_sweep(
            b0, plan.hcap, *plan.arrays, gauss_seidel=False)),
        ("gauss-seidel sweep", lambda name: kernels.backend(name).picard_sweep(
            b0, plan.hcap, *plan.arrays, gauss_seidel=True)),
        ("full solve (gauss-seidel)", lambda name: picard_solve(
            spec, mort, grid, scheme="gauss-seidel", backend=name).values),
    ]
    for label, task in rows:
        timings, outs = [], []
        for name in names:
            t, out = best_of(lambda: task(name), args.repeat)
            timings.append(t)
            outs.append(np.asarray(out))
        speed = f"{timings[0] / timings[-1]:>11.1f}x" if len(names) == 2 else f"{'n/a':>12}"
        line = f"{label:<28}" + "".join(f"{t:>11.4f}s" for t in timings) + speed
        if len(outs) == 2:
            line += f"   max diff {float(np.max(np.abs(outs[0] - outs[1]))):.1e}"
        print(line)


if __name__ == "__main__":
    main()
