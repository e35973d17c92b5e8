"""Compare the compiled and pure-numpy steady-state kernels.

Usage: python3 benchmarks/bench_kernels.py [--points N] [--repeat R]

Solves one detuning point of a 500 nm cell (N velocity classes) with each
available backend and with batched LAPACK as an outside reference, then
reports timings and the largest disagreement between solutions.
"""

import argparse
import time

import numpy as np

from thincell import kernels
from thincell.atomic_model import TWO_PI_MHZ, FieldConfig, LevelScheme, build_family
from thincell.confinement import CellConfig, boltzmann_grid, wall_rate
from thincell.solver import TRACE_ROW, constrained_parts


def problem(n_points):
    mhz = TWO_PI_MHZ
    scheme = LevelScheme(delta2=67.5 * mhz, delta3=81.5 * mhz)
    fields = FieldConfig(omega_p=4 * mhz, omega_c_base=20 * mhz)
    cell = CellConfig(500e-9, 393.15)
    grid = boltzmann_grid(cell, n_points, rule="trapezoid")
    v = grid.points
    family = build_family(scheme, fields)
    coeffs = family.coefficients(-fields.k_p * v, fields.k_c * v, wall_rate(cell, v))
    return constrained_parts(family), coeffs


def lapack(parts, coeffs):
    M = np.einsum("np,pij->nij", coeffs, parts)
    b = np.zeros(M.shape[:2])
    b[:, TRACE_ROW] = 1.0
    return np.linalg.solve(M, b[..., None])[..., 0]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2001)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    parts, coeffs = problem(args.points)
    t_ref, x_ref = best_of(lambda: lapack(parts, coeffs), args.repeat)
    print(f"{'backend':<10}{'seconds':>10}{'us/solve':>10}{'max |dx|':>12}")
    print(f"{'lapack':<10}{t_ref:>10.4f}{1e6 * t_ref / args.points:>10.1f}{0.0:>12.1e}")
    for name in kernels.available_backends():
        t, (x, _, _) = best_of(
            lambda: kernels.solve_affine(parts, coeffs, TRACE_ROW, backend=name), args.repeat)
        err = np.abs(x - x_ref).max()
        print(f"{name:<10}{t:>10.4f}{1e6 * t / args.points:>10.1f}{err:>12.1e}")
    print(f"default backend: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
