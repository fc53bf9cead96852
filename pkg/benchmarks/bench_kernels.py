"""Benchmark the compiled stepping kernels against the NumPy fallback.

Times the raw 5-point stencil update, the batched tridiagonal sweep, and one
full validation-case run per scheme, for both backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from facade2d._kernels import pure
from facade2d.reference import validation_problem
from facade2d.solver import SolverConfig, make_stepper

try:
    from facade2d._kernels import _stencil as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_stencil(backend, ny, nx, repeat, inner=200):
    rng = np.random.default_rng(0)
    u = rng.normal(size=(ny, nx))
    up = rng.normal(size=(ny, nx))
    gy = np.zeros(ny)
    gx = np.zeros(nx)
    coeffs = [np.ascontiguousarray(rng.uniform(0.1, 0.3, size=(ny, nx)))
              for _ in range(6)]
    out = np.empty((ny, nx))

    def run():
        for _ in range(inner):
            backend.stencil_step(u, up, gy, gy, gx, gx, *coeffs, out)

    return best_of(run, repeat) / inner


def bench_thomas(backend, nsys, n, repeat, inner=50):
    rng = np.random.default_rng(1)
    dl = np.full((nsys, n), -1.0)
    du = np.full((nsys, n), -1.0)
    d = np.full((nsys, n), 4.0)
    b = rng.normal(size=(nsys, n))
    out = np.empty((nsys, n))

    def run():
        for _ in range(inner):
            backend.thomas_many(dl, d, du, b, out)

    return best_of(run, repeat) / inner


def bench_validation(scheme, dt_star, repeat):
    problem = validation_problem(101, 101, dt_star)
    n_steps = round(problem.t_final_star / dt_star)

    def run():
        stepper = make_stepper(problem, SolverConfig(scheme, dt_star))
        state = stepper.initial_state(problem.u0)
        while state.step < n_steps:
            state = stepper.step(state)

    return best_of(run, repeat)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = [("numpy", pure)]
    if compiled is not None:
        backends.insert(0, ("cython", compiled))
    else:
        print("compiled extension not available; timing the fallback only\n")

    print(f"{'kernel':<34}" + "".join(f"{name:>12}" for name, _ in backends))
    for label, fn, shape in (
        ("stencil_step 101x101 [us/step]", bench_stencil, (101, 101)),
        ("stencil_step 810x100 [us/step]", bench_stencil, (810, 100)),
        ("thomas_many 101x101 [us/sweep]", bench_thomas, (101, 101)),
    ):
        row = [fn(impl, *shape, args.repeat) * 1e6 for _, impl in backends]
        print(f"{label:<34}" + "".join(f"{v:>12.1f}" for v in row))

    print("\nvalidation case, full run wall time [s] (active backend:"
          f" {'cython' if compiled is not None else 'numpy'})")
    for scheme, dt in (("df", 1e-4), ("adi", 1e-4), ("implicit", 1e-4),
                       ("explicit", 1e-5)):
        wall = bench_validation(scheme, dt, args.repeat)
        print(f"  {scheme:<10} dt*={dt:g}: {wall:.3f}")
    print("\nset FACADE2D_KERNELS=python and re-run to time full runs on the"
          " fallback")


if __name__ == "__main__":
    main()
