"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from depsim import _kernels_py as kpy
from depsim.rng import log_uniforms, make_generator, normals

try:
    from depsim import _kernels as kc
except ImportError:
    kc = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def prepare(seed=0, n=6, m=200, d=2):
    gen = make_generator(seed)
    sph = np.ascontiguousarray(gen.uniform(-4, 4, size=(n, d)))
    par = np.ascontiguousarray(gen.uniform(-6, 6, size=(m, d)))
    kpy.project_contacts(sph, par, 2.0, 1.1, 1.0, 1.0, 200,
                         np.zeros((n, n)), np.zeros((n, m)))
    return gen, sph, par


def bench(repeat):
    gen, sph, par = prepare()
    n, d = sph.shape
    m = par.shape[0]
    noise_s = normals(gen, (1000, n, d))
    noise_p = normals(gen, (1000, m, d))
    prop = normals(gen, (n, d)) * 0.3
    logu = log_uniforms(gen, (n,))
    grad = np.zeros_like(sph)

    cases = {
        "overlap_energy_sum (n=6)": lambda k: (
            lambda: k.overlap_energy_sum(sph, 1.1, d)
        ),
        "overlap_gradient (n=6)": lambda k: (
            lambda: k.overlap_gradient(sph, 1.1, d, grad)
        ),
        "mh_sweep_depletion (n=6)": lambda k: (
            lambda: k.mh_sweep_depletion(sph.copy(), 8.0, 1.1, 2.0, 1.0, 0.0, prop, logu)
        ),
        "project_contacts (n=6, m=200)": lambda k: (
            lambda: k.project_contacts(sph.copy(), par.copy(), 2.0, 1.1, 1.0, 1.0, 100,
                                       np.zeros((n, n)), np.zeros((n, m)))
        ),
        "run_two_type_chunk (1000 steps)": lambda k: (
            lambda: k.run_two_type_chunk(sph.copy(), par.copy(),
                                         np.zeros((n, n)), np.zeros((n, m)),
                                         noise_s, noise_p, 4e-4, 1.0, 1.0, 0.5, 0.5,
                                         1.0, 3.0, 64.0, 6.0, 2.0, 1.1, 1.0, 100)
        ),
        "run_depletion_chunk (1000 steps)": lambda k: (
            lambda: k.run_depletion_chunk(sph.copy(), np.zeros((n, n)), noise_s,
                                          4e-4, 1.0, 10.0, 1.1, 2.0, 1.0, 0.0, 100)
        ),
    }

    print(f"{'kernel':36s} {'python':>12s} {'cython':>12s} {'speedup':>9s}")
    for name, make in cases.items():
        t_py = timeit(make(kpy), repeat)
        if kc is not None:
            t_c = timeit(make(kc), repeat)
            print(f"{name:36s} {t_py * 1e6:10.1f}us {t_c * 1e6:10.1f}us {t_py / t_c:8.1f}x")
        else:
            print(f"{name:36s} {t_py * 1e6:10.1f}us {'n/a':>12s} {'-':>9s}")
    if kc is None:
        print("\ncompiled extension not available; showing fallback timings only")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench(args.repeat)
