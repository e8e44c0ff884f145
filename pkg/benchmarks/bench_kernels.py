#!/usr/bin/env python3
"""Benchmark the compiled mixture kernels against the numpy fallback.

Shapes mirror the hot paths: the static-experiment metric evaluates a
~1250-component 2-D posterior mixture at tens of thousands of grid nodes, and
the sequential EM objective evaluates a 2500-component 40-D mixture at a few
dozen samples.

Run:  python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

import mfgmf._kernels_py as kernels_py

try:
    import mfgmf._kernels as kernels_c
except ImportError:
    kernels_c = None


def make_mixture(n_comp, n_groups, dim, spread, seed):
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=1.0, size=(n_comp, dim))
    raw = rng.normal(size=(n_groups, dim, dim)) * spread
    covs = np.einsum("gij,gkj->gik", raw, raw) + (spread**2) * np.eye(dim)
    chol = np.linalg.cholesky(covs)
    half_logdet = np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    cov_index = np.repeat(np.arange(n_groups), n_comp // n_groups).astype(np.int64)
    logw = np.log(np.full(n_comp, 1.0 / n_comp))
    weights = np.full(n_comp, 1.0 / n_comp)
    return means, cov_index, chol, half_logdet, logw, weights


def bench(label, fn, repeat):
    fn()  # warmup
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    best = min(times)
    print(f"  {label:28s} {best * 1e3:9.2f} ms")
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    cases = []

    means, idx, chol, hld, logw, w = make_mixture(1250, 25, 2, 0.3, 0)
    points = np.ascontiguousarray(np.random.default_rng(1).normal(size=(40_000, 2)) * 2)
    cases.append(("logpdf 2-D  40k pts x 1250 comps", lambda impl: impl.gm_logpdf_points(
        points, means, idx, chol, hld, logw)))

    means40, idx40, chol40, hld40, logw40, _ = make_mixture(2500, 25, 40, 0.1, 2)
    pts40 = np.ascontiguousarray(np.random.default_rng(3).normal(size=(25, 40)))
    cases.append(("logpdf 40-D 25 pts x 2500 comps", lambda impl: impl.gm_logpdf_points(
        pts40, means40, idx40, chol40, hld40, logw40)))

    cases.append(("density grid 601^2 x 1250 comps", lambda impl: impl.accumulate_density_2d(
        means, idx, chol, hld, w, -6.0, 0.015, 601, -4.5, 0.015, 601, 8.0)))

    for label, runner in cases:
        print(label)
        py_time = bench("numpy fallback", lambda: runner(kernels_py), args.repeat)
        if kernels_c is not None:
            c_time = bench("compiled", lambda: runner(kernels_c), args.repeat)
            print(f"  {'speedup':28s} {py_time / c_time:9.1f} x")
        else:
            print("  compiled kernels not built")
        print()


if __name__ == "__main__":
    main()
