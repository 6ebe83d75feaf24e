"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel at training-relevant sizes and prints a table of
best-of-N wall times.  The backends are imported directly, so this ignores
SKELDIFF_KERNELS; BLAS pools are pinned exactly like a normal run.

    python3 benchmarks/bench_kernels.py [--reps 30]
"""

import argparse
import time

import numpy as np

from skeldiff._threads import apply_thread_policy

apply_thread_policy()

from skeldiff.kernels import numba_impl, numpy_impl  # noqa: E402


def best_of(fn, reps, groups=5):
    fn()  # warmup / JIT
    per = max(reps // groups, 1)
    best = float("inf")
    for _ in range(groups):
        t0 = time.perf_counter()
        for _ in range(per):
            fn()
        best = min(best, (time.perf_counter() - t0) / per)
    return best


def cases():
    rng = np.random.default_rng(0)
    sizes = [
        ("single seq  C=32 T=60 W=12", (32, 60, 12), 7, 2),
        ("batch of 8  C=32 T=60 W=96", (32, 60, 96), 7, 2),
        ("batch of 8  C=16 T=60 W=96", (16, 60, 96), 7, 1),
    ]
    for label, shape, k, dil in sizes:
        c = shape[0]
        f = rng.standard_normal(shape)
        w = rng.standard_normal((c, c, k)) * 0.2
        b = rng.standard_normal(c)
        g = rng.standard_normal(shape)
        yield (f"temporal_conv fwd {label}",
               lambda impl, f=f, w=w, b=b, d=dil:
               impl.temporal_conv_forward(f, w, b, d))
        yield (f"temporal_conv bwd {label}",
               lambda impl, f=f, w=w, g=g, d=dil:
               impl.temporal_conv_backward(f, w, d, g))
    f = rng.standard_normal((32, 60, 96))
    yield ("maxpool fwd  C=32 T=60 W=96",
           lambda impl, f=f: impl.maxpool_forward(f, 3))
    _, src = numpy_impl.maxpool_forward(f, 3)
    g = rng.standard_normal(f.shape)
    yield ("maxpool bwd  C=32 T=60 W=96",
           lambda impl, src=src, g=g: impl.maxpool_backward(src, g))
    for ta, tb in ((60, 60), (400, 400)):
        cost = np.abs(rng.standard_normal((ta, tb)))
        yield (f"dtw accumulate {ta}x{tb}",
               lambda impl, c=cost: impl.dtw_accumulate(c))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=30)
    args = parser.parse_args()

    rows = []
    for label, call in cases():
        t_np = best_of(lambda: call(numpy_impl), args.reps)
        t_nb = best_of(lambda: call(numba_impl), args.reps)
        rows.append((label, t_np * 1e3, t_nb * 1e3, t_np / t_nb))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}} {'numpy ms':>10} {'numba ms':>10} "
          f"{'speedup':>8}")
    print("-" * (width + 31))
    for label, t_np, t_nb, ratio in rows:
        print(f"{label:<{width}} {t_np:>10.3f} {t_nb:>10.3f} {ratio:>7.2f}x")


if __name__ == "__main__":
    main()
