"""Timings of the reduced-index convolution variants and of the main bounds.

    python3 benchmarks/bench_convolution.py [--sizes 10 20 40] [--repeat 3]
"""

import argparse
import time
from fractions import Fraction

import numpy as np
from threadpoolctl import threadpool_limits

from shproof.bounds import compute_Z1_periodic
from shproof.d2seq import HAVE_COMPILED, D2Sequence, convolve, convolve_fast
from shproof.prover import build_BN
from shproof.shmodel import ModelParams, v0_of


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 40])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"compiled kernel: {HAVE_COMPILED}")
    print(f"{'size':>5} {'float':>10} {'interval':>10} {'fft':>10} {'B^N':>10} {'Z1':>10}  (seconds)")
    with threadpool_limits(args.threads):
        for n in args.sizes:
            decay = np.exp(-0.3 * np.add.outer(np.arange(n + 1), np.arange(n + 1)))
            U = D2Sequence(rng.standard_normal((n + 1, n + 1)) * decay, 20.0)
            Ui = U.to_interval()
            t_float = best_of(lambda: convolve(U, U), args.repeat)
            t_iv = best_of(lambda: convolve(Ui, Ui), args.repeat)
            t_fft = best_of(lambda: convolve_fast(U, U), args.repeat)
            N = n // 2
            p = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(20), N, n)
            t0 = time.perf_counter()
            B = build_BN(U, p)
            t_b = time.perf_counter() - t0
            V = v0_of(Ui, p).resize(2 * N)
            t0 = time.perf_counter()
            compute_Z1_periodic(V, B.mid, p)
            t_z1 = time.perf_counter() - t0
            print(f"{n:>5} {t_float:>10.4f} {t_iv:>10.4f} {t_fft:>10.4f} {t_b:>10.3f} {t_z1:>10.3f}")


if __name__ == "__main__":
    main()
