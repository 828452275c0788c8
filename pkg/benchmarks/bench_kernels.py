"""Compare the compiled and numpy backends of the block weight kernels.

Times ``weighted_sums`` (the objective's inner loop) and ``block_solve`` on
simulated datasets of increasing size, then a full REML fit with each backend
swapped in. Checks both backends agree before timing anything.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 20,200,2000]
"""

import argparse
import time
import timeit
from unittest import mock

import numpy as np

from mlmeta import kernels
from mlmeta.core import reml_fit
from mlmeta.dataset_io import simulate_dataset


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--sizes", default="20,200,2000", help="comma-separated study counts")
    args = parser.parse_args(argv)

    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled backend not built; only the numpy fallback is available")
    names = sorted(impls)
    print(f"{'studies':>8} {'trials':>7} {'kernel':<14}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")

    for h in (int(s) for s in args.sizes.split(",")):
        ds, _ = simulate_dataset(h, (1, 8), (50, 2000), seed=h)
        X = np.column_stack([np.ones(ds.m), np.linspace(0.0, 1.0, ds.m)])
        R = np.eye(ds.m)[:, : min(ds.m, 64)]
        ref = [kernels.weighted_sums(ds.v, ds.starts, 0.01, 0.02, X, ds.theta, impl=n)[0] for n in names]
        assert all(np.allclose(r, ref[0], rtol=1e-12, atol=0.0) for r in ref), "backends disagree"

        cases = {
            "weighted_sums": lambda n: kernels.weighted_sums(ds.v, ds.starts, 0.01, 0.02, X, ds.theta, impl=n),
            "block_solve": lambda n: kernels.block_solve(ds.v, ds.starts, 0.01, 0.02, R, impl=n),
        }
        for label, call in cases.items():
            times = {n: best_of(lambda n=n: call(n), args.repeat) for n in names}
            print(_row(h, ds.m, label, names, times))

        times = {}
        for n in names:
            with mock.patch.object(kernels, "_impl", impls[n]):
                start = time.perf_counter()
                reml_fit(ds)
                times[n] = time.perf_counter() - start
        print(_row(h, ds.m, "reml_fit", names, times))


def _row(h, m, label, names, times):
    cells = "".join(f"{times[n] * 1e3:>10.3f}ms" for n in names)
    speed = f"{times['python'] / times['cython']:>9.1f}x" if "cython" in times else f"{'-':>10}"
    return f"{h:>8} {m:>7} {label:<14}{cells}{speed}"


if __name__ == "__main__":
    main()
