"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 256 1024 2048] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from psihilfer import _kernels_py as pure

try:
    from psihilfer import _kernels as compiled
except ImportError:
    compiled = None


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 2048])
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; only the fallback is available")

    print(f"{'kernel':<12}{'n':>6}{'pure [s]':>12}{'compiled [s]':>14}{'speedup':>9}{'max diff':>11}")
    for n in args.sizes:
        u = np.log(np.linspace(1.0, np.e, n + 1))
        f = np.sin(5 * u)
        for name in ("rl_weights", "rl_apply"):
            call = (lambda m: (lambda: m.rl_weights(u, args.alpha))) if name == "rl_weights" else (lambda m: (lambda: m.rl_apply(u, f, args.alpha)))
            tp = best(call(pure), args.repeat)
            if compiled is None:
                print(f"{name:<12}{n:>6}{tp:>12.4f}{'-':>14}{'-':>9}{'-':>11}")
                continue
            tc = best(call(compiled), args.repeat)
            diff = float(np.max(np.abs(call(pure)() - call(compiled)())))
            print(f"{name:<12}{n:>6}{tp:>12.4f}{tc:>14.4f}{tp / tc:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
