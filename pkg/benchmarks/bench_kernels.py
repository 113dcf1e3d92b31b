"""Compare the compiled kernels with the numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends must produce identical output; the script checks that
before reporting timings.
"""

import argparse
import time

import numpy as np

from copocut import kernels


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _random_q(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    return np.ascontiguousarray((a + a.T) / 2)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if "compiled" not in kernels.BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    py, cc = kernels.get_backend("python"), kernels.get_backend("compiled")

    print(f"{'kernel':<28}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for n, sweeps, reads in [(8, 100, 1000), (15, 100, 1000), (30, 100, 200)]:
        q = _random_q(n, n)
        betas = np.geomspace(0.1, 10.0, sweeps)
        tp, sp = _time(lambda: py.anneal(q, betas, 7, reads, 0), args.repeat)
        tc, sc = _time(lambda: cc.anneal(q, betas, 7, reads, 0), args.repeat)
        assert np.array_equal(sp, sc), "backends disagree on anneal"
        print(f"{f'anneal n={n} x{reads}':<28}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")
    for n in (12, 16, 20):
        q = _random_q(n, n)
        tp, (cp, _) = _time(lambda: py.enumerate_min(q, 1e-9), args.repeat)
        tc, (ccodes, _) = _time(lambda: cc.enumerate_min(q, 1e-9), args.repeat)
        assert set(cp.tolist()) == set(ccodes.tolist()), "backends disagree on enumerate_min"
        print(f"{f'enumerate n={n}':<28}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
