"""Time the compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each line reports the best
of several repeats for both backends and the speedup.
"""
import argparse
import timeit

import numpy as np

from critreg import _pykernels as py
from critreg.denjoy import build_scheme
from critreg.mollifier import get_phi
from critreg.modulus import ConcaveModulus

try:
    from critreg import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def denjoy_arrays(nbumps: int):
    s = build_scheme(ConcaveModulus.hoelder(0.5), "golden", nbumps)
    order = np.argsort(s.positions)
    pos = np.ascontiguousarray(s.positions[order])
    length = np.ascontiguousarray(s.lengths[order])
    deficit = np.ascontiguousarray(0.5 * length)
    cumdef = np.ascontiguousarray(np.concatenate([[0.0], np.cumsum(deficit)]))
    return pos, length, deficit, cumdef


def cover_arrays(n: int, rng):
    lo = np.sort(rng.uniform(0.0, 100.0, n))
    hi = lo + rng.uniform(0.05, 0.5, n)
    return np.ascontiguousarray(lo), np.ascontiguousarray(np.maximum.accumulate(hi))


def cases(size: int, rng):
    phi = get_phi()
    x = rng.uniform(-0.1, 1.1, size)
    arrs = denjoy_arrays(200)
    dargs = (*arrs, phi.vals, phi.ders, phi.n)
    u = rng.uniform(0.0, 1.0, size)
    lo, pm = cover_arrays(size, rng)
    targets = rng.uniform(0.0, 90.0, 200)
    return {
        f"phi_eval[{size}]": lambda k: k.phi_eval(x, phi.vals, phi.ders, phi.n),
        f"denjoy_unit_eval[{size}]": lambda k: k.denjoy_unit_eval(u, *dargs),
        f"denjoy_orbit[{size} steps]": lambda k: k.denjoy_orbit(0, 0.123, size, 0.618, *dargs),
        "greedy_cover[200 targets]": lambda k: [k.greedy_cover(lo, pm, t, t + 5.0) for t in targets],
    }


def best_time(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 16:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension critreg._kernels is not available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'python [s]':>12s} {'compiled [s]':>13s} {'speedup':>9s}")
    for name, call in cases(args.size, rng).items():
        tp = best_time(lambda: call(py), args.repeat)
        tc = best_time(lambda: call(compiled), args.repeat)
        print(f"{name:32s} {tp:12.3e} {tc:13.3e} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
