"""Compare the compiled and pure-Python trace-checking kernels.

    python bench/bench_checker.py [--traces N] [--length L] [--repeat R]

Every rule schema is checked on the same random traces with each available
kernel; the script prints the best time per kernel and the speed-up.
"""

import argparse
import random
import time

from secadt import _backend
from secadt.diagram import RULES
from secadt.ltl import check_many

SYMBOLS = ("a", "b", "c", "d", "e", "noise")


def traces(n, length, seed=0):
    rng = random.Random(seed)
    return [[rng.choice(SYMBOLS) for _ in range(rng.randint(length // 2, length))] for _ in range(n)]


def run(kernel, formulas, batch):
    return [check_many(f, batch, kernel) for f in formulas]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traces", type=int, default=2000)
    ap.add_argument("--length", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    batch = traces(args.traces, args.length)
    formulas = [schema.instantiate().formula for schema in RULES.values()]
    events = sum(map(len, batch)) * len(formulas)

    timings, answers = {}, {}
    for kernel in _backend.available():
        best = float("inf")
        for _ in range(args.repeat):
            start = time.perf_counter()
            answers[kernel] = run(kernel, formulas, batch)
            best = min(best, time.perf_counter() - start)
        timings[kernel] = best
        print(f"{kernel:>7}: {best * 1000:9.1f} ms  ({events / best / 1e6:6.2f} M events/s)")

    if len(set(map(repr, answers.values()))) > 1:
        raise SystemExit("kernels disagree")
    if {"python", "cython"} <= timings.keys():
        print(f"speed-up: {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
