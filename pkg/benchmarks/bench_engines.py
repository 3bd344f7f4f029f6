"""Wall-clock comparison of the compiled and pure-Python engines.

    python3 benchmarks/bench_engines.py [--repeat 3]

Each workload runs on both engines with the same seed; the outputs are
compared for equality before timings are reported.
"""

import argparse
import time

import numpy as np

from cookiewalk import engine, oracle
from cookiewalk.branching import sample_A_batch
from cookiewalk.profile import CookieProfile
from cookiewalk.walk import run_replicas

W = CookieProfile([0.9, 0.9], 0.3)

WORKLOADS = {
    # each callable takes an engine name
    "hit T_-20, 2000 replicas": lambda e: run_replicas(W, 1, 2000, 10**6, lower=-20, track_k=20, engine=e),
    "fixed horizon 1e4, 200 replicas": lambda e: run_replicas(W, 2, 200, 10**4, engine=e),
    "A_j draws, j=5, 1e5 draws": lambda e: sample_A_batch(CookieProfile([0.9, 0.6], 0.7), 5, 10**5, seed=3, engine=e),
    "enumerate t=16": lambda e: oracle.enumerate_paths(W, 16, engine=e).probs,
}


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def same(a, b):
    if isinstance(a, dict):
        return all(np.array_equal(a[k], b[k], equal_nan=True) for k in a)
    return np.array_equal(a, b)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    names = sorted(engine.available())
    if "cython" not in names:
        print("compiled engine not built; only the Python engine is available")
    print(f"{'workload':36s} " + " ".join(f"{n:>10s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, work in WORKLOADS.items():
        timings, outputs = {}, {}
        for name in names:
            timings[name], outputs[name] = best_of(lambda: work(name), args.repeat if name == "cython" else 1)
        row = f"{label:36s} " + " ".join(f"{timings[n]:9.3f}s" for n in names)
        if len(names) > 1:
            assert same(outputs["cython"], outputs["python"]), f"engines disagree on {label}"
            row += f"  {timings['python'] / timings['cython']:8.0f}x"
        print(row)


if __name__ == "__main__":
    main()
