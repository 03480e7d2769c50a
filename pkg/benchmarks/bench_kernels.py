"""Time the compiled kernels against the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py`` for the full sizes or add
``--quick`` for a few-second check. Each case reports the best of
``--repeat`` runs per backend and the speedup over the fallback.
"""

import argparse
import json
import sys
import time

import numpy as np

from htsurrogate import _backend


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(quick: bool):
    rng = np.random.default_rng(0)
    n_train, epochs = (200, 5) if quick else (915, 200)
    X = rng.uniform(0.1, 0.9, (n_train, 6))
    t = rng.uniform(0.1, 0.9, n_train)
    W0, b0, v0 = rng.uniform(-0.5, 0.5, (7, 6)), rng.uniform(-0.5, 0.5, 7), rng.uniform(-0.5, 0.5, 7)
    orders = np.stack([rng.permutation(n_train) for _ in range(epochs)]).astype(np.intp)

    def train(k):
        k.mlfn_train(X, t, W0.copy(), b0.copy(), v0.copy(), np.array([0.1]), 0.9, 0.9, orders)

    Q = rng.uniform(0, 1, (10_000 if quick else 100_000, 6))

    def forward(k):
        k.mlfn_forward_batch(Q, W0, b0, v0, 0.1)

    E = rng.uniform(0.1, 0.9, (n_train, 6))
    G = Q[: 2_000 if quick else 20_000]

    def grnn(k):
        k.grnn_predict_batch(G, E, t, 0.1)

    return [
        (f"mlfn train {n_train}x6, 7 hidden, {epochs} epochs", train),
        (f"mlfn forward {Q.shape[0]} rows", forward),
        (f"grnn predict {G.shape[0]} queries, {n_train} exemplars", grnn),
    ]


def run(quick=False, repeat=3, backends=None):
    backends = backends or sorted(_backend.AVAILABLE)
    results = []
    for name, fn in cases(quick):
        row = {"case": name}
        for b in backends:
            k = _backend.load(b)
            row[b] = _best(lambda: fn(k), repeat)
        if "python" in row and "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        results.append(row)
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="small sizes for a smoke run")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", action="store_true", help="print machine-readable results")
    args = parser.parse_args(argv)
    results = run(args.quick, args.repeat)
    if args.json:
        print(json.dumps(results, indent=1))
        return 0
    for row in results:
        timings = "  ".join(f"{b}={row[b]:.4f}s" for b in sorted(_backend.AVAILABLE))
        extra = f"  speedup x{row['speedup']:.1f}" if "speedup" in row else ""
        print(f"{row['case']:<48} {timings}{extra}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
