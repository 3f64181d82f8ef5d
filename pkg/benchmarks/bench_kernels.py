"""Benchmark the metric kernels: numba JIT vs the pure numpy/Python fallback.

The backend is fixed at import time by RAGMCQ_KERNELS, so this script times
the current process under one backend and re-executes itself in a subprocess
for the other, then prints both side by side.

Usage: python benchmarks/bench_kernels.py [--pairs 2000] [--len 40]
"""

from __future__ import annotations

import argparse
import json
import os
import random
import subprocess
import sys
import time

import numpy as np


def make_pairs(n_pairs: int, max_len: int, vocab: int = 50, seed: int = 11):
    rng = random.Random(seed)
    pairs = []
    for _ in range(n_pairs):
        la = rng.randint(1, max_len)
        lb = rng.randint(1, max_len)
        a = np.array([rng.randrange(vocab) for _ in range(la)], dtype=np.int64)
        b = np.array([rng.randrange(vocab) for _ in range(lb)], dtype=np.int64)
        pairs.append((a, b))
    return pairs


def run_backend(n_pairs: int, max_len: int) -> dict:
    from ragmcq.metrics import kernels

    kernels.warm_up()
    pairs = make_pairs(n_pairs, max_len)
    w2 = np.array([0.5, 0.5])
    checksum = 0.0
    timings = {}

    def timed(name, fn):
        nonlocal checksum
        start = time.perf_counter()
        acc = 0.0
        for a, b in pairs:
            acc += fn(a, b)
        timings[name] = time.perf_counter() - start
        checksum += acc

    timed("lcs_len", lambda a, b: kernels.lcs_len(a, b))
    timed("ngram_match(n=2)", lambda a, b: kernels.ngram_match(a, b, 2))
    timed("meteor_score", lambda a, b: kernels.meteor_score(a, b))
    timed("rouge_l_prf", lambda a, b: kernels.rouge_l_prf(a, b, 1.0)[2])
    timed("bleu2", lambda a, b: kernels.bleu_single(a, b, w2, 0.0))
    return {"backend": kernels.BACKEND, "timings": timings, "checksum": checksum}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000, help="random sequence pairs per kernel")
    parser.add_argument("--len", dest="max_len", type=int, default=40, help="max tokens per sequence")
    parser.add_argument("--emit-json", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    mine = run_backend(args.pairs, args.max_len)
    if args.emit_json:
        print(json.dumps(mine))
        return

    other_backend = "numpy" if mine["backend"] == "numba" else "numba"
    env = dict(os.environ, RAGMCQ_KERNELS=other_backend)
    proc = subprocess.run(
        [sys.executable, __file__, "--pairs", str(args.pairs), "--len", str(args.max_len), "--emit-json"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    other = json.loads(proc.stdout.strip().splitlines()[-1])

    results = {mine["backend"]: mine, other["backend"]: other}
    if abs(mine["checksum"] - other["checksum"]) > 1e-6:
        print("WARNING: backends disagree on the workload checksum!")

    nb, py = results["numba"]["timings"], results["numpy"]["timings"]
    print(f"\n{args.pairs} random pairs, sequences up to {args.max_len} tokens\n")
    print(f"{'kernel':<18}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name in nb:
        speed = py[name] / nb[name] if nb[name] > 0 else float('inf')
        print(f"{name:<18}{nb[name]:>11.3f}s{py[name]:>11.3f}s{speed:>9.1f}x")


if __name__ == "__main__":
    main()
