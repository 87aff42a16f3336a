"""Benchmark the compiled training kernel against the numpy fallback.

Runs the same epochs on identical copies of a synthetic workload and
checks that both backends leave bit-identical automata and weights
before reporting timings.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --samples 2000 --epochs 3
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tmxbar import _kernels_py  # noqa: E402
from tmxbar.logic import pack_bits  # noqa: E402
from tmxbar.rng import derive_seed, mix64_pair, stream  # noqa: E402
from tmxbar.train import init_parameters  # noqa: E402

try:
    from tmxbar import _kernels_cy
except ImportError:
    _kernels_cy = None


def make_workload(samples: int, features: int, classes: int, seed: int):
    gen = stream(seed, "bench", "data")
    raw = gen.random((samples, features)) < 0.25
    literals = np.hstack([raw, ~raw])
    labels = gen.integers(0, classes, size=samples, dtype=np.int32)
    return literals, labels


def run(backend, literals, labels, *, clauses, t, s, epochs, seed):
    state, weights = init_parameters(clauses, literals.shape[1],
                                     int(labels.max()) + 1, seed)
    actions_packed = np.ascontiguousarray(pack_bits(state > 128))
    x_packed = np.ascontiguousarray(pack_bits(literals))
    x_bool = np.ascontiguousarray(literals.astype(np.uint8))
    thr_up = _kernels_py.float_threshold((s - 1.0) / s)
    thr_dn = _kernels_py.float_threshold(1.0 / s)
    run_key = derive_seed(seed, "train", "events")

    seconds = []
    for epoch in range(epochs):
        order = stream(seed, "train", "order", epoch).permutation(
            len(labels)).astype(np.int64)
        started = time.perf_counter()
        backend.train_epoch(state, actions_packed, weights,
                            x_packed, x_bool, labels, order,
                            t, thr_up, thr_dn, mix64_pair(run_key, epoch))
        seconds.append(time.perf_counter() - started)
    return state, weights, seconds


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--features", type=int, default=784)
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--clauses", type=int, default=500)
    ap.add_argument("--t", type=int, default=625)
    ap.add_argument("--s", type=float, default=10.0)
    ap.add_argument("--epochs", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    literals, labels = make_workload(args.samples, args.features,
                                     args.classes, args.seed)
    presentations = args.samples * args.epochs
    kw = dict(clauses=args.clauses, t=args.t, s=args.s,
              epochs=args.epochs, seed=args.seed)
    print(f"workload: {args.samples} samples x {literals.shape[1]} literals, "
          f"{args.clauses} clauses, {args.classes} classes, "
          f"{args.epochs} epochs")

    state_py, weights_py, sec_py = run(_kernels_py, literals, labels, **kw)
    py_rate = presentations / sum(sec_py)
    print(f"python  : {sum(sec_py):8.2f} s "
          f"({py_rate:8.0f} presentations/s)")

    if _kernels_cy is None:
        print("compiled: not built (pip install -e . to compile)")
        return

    state_cy, weights_cy, sec_cy = run(_kernels_cy, literals, labels, **kw)
    cy_rate = presentations / sum(sec_cy)
    print(f"compiled: {sum(sec_cy):8.2f} s "
          f"({cy_rate:8.0f} presentations/s)")
    print(f"speedup : {sum(sec_py) / sum(sec_cy):8.1f}x")

    if not (np.array_equal(state_py, state_cy)
            and np.array_equal(weights_py, weights_cy)):
        raise SystemExit("BACKEND MISMATCH: results are not bit-identical")
    print("backends bit-identical: yes")


if __name__ == "__main__":
    main()
