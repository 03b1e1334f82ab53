"""Timing comparison of the compiled kernels vs the numpy fallback.

Run:  python3 benchmarks/bench_backends.py [--repeats 5]

Times conv2d and maxpool2d, forward and backward, on a few shapes drawn
from the sizes the attack actually uses, and prints a per-kernel table
with the speedup of the compiled path. Works with only the numpy backend
built (the compiled column just reads n/a).
"""

import argparse
import importlib
import time

import numpy as np

from mmattack.backend import numpy_kernels as npk

try:
    ck = importlib.import_module("mmattack.backend._ck")
except ImportError:
    ck = None

SHAPES = [
    # (name, x shape, w shape, pool kernel/stride)
    ("8x8 c1->8", (16, 1, 8, 8), (8, 1, 3, 3), (2, 2)),
    ("16x16 c8->16", (16, 8, 16, 16), (16, 8, 3, 3), (2, 2)),
    ("28x28 c1->8", (8, 1, 28, 28), (8, 1, 3, 3), (2, 2)),
]


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_impl(impl, x, w, b, dout, pool_k, pool_s, repeats):
    rows = {}
    rows["conv fwd"] = _best_of(lambda: impl.conv2d_forward(x, w, b, 1, 1), repeats)
    rows["conv bwd"] = _best_of(lambda: impl.conv2d_backward(x, w, dout, 1, 1), repeats)
    out, idx = impl.maxpool2d_forward(x, pool_k, pool_s)
    pdout = np.asarray(out).copy()
    idx = np.asarray(idx)
    rows["pool fwd"] = _best_of(lambda: impl.maxpool2d_forward(x, pool_k, pool_s), repeats)
    rows["pool bwd"] = _best_of(
        lambda: impl.maxpool2d_backward(idx, pdout, x.shape[2], x.shape[3]), repeats
    )
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'case':<16} {'kernel':<10} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, xs, ws, (pk, ps) in SHAPES:
        x = rng.standard_normal(xs)
        w = rng.standard_normal(ws)
        b = rng.standard_normal(ws[0])
        dout = np.asarray(npk.conv2d_forward(x, w, b, 1, 1)).copy()
        np_rows = _bench_impl(npk, x, w, b, dout, pk, ps, args.repeats)
        ck_rows = (_bench_impl(ck, x, w, b, dout, pk, ps, args.repeats)
                   if ck is not None else None)
        for kernel, tn in np_rows.items():
            if ck_rows is None:
                print(f"{name:<16} {kernel:<10} {tn * 1e3:>8.3f}ms {'n/a':>10} {'':>8}")
            else:
                tc = ck_rows[kernel]
                print(f"{name:<16} {kernel:<10} {tn * 1e3:>8.3f}ms {tc * 1e3:>8.3f}ms "
                      f"{tn / tc:>7.2f}x")


if __name__ == "__main__":
    main()
