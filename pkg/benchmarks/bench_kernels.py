#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from lanekit._kernels import _fallback

try:
    from lanekit._kernels import _native
except ImportError:
    _native = None


def timeit(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def make_cases(rng):
    segs = rng.uniform(0, 100, (400, 4))
    edt_mask = rng.random((512, 512)) < 0.002
    x = rng.normal(0, 50, (2000, 2))
    y = rng.normal(0, 50, (2500, 2))
    thin_mask = np.zeros((256, 256), dtype=np.uint8)
    for x1, y1, x2, y2 in rng.uniform(10, 245, (40, 4)):
        n = 300
        rr = np.clip(np.linspace(y1, y2, n).astype(int), 0, 255)
        cc = np.clip(np.linspace(x1, x2, n).astype(int), 0, 255)
        thin_mask[rr, cc] = 1
        thin_mask[np.clip(rr + 1, 0, 255), cc] = 1
        thin_mask[rr, np.clip(cc + 1, 0, 255)] = 1
    return [
        ("segment_distance_field (512x512, 400 segs)",
         "segment_distance_field", (segs, 512, 512, 0.0, 0.0, 0.2, 0.9)),
        ("edt_sq (512x512)", "edt_sq", (edt_mask,)),
        ("chamfer_sq (2000 x 2500)", "chamfer_sq", (x, y)),
        ("zhang_suen (256x256 strokes)", "zhang_suen", (thin_mask,)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    cases = make_cases(rng)
    name_w = max(len(label) for label, _, _ in cases)
    print(f"{'kernel':<{name_w}}  {'fallback':>10}  {'native':>10}  {'speedup':>8}")
    print("-" * (name_w + 34))
    for label, fn_name, fn_args in cases:
        t_fb, out_fb = timeit(getattr(_fallback, fn_name), *fn_args,
                              repeats=args.repeats)
        if _native is None:
            print(f"{label:<{name_w}}  {t_fb * 1e3:>8.1f}ms  {'n/a':>10}  {'n/a':>8}")
            continue
        t_nat, out_nat = timeit(getattr(_native, fn_name), *fn_args,
                                repeats=args.repeats)
        if isinstance(out_fb, tuple):
            agree = all(np.allclose(a, b, equal_nan=True)
                        for a, b in zip(out_fb, out_nat))
        else:
            agree = np.allclose(out_fb, out_nat, equal_nan=True)
        flag = "" if agree else "  MISMATCH"
        print(f"{label:<{name_w}}  {t_fb * 1e3:>8.1f}ms  {t_nat * 1e3:>8.1f}ms"
              f"  {t_fb / t_nat:>7.1f}x{flag}")


if __name__ == "__main__":
    main()
