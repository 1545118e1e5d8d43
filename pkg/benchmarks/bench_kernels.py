#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the NumPy fallback.

Covers the three hot paths: NCC (single alignment, small sliding search,
corpus-scale sweep), windowed SSIM, and FNV-1a hashing. The expected
picture: compiled loops win the small, latency-critical cases; the FFT
path wins large sweeps (which is why the native ncc_map delegates them).

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from astra.kernels import numpy_backend

try:
    from astra.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats: int) -> float:
    fn()  # warm-up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats * 1000.0


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    frame_720p = rng.uniform(0, 255, (720, 1280))
    cue_region = rng.uniform(0, 255, (150, 320))
    cue = cue_region[3:-3, 3:-3].copy()  # small alignment slack
    strip = rng.uniform(0, 255, (170, 850))
    card = rng.uniform(0, 255, (80, 56))
    cards = [rng.uniform(0, 255, (80, 56)) for _ in range(16)]
    ssim_b = np.clip(frame_720p + rng.normal(0, 12, frame_720p.shape), 0, 255)
    blob = rng.integers(0, 256, 2_000_000).astype(np.uint8).tobytes()

    cases = [
        ("ncc single alignment (cue 314x144)",
         lambda be: be.ncc_at(cue_region, cue, 3, 3)),
        ("ncc small search (cue, 7x7 slack)",
         lambda be: be.ncc_map(cue_region, cue)),
        ("ncc strip sweep (850x170, 1 card)",
         lambda be: be.ncc_map(strip, card)),
        ("ncc strip sweep (16 cards, shared FFTs)",
         lambda be: be.ncc_map_many(strip, cards)),
        ("ssim 1280x720",
         lambda be: be.ssim_mean(frame_720p, ssim_b)),
        ("fnv1a64 over 2 MB",
         lambda be: be.fnv1a64(blob)),
    ]

    backends = [("numpy", numpy_backend)]
    if _native is not None:
        backends.append(("native", _native))
    else:
        print("note: compiled backend not built; showing numpy only\n")

    name_width = max(len(name) for name, _ in cases)
    header = "case".ljust(name_width) + "".join(f"  {n:>12}" for n, _ in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        times = [timeit(lambda be=be: call(be), args.repeats)
                 for _, be in backends]
        row = name.ljust(name_width) + "".join(f"  {t:>9.3f} ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
