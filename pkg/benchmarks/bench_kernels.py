"""Compare the compiled kernel backend against the numpy reference.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from h2v._kernels import reference

try:
    from h2v._kernels import _native as native
except ImportError:
    native = None


def _time(fn, args, repeat: int) -> float:
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(rng: np.random.Generator):
    x = rng.standard_normal((4, 8, 32, 32))
    cols = reference.im2col(x, 3, 3, 1, 1)
    fmap = rng.standard_normal((1, 10, 8, 8))
    rois = np.array(
        [[0.0, rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(4, 8), rng.uniform(4, 8)]
         for _ in range(16)]
    )
    grad = rng.standard_normal((16, 10, 14, 14))
    image = rng.standard_normal((240, 320))
    template = rng.standard_normal((24, 16))
    return [
        ("im2col 4x8x32x32 k3", "im2col", (x, 3, 3, 1, 1)),
        ("col2im 4x8x32x32 k3", "col2im", (cols, 8, 32, 32, 3, 3, 1, 1)),
        ("roi_align fwd 16 rois", "roi_align_forward", (fmap, rois, 14, 14, 2)),
        ("roi_align bwd 16 rois", "roi_align_backward", (grad, rois, 1, 10, 8, 8, 2)),
        ("ncc 320x240 t16x24", "ncc_match", (image, template, 0, 0, 304, 216)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    for label, name, case_args in _cases(rng):
        ref_t = _time(getattr(reference, name), case_args, args.repeat)
        if native is not None:
            nat_t = _time(getattr(native, name), case_args, args.repeat)
            rows.append((label, ref_t, nat_t, ref_t / nat_t))
        else:
            rows.append((label, ref_t, None, None))

    print(f"{'kernel':<26} {'numpy ms':>10} {'native ms':>10} {'speedup':>8}")
    for label, ref_t, nat_t, speedup in rows:
        if nat_t is None:
            print(f"{label:<26} {ref_t * 1e3:>10.3f} {'-':>10} {'-':>8}")
        else:
            print(f"{label:<26} {ref_t * 1e3:>10.3f} {nat_t * 1e3:>10.3f} "
                  f"{speedup:>7.1f}x")
    if native is None:
        print("\ncompiled extension not built; only the reference backend ran")


if __name__ == "__main__":
    main()
