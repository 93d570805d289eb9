"""Time each hot kernel on the compiled and pure-NumPy backends.

Run from the repository root after an editable install:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --repeat 200 --rows 4096
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from brainalign import _kernels_np as np_backend

try:
    from brainalign import _kernels as cy_backend
except ImportError:
    cy_backend = None


def _time(fn, args, repeat: int) -> float:
    fn(*args)  # warm up / JIT caches out of the measurement
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(rows: int, seed: int) -> list[tuple[str, tuple]]:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(rows, 64))
    g = rng.normal(size=(rows, 64))
    grid = rng.normal(size=(64, 64, 16))
    v = rng.normal(size=(rows, 64))
    eps = rng.normal(size=(rows, 64))
    sa = rng.uniform(0.1, 1.0, size=rows)
    sb = np.sqrt(1.0 - sa**2)
    mask = rng.uniform(size=rows) > 0.5
    lo = rng.uniform(0, 0.5, size=(rows, 2))
    hi = lo + rng.uniform(0.1, 0.5, size=(rows, 2))
    boxes_a = np.hstack([lo, hi])
    boxes_b = boxes_a + rng.normal(scale=0.05, size=boxes_a.shape)
    boxes_b = np.hstack(
        [np.minimum(boxes_b[:, :2], boxes_b[:, 2:]), np.maximum(boxes_b[:, :2], boxes_b[:, 2:])]
    )
    p = rng.normal(size=rows * 64)
    gr = rng.normal(size=rows * 64)
    m = np.zeros_like(p)
    vel = np.zeros_like(p)
    return [
        ("silu", (x,)),
        ("silu_grad", (x, g)),
        ("pool2x2", (grid,)),
        ("corrupt_rows", (v, eps, sa, sb)),
        ("masked_sq_err", (v, mask)),
        ("iou_batch", (boxes_a, boxes_b)),
        ("adamw_update", (p, gr, m, vel, 5, 1e-3, 0.9, 0.95, 1e-8, 0.01)),
    ]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--rows", type=int, default=2048)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if cy_backend is None:
        print("compiled backend not built; run pip install -e . --no-build-isolation")
        return 1

    cases = build_cases(args.rows, args.seed)
    print(f"{'kernel':<14} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for name, call_args in cases:
        # adamw_update mutates its buffers; give each backend private copies
        np_args = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in call_args)
        cy_args = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in call_args)
        t_np = _time(getattr(np_backend, name), np_args, args.repeat)
        t_cy = _time(getattr(cy_backend, name), cy_args, args.repeat)
        print(f"{name:<14} {t_np * 1e6:>8.1f}us {t_cy * 1e6:>8.1f}us {t_np / t_cy:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
