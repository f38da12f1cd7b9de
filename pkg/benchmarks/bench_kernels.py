"""Compare the compiled and pure-NumPy per-pixel temporal kernels.

Usage::

    python benchmarks/bench_kernels.py [--frames 200] [--height 240] [--width 320]
                                       [--repeat 3] [--threads 1 2 4]

Prints the best wall-clock time of each backend and checks that both return
identical images.
"""

from __future__ import annotations

import argparse
import logging
import time

import numpy as np

from dmdbg import kernels

logger = logging.getLogger("bench_kernels")


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--frames", type=int, default=200)
    parser.add_argument("--height", type=int, default=240)
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--threads", type=int, nargs="+", default=[1])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rng = np.random.default_rng(args.seed)
    stack = rng.integers(0, 256, size=(args.frames, args.height * args.width * 3), dtype=np.uint8)
    logger.info("stack: %d frames x %dx%dx3 (%.1f MB)", args.frames, args.height, args.width, stack.nbytes / 1e6)

    try:
        from dmdbg import _kernels as compiled
    except ImportError:
        compiled = None
        logger.info("compiled kernels not built; timing the NumPy fallback only")

    for name, py_fn in (("temporal_mode", kernels.py_temporal_mode), ("lower_median", kernels.py_lower_median)):
        ref = py_fn(stack)
        t_py = best_of(lambda: py_fn(stack), args.repeat)
        logger.info("%-14s python           %8.3f s", name, t_py)
        if compiled is None:
            continue
        c_fn = getattr(compiled, name)
        for threads in args.threads:
            if not np.array_equal(c_fn(stack, threads), ref):
                raise SystemExit(f"{name}: compiled result differs from the fallback")
            t_c = best_of(lambda: c_fn(stack, threads), args.repeat)
            logger.info("%-14s cython threads=%-2d %8.3f s  (%.1fx)", name, threads, t_c, t_py / t_c)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
