"""Per-pixel temporal statistics with a compiled fast path.

The Cython extension :mod:`dmdbg._kernels` is used when it imported
successfully; otherwise the vectorised NumPy versions below are used.
Setting ``DMDBG_KERNELS=python`` forces the fallback. Both backends return
identical arrays.
"""

from __future__ import annotations

import os

import numpy as np

from . import _threads

__all__ = ["BACKEND", "temporal_mode", "lower_median", "py_temporal_mode", "py_lower_median"]


def py_temporal_mode(stack: np.ndarray) -> np.ndarray:
    """Most frequent value along axis 0, smallest value on ties.

    Sorts each pixel history and measures run lengths; ``argmax`` picks the
    first run to reach the maximum length, which is the smallest value.
    """
    stack = _as_stack(stack)
    N = stack.shape[0]
    s = np.sort(stack, axis=0)
    steps = np.arange(N)[:, None]
    starts = np.ones(s.shape, dtype=bool)
    starts[1:] = s[1:] != s[:-1]
    run_start = np.maximum.accumulate(np.where(starts, steps, 0), axis=0)
    run_len = steps - run_start
    best = np.argmax(run_len, axis=0)
    return np.take_along_axis(s, best[None, :], axis=0)[0]


def py_lower_median(stack: np.ndarray) -> np.ndarray:
    stack = _as_stack(stack)
    k = (stack.shape[0] + 1) // 2 - 1
    return np.partition(stack, k, axis=0)[k]


def _as_stack(stack) -> np.ndarray:
    stack = np.asarray(stack)
    if stack.ndim != 2 or stack.dtype != np.uint8:
        raise TypeError(f"expected a 2-D uint8 array, got {stack.dtype} {stack.shape}")
    if stack.shape[0] < 1:
        raise ValueError("empty pixel history")
    return stack


try:
    if os.environ.get("DMDBG_KERNELS", "").lower() == "python":
        raise ImportError("compiled kernels disabled by DMDBG_KERNELS")
    from . import _kernels as _ext
except ImportError:
    _ext = None

BACKEND = "cython" if _ext is not None else "python"


def temporal_mode(stack: np.ndarray) -> np.ndarray:
    """Per-column temporal mode of a ``(N, P)`` uint8 stack."""
    if _ext is None:
        return py_temporal_mode(stack)
    stack = np.ascontiguousarray(_as_stack(stack))
    return _ext.temporal_mode(stack, _threads.max_threads())


def lower_median(stack: np.ndarray) -> np.ndarray:
    """Per-column lower median of a ``(N, P)`` uint8 stack."""
    if _ext is None:
        return py_lower_median(stack)
    stack = np.ascontiguousarray(_as_stack(stack))
    return _ext.lower_median(stack, _threads.max_threads())
