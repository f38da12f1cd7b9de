"""Thread-count control shared by the BLAS calls and the compiled kernels."""

from __future__ import annotations

import contextlib
import os

from threadpoolctl import threadpool_limits

ENV_VAR = "DMDBG_THREADS"


def max_threads() -> int:
    """Return the thread cap from ``DMDBG_THREADS`` (default: CPU count)."""
    raw = os.environ.get(ENV_VAR, "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return os.cpu_count() or 1


@contextlib.contextmanager
def limited():
    """Cap BLAS/OpenMP pools at :func:`max_threads` while the block runs.

    Only active when ``DMDBG_THREADS`` is set; otherwise the pools keep
    whatever the process already configured.
    """
    if not os.environ.get(ENV_VAR, "").strip():
        yield
        return
    with threadpool_limits(limits=max_threads()):
        yield
