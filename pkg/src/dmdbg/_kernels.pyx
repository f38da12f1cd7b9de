# cython: boundscheck=False, wraparound=False, cdivision=True
"""Per-pixel temporal statistics on uint8 frame stacks.

Both kernels take a C-contiguous ``(N, P)`` uint8 array (time along axis 0)
and return a length-``P`` uint8 array. Each pixel is handled with a
256-bin histogram, so the cost is ``O(N + 256)`` per pixel and the result
does not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.stdlib cimport calloc, free
from libc.string cimport memset

cnp.import_array()


def temporal_mode(const cnp.uint8_t[:, ::1] stack, int num_threads=1):
    """Most frequent value per column; ties go to the smaller value."""
    cdef Py_ssize_t N = stack.shape[0]
    cdef Py_ssize_t P = stack.shape[1]
    out = np.empty(P, dtype=np.uint8)
    cdef cnp.uint8_t[::1] res = out
    cdef Py_ssize_t p, t
    cdef int v, best, best_count
    cdef int *counts
    if num_threads < 1:
        num_threads = 1
    with nogil, parallel(num_threads=num_threads):
        counts = <int *> calloc(256, sizeof(int))
        if counts != NULL:
            for p in prange(P, schedule="static"):
                memset(counts, 0, 256 * sizeof(int))
                for t in range(N):
                    counts[stack[t, p]] += 1
                best = 0
                best_count = counts[0]
                for v in range(1, 256):
                    if counts[v] > best_count:
                        best_count = counts[v]
                        best = v
                res[p] = <cnp.uint8_t> best
            free(counts)
    return out


def lower_median(const cnp.uint8_t[:, ::1] stack, int num_threads=1):
    """Order statistic ``ceil(N / 2)`` (1-based) per column."""
    cdef Py_ssize_t N = stack.shape[0]
    cdef Py_ssize_t P = stack.shape[1]
    out = np.empty(P, dtype=np.uint8)
    cdef cnp.uint8_t[::1] res = out
    cdef Py_ssize_t p, t
    cdef Py_ssize_t rank = (N + 1) // 2
    cdef Py_ssize_t seen
    cdef int v
    cdef int *counts
    if num_threads < 1:
        num_threads = 1
    with nogil, parallel(num_threads=num_threads):
        counts = <int *> calloc(256, sizeof(int))
        if counts != NULL:
            for p in prange(P, schedule="static"):
                memset(counts, 0, 256 * sizeof(int))
                for t in range(N):
                    counts[stack[t, p]] += 1
                seen = 0
                v = 0
                while v < 256:
                    seen = seen + counts[v]
                    if seen >= rank:
                        break
                    v = v + 1
                res[p] = <cnp.uint8_t> v
            free(counts)
    return out
