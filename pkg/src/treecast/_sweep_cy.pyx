# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernel for iterative reconciliation.

Twin of ``_sweep_py.run_sweeps``; same packing, same update order, same
convergence rule. The Python interpreter is kept out of the per-step loop,
which matters when a sweep touches hundreds of sub-problems for hundreds of
iterations.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()

STATUS_CONVERGED = 0
STATUS_MAXIT = 1
STATUS_DIVERGED = 2


def run_sweeps(
    double[:, ::1] forecasts,
    long long[::1] indices,
    long long[::1] offsets,
    double[::1] mats,
    long long[::1] mat_offsets,
    double eps,
    int maxit,
):
    cdef Py_ssize_t n_subs = offsets.shape[0] - 1
    cdef Py_ssize_t n_rows = forecasts.shape[0]
    cdef Py_ssize_t horizon = forecasts.shape[1]
    cdef Py_ssize_t max_sz = 0, sz, sweep, k, i, j, h, base, mbase
    cdef double acc, change, diff

    for k in range(n_subs):
        sz = offsets[k + 1] - offsets[k]
        if sz > max_sz:
            max_sz = sz

    old_arr = np.empty((n_rows, horizon), dtype=np.float64)
    tmp_arr = np.empty(max_sz if max_sz > 0 else 1, dtype=np.float64)
    norms_arr = np.empty(maxit, dtype=np.float64)
    cdef double[:, ::1] old = old_arr
    cdef double[::1] tmp = tmp_arr
    cdef double[::1] norms = norms_arr

    with nogil:
        for sweep in range(maxit):
            for i in range(n_rows):
                for h in range(horizon):
                    old[i, h] = forecasts[i, h]
            for k in range(n_subs):
                base = offsets[k]
                mbase = mat_offsets[k]
                sz = offsets[k + 1] - base
                for h in range(horizon):
                    for i in range(sz):
                        acc = 0.0
                        for j in range(sz):
                            acc += mats[mbase + i * sz + j] * forecasts[indices[base + j], h]
                        tmp[i] = acc
                    for i in range(sz):
                        forecasts[indices[base + i], h] = tmp[i]
            change = 0.0
            for i in range(n_rows):
                for h in range(horizon):
                    diff = forecasts[i, h] - old[i, h]
                    change += diff * diff
            change = sqrt(change)
            norms[sweep] = change
            if not isfinite(change):
                with gil:
                    return STATUS_DIVERGED, sweep + 1, norms_arr[: sweep + 1]
            if change < eps:
                with gil:
                    return STATUS_CONVERGED, sweep + 1, norms_arr[: sweep + 1]
    return STATUS_MAXIT, maxit, norms_arr
