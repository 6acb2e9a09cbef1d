"""Pure-Python sweep kernel for iterative reconciliation.

Semantics must match ``_sweep_cy`` exactly: repeated Gauss-Seidel sweeps over
packed sub-problems, where step k replaces the forecast rows ``indices[
offsets[k]:offsets[k+1]]`` with ``mats_k @ rows`` (updates visible to later
steps of the same sweep), followed by a convergence test on the L2 norm of
the full stacked change.
"""

from __future__ import annotations

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAXIT = 1
STATUS_DIVERGED = 2


def run_sweeps(
    forecasts: np.ndarray,
    indices: np.ndarray,
    offsets: np.ndarray,
    mats: np.ndarray,
    mat_offsets: np.ndarray,
    eps: float,
    maxit: int,
) -> tuple[int, int, np.ndarray]:
    """Sweep until the change norm drops below ``eps`` or ``maxit`` is hit.

    ``forecasts`` (m-by-H, float64) is updated in place. Returns
    ``(status, sweeps_done, change_norms)``.
    """
    n_subs = len(offsets) - 1
    old = np.empty_like(forecasts)
    norms = np.empty(maxit)
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is detected
        for sweep in range(maxit):
            old[:] = forecasts
            for k in range(n_subs):
                rows = indices[offsets[k] : offsets[k + 1]]
                sz = rows.shape[0]
                mat = mats[mat_offsets[k] : mat_offsets[k + 1]].reshape(sz, sz)
                forecasts[rows] = mat @ forecasts[rows]
            change = float(np.sqrt(((forecasts - old) ** 2).sum()))
            norms[sweep] = change
            if not np.isfinite(change):
                return STATUS_DIVERGED, sweep + 1, norms[: sweep + 1]
            if change < eps:
                return STATUS_CONVERGED, sweep + 1, norms[: sweep + 1]
    return STATUS_MAXIT, maxit, norms
