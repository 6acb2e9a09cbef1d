"""Sweep-kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
pure-Python twin takes over. ``TREECAST_FORCE_PYTHON_KERNEL=1`` pins the
fallback, which the benchmark and the backend-equivalence tests use.
"""

from __future__ import annotations

import os

from . import _sweep_py

STATUS_CONVERGED = _sweep_py.STATUS_CONVERGED
STATUS_MAXIT = _sweep_py.STATUS_MAXIT
STATUS_DIVERGED = _sweep_py.STATUS_DIVERGED

try:
    from . import _sweep_cy
except ImportError:
    _sweep_cy = None


def available_backends() -> dict[str, object]:
    backends = {"python": _sweep_py.run_sweeps}
    if _sweep_cy is not None:
        backends["compiled"] = _sweep_cy.run_sweeps
    return backends


if _sweep_cy is not None and os.environ.get("TREECAST_FORCE_PYTHON_KERNEL") != "1":
    BACKEND = "compiled"
    run_sweeps = _sweep_cy.run_sweeps
else:
    BACKEND = "python"
    run_sweeps = _sweep_py.run_sweeps
