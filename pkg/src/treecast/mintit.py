"""Iterative trace minimization over one-level sub-hierarchies.

Instead of inverting one covariance matrix for the whole tree, each
parent-with-children block is reconciled on its own, sweeping top-down and
repeating until the forecast vector stops moving. Updates within a sweep are
sequential, so information propagates both down and up the tree as sweeps
alternate. Residuals (and therefore all per-block weight matrices) stay
fixed across iterations; only forecasts change, which lets the per-block
update matrices be computed once and the iteration run in a tight kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .covariance import (
    CovarianceEstimate,
    ResidualPanel,
    shrinkage_covariance,
    subset,
)
from .errors import DivergenceError, NumericalError, ValidationError
from .hierarchy import (
    Hierarchy,
    StructureMatrix,
    build_structure_matrix,
    enumerate_subhierarchies,
)
from .reconcilers import ForecastPanel, g_min_trace


class Mode(Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class MinTitConfig:
    """Iteration settings.

    ``epsilon=None`` selects the scale-aware default
    ``1e-6 * (1 + ||f||_2 / f.size)`` at run time.
    """

    mode: Mode = Mode.GLOBAL
    epsilon: float | None = None
    max_iterations: int = 500

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValidationError("convergence threshold must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")

    def resolve_epsilon(self, forecasts: np.ndarray) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return 1e-6 * (1.0 + np.linalg.norm(forecasts) / forecasts.size)


@dataclass(frozen=True)
class MinTitResult:
    forecasts: ForecastPanel
    iterations_used: int
    converged: bool
    final_change_norm: float
    change_norms: np.ndarray


def _pack_subproblems(
    h: Hierarchy,
    residuals: ResidualPanel | None,
    mode: Mode,
    global_cov: CovarianceEstimate | None,
):
    """Precompute the update matrix ``S_sub @ G_sub`` for every sub-hierarchy."""
    subs = enumerate_subhierarchies(h)
    indices, offsets, mats, mat_offsets = [], [0], [], [0]
    for sub in subs:
        idx = list(sub.indices)
        sub_labels = tuple(h.labels[i] for i in idx)
        try:
            if mode is Mode.GLOBAL:
                sigma = subset(global_cov, idx)
            else:
                sigma = shrinkage_covariance(residuals, idx)
            local_smat = StructureMatrix(
                entries=sub.local_structure,
                row_labels=sub_labels,
                col_labels=sub_labels[1:],
            )
            g_sub = g_min_trace(local_smat, sigma)
        except NumericalError as exc:
            raise type(exc)(
                f"sub-hierarchy under {h.labels[sub.parent]!r}: {exc}"
            ) from exc
        update = sub.local_structure @ g_sub.entries
        indices.extend(idx)
        offsets.append(len(indices))
        mats.extend(update.ravel())
        mat_offsets.append(len(mats))
    return (
        np.asarray(indices, dtype=np.int64),
        np.asarray(offsets, dtype=np.int64),
        np.asarray(mats, dtype=np.float64),
        np.asarray(mat_offsets, dtype=np.int64),
    )


def _check_panels(panel: ForecastPanel, residuals: ResidualPanel | None, h: Hierarchy):
    if panel.values.shape[0] != h.n_nodes:
        raise ValidationError(
            f"forecast panel has {panel.values.shape[0]} rows, hierarchy has "
            f"{h.n_nodes} nodes"
        )
    if residuals is not None and residuals.n_series != h.n_nodes:
        raise ValidationError("residual panel must cover every node")


def mintit_sweep(
    panel: ForecastPanel,
    residuals: ResidualPanel | None,
    h: Hierarchy,
    cfg: MinTitConfig,
    global_cov: CovarianceEstimate | None = None,
) -> ForecastPanel:
    """One top-down pass over all sub-hierarchies (updates are sequential)."""
    _check_panels(panel, residuals, h)
    if cfg.mode is Mode.GLOBAL and global_cov is None:
        raise ValidationError("global mode requires the global covariance")
    if cfg.mode is Mode.LOCAL and residuals is None:
        raise ValidationError("local mode requires a residual panel")
    packed = _pack_subproblems(h, residuals, cfg.mode, global_cov)
    values = np.ascontiguousarray(panel.values, dtype=np.float64).copy()
    kernels.run_sweeps(values, *packed, eps=np.inf, maxit=1)
    return ForecastPanel(values, panel.labels)


def mintit(
    panel: ForecastPanel,
    residuals: ResidualPanel,
    h: Hierarchy,
    cfg: MinTitConfig,
    smat: StructureMatrix | None = None,
) -> MinTitResult:
    """Sweep until the stacked forecast change drops below the threshold.

    After convergence (or ``max_iterations``, reported via ``converged``),
    one exact-coherence pass rebuilds every aggregate from the converged
    bottom forecasts, since the stopping rule alone only bounds incoherence
    by the order of the threshold.
    """
    _check_panels(panel, residuals, h)
    global_cov = (
        shrinkage_covariance(residuals) if cfg.mode is Mode.GLOBAL else None
    )
    packed = _pack_subproblems(h, residuals, cfg.mode, global_cov)
    values = np.ascontiguousarray(panel.values, dtype=np.float64).copy()
    eps = cfg.resolve_epsilon(values)
    status, sweeps, norms = kernels.run_sweeps(
        values, *packed, eps=eps, maxit=cfg.max_iterations
    )
    if status == kernels.STATUS_DIVERGED:
        raise DivergenceError(
            f"forecasts became non-finite during sweep {sweeps}", iteration=sweeps
        )
    if smat is None:
        smat = build_structure_matrix(h)
    bottom_rows = list(h.bottom_indices)
    values = smat.entries @ values[bottom_rows]
    return MinTitResult(
        forecasts=ForecastPanel(values, panel.labels),
        iterations_used=sweeps,
        converged=status == kernels.STATUS_CONVERGED,
        final_change_norm=float(norms[-1]) if len(norms) else 0.0,
        change_norms=np.asarray(norms, dtype=float),
    )
