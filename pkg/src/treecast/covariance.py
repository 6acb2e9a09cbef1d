"""Estimators for the covariance of base-forecast errors.

All estimators consume a :class:`ResidualPanel` of one-step in-sample
residuals aligned on a common time axis. Series may start late (head cells
missing); estimation always restricts itself to the rows that are complete
for the series actually requested, which is what lets local sub-hierarchy
estimates use more data than a global one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewObservationsError, ValidationError
from .hierarchy import StructureMatrix
from .panel import SeriesPanel

# Estimators expect panels of one-step in-sample residuals; structurally they
# are ordinary series panels.
ResidualPanel = SeriesPanel


@dataclass(frozen=True)
class CovarianceEstimate:
    """Symmetric weight matrix plus the shrinkage intensity that produced it."""

    matrix: np.ndarray
    labels: tuple[str, ...]
    shrinkage: float = 0.0
    n_obs_used: int = 0

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError("covariance matrix must be square")
        scale = np.abs(matrix).max()
        if scale > 0 and np.abs(matrix - matrix.T).max() > 1e-12 * scale:
            raise ValidationError("covariance matrix must be symmetric")
        if not 0.0 <= self.shrinkage <= 1.0:
            raise ValidationError("shrinkage intensity must lie in [0, 1]")
        object.__setattr__(self, "matrix", (matrix + matrix.T) / 2.0)

    @property
    def n_series(self) -> int:
        return self.matrix.shape[0]


def _complete_centered(panel: ResidualPanel, idx=None):
    rows = panel.complete_rows(idx)
    if rows.shape[0] < 2:
        raise TooFewObservationsError(
            f"need at least 2 complete residual rows, have {rows.shape[0]}"
        )
    return rows - rows.mean(axis=0), rows.shape[0]


def _labels(panel: ResidualPanel, idx) -> tuple[str, ...]:
    if idx is None:
        return tuple(panel.labels)
    return tuple(panel.labels[i] for i in idx)


def sample_covariance(panel: ResidualPanel, idx=None) -> CovarianceEstimate:
    """Maximum-likelihood covariance over complete cases (divide by n)."""
    centered, n = _complete_centered(panel, idx)
    w = centered.T @ centered / n
    return CovarianceEstimate(w, _labels(panel, idx), shrinkage=0.0, n_obs_used=n)


def shrinkage_covariance(panel: ResidualPanel, idx=None) -> CovarianceEstimate:
    """Sample covariance with off-diagonals shrunk toward zero.

    The intensity is the optimal-shrinkage estimate computed on sample
    correlations,

        lambda = sum_{i != j} Var(r_ij) / sum_{i != j} r_ij**2

    clipped to [0, 1], with ``Var(r_ij)`` the usual mean-centered variance of
    the standardized cross products. The result ``lambda * diag(W) +
    (1 - lambda) * W`` keeps the sample variances exactly and never increases
    an off-diagonal magnitude. A single series has no off-diagonals, so
    ``lambda = 0`` by convention.
    """
    centered, n = _complete_centered(panel, idx)
    w = centered.T @ centered / n
    variances = np.diag(w)
    if np.any(variances <= 0.0):
        bad = [_labels(panel, idx)[j] for j in np.where(variances <= 0.0)[0]]
        raise ValidationError(f"zero residual variance for series {bad}")
    m = w.shape[0]
    if m == 1:
        lam = 0.0
    else:
        xs = centered / np.sqrt(variances)
        corr = xs.T @ xs / n
        var_corr = (xs**2).T @ (xs**2) - (xs.T @ xs) ** 2 / n
        var_corr /= n * (n - 1)
        off = ~np.eye(m, dtype=bool)
        denom = float((corr[off] ** 2).sum())
        lam = 1.0 if denom == 0.0 else float(np.clip(var_corr[off].sum() / denom, 0.0, 1.0))
    shrunk = (1.0 - lam) * w
    np.fill_diagonal(shrunk, variances)
    return CovarianceEstimate(shrunk, _labels(panel, idx), shrinkage=lam, n_obs_used=n)


def variance_weights(panel: ResidualPanel, idx=None) -> CovarianceEstimate:
    """Diagonal of the sample covariance (variance scaling)."""
    full = sample_covariance(panel, idx)
    return CovarianceEstimate(
        np.diag(np.diag(full.matrix)),
        full.labels,
        shrinkage=0.0,
        n_obs_used=full.n_obs_used,
    )


def structural_weights(smat: StructureMatrix) -> CovarianceEstimate:
    """Diagonal weights proportional to each node's bottom-series count."""
    row_sums = smat.entries.sum(axis=1)
    return CovarianceEstimate(np.diag(row_sums), smat.row_labels)


def subset(cov: CovarianceEstimate, idx: list[int]) -> CovarianceEstimate:
    """Principal submatrix for the given indices; shrinkage carries through."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        raise ValidationError("subset indices must be distinct")
    if any(not 0 <= i < cov.n_series for i in idx):
        raise ValidationError("subset index out of range")
    sub = cov.matrix[np.ix_(idx, idx)]
    return CovarianceEstimate(
        sub,
        tuple(cov.labels[i] for i in idx),
        shrinkage=cov.shrinkage,
        n_obs_used=cov.n_obs_used,
    )
