"""One-shot reconciliation: bottom-up, weighted least squares, trace minimization.

Every method here is a linear map: base forecasts for all nodes are combined
into bottom-level forecasts by an n-by-m matrix G, then re-aggregated through
the summing matrix. Reconciled forecasts are therefore coherent by
construction, and methods differ only in the weight matrix behind G.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpocon

from .covariance import (
    CovarianceEstimate,
    ResidualPanel,
    sample_covariance,
    shrinkage_covariance,
    structural_weights,
    variance_weights,
)
from .errors import (
    IllConditionedWeightsError,
    StructuralRankError,
    ValidationError,
)
from .hierarchy import StructureMatrix

# Refuse solves once the estimated condition number exceeds 1/sqrt(eps);
# beyond that, inverse weights amplify estimation noise past float precision.
_MAX_CONDITION = 1.0 / np.sqrt(np.finfo(float).eps)


class Method(Enum):
    BU = "bu"
    WLS_S = "wls-s"
    WLS_V = "wls-v"
    MINT_SHRINK = "mint"
    MINT_SAMPLE = "mint-sample"


@dataclass(frozen=True)
class GMatrix:
    """Linear map from all-level base forecasts to reconciled bottom forecasts."""

    entries: np.ndarray
    method_tag: str


@dataclass(frozen=True)
class ForecastPanel:
    """m-by-H forecast array in canonical node order (H horizon steps)."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.shape[0] != len(self.labels):
            raise ValidationError("one label per forecast row required")
        if values.shape[1] < 1:
            raise ValidationError("forecast horizon must be at least 1")
        if not np.isfinite(values).all():
            raise ValidationError("forecasts must be finite")
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> int:
        return self.values.shape[1]


def _factor_spd(a: np.ndarray, err: type, what: str):
    """Cholesky factor with a reciprocal-condition estimate attached."""
    anorm = np.abs(a).sum(axis=0).max()
    try:
        factor = cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        if err is IllConditionedWeightsError:
            raise IllConditionedWeightsError(
                f"{what} is not positive definite: {exc}", condition=np.inf
            ) from exc
        raise StructuralRankError(f"{what} is not positive definite: {exc}") from exc
    rcond, info = dpocon(factor[0], anorm, uplo="L")
    if info != 0 or not np.isfinite(rcond):
        raise err(f"condition estimation failed for {what}")
    cond = np.inf if rcond == 0.0 else 1.0 / rcond
    if cond > _MAX_CONDITION:
        if err is IllConditionedWeightsError:
            raise IllConditionedWeightsError(
                f"{what} too ill-conditioned to invert (cond ~ {cond:.3e})",
                condition=cond,
            )
        raise StructuralRankError(
            f"{what} too ill-conditioned to invert (cond ~ {cond:.3e})"
        )
    return factor


def g_bottom_up(smat: StructureMatrix) -> GMatrix:
    """Select the bottom rows: aggregates are rebuilt purely from the leaves.

    With bottom nodes trailing in canonical order this is ``[0 | I_n]``.
    """
    m, n = smat.shape
    bottom_rows = [smat.row_labels.index(lab) for lab in smat.col_labels]
    g = np.zeros((n, m))
    g[np.arange(n), bottom_rows] = 1.0
    return GMatrix(g, method_tag="bu")


def g_wls(smat: StructureMatrix, diag_weights: np.ndarray, tag: str) -> GMatrix:
    """Weighted least squares with a diagonal weight matrix (given as a vector)."""
    d = np.asarray(diag_weights, dtype=float)
    if d.ndim != 1 or d.shape[0] != smat.shape[0]:
        raise ValidationError("need one diagonal weight per node")
    if np.any(d <= 0):
        raise IllConditionedWeightsError(
            "diagonal weights must be strictly positive", condition=np.inf
        )
    s = smat.entries
    m = s / d[:, None]  # W^{-1} S for diagonal W
    a = s.T @ m
    factor = _factor_spd(a, StructuralRankError, "the weighted normal equations")
    return GMatrix(cho_solve(factor, m.T, check_finite=False), method_tag=tag)


def g_min_trace(smat: StructureMatrix, weights: CovarianceEstimate) -> GMatrix:
    """Trace-minimizing combination matrix.

    Implements the closed form ``(S' W^-1 S)^-1 S' W^-1`` via two symmetric
    positive-definite solves; no matrix is inverted explicitly. Raises
    :class:`IllConditionedWeightsError` (with a condition estimate) when the
    weight matrix cannot be factored safely, and :class:`StructuralRankError`
    if the projected normal equations lose rank.
    """
    w = weights.matrix
    s = smat.entries
    if w.shape[0] != s.shape[0]:
        raise ValidationError(
            f"weight matrix covers {w.shape[0]} series, hierarchy has {s.shape[0]}"
        )
    w_factor = _factor_spd(w, IllConditionedWeightsError, "the weight matrix")
    m = cho_solve(w_factor, s, check_finite=False)  # W^{-1} S
    a = s.T @ m
    a_factor = _factor_spd(a, StructuralRankError, "the projected normal equations")
    return GMatrix(cho_solve(a_factor, m.T, check_finite=False), method_tag="mint")


def reconcile(
    panel: ForecastPanel, g: GMatrix, smat: StructureMatrix
) -> ForecastPanel:
    """Apply ``S G`` to every horizon column of the base forecasts."""
    m, n = smat.shape
    if g.entries.shape != (n, m):
        raise ValidationError(
            f"G has shape {g.entries.shape}, expected {(n, m)}"
        )
    if panel.values.shape[0] != m:
        raise ValidationError(
            f"forecast panel has {panel.values.shape[0]} rows, hierarchy has {m}"
        )
    bottom = g.entries @ panel.values
    return ForecastPanel(smat.entries @ bottom, panel.labels)


def make_reconciler(
    method: Method,
    smat: StructureMatrix,
    residuals: ResidualPanel | None = None,
) -> GMatrix:
    """Build the G matrix for one of the one-shot methods.

    ``WLS_V``, ``MINT_SHRINK``, and ``MINT_SAMPLE`` need an in-sample residual
    panel; ``BU`` and ``WLS_S`` ignore it.
    """
    if method is Method.BU:
        return g_bottom_up(smat)
    if method is Method.WLS_S:
        return g_wls(smat, np.diag(structural_weights(smat).matrix), tag="wls-s")
    if residuals is None:
        raise ValidationError(f"method {method.value} requires a residual panel")
    if method is Method.WLS_V:
        return g_wls(smat, np.diag(variance_weights(residuals).matrix), tag="wls-v")
    if method is Method.MINT_SHRINK:
        return g_min_trace(smat, shrinkage_covariance(residuals))
    if method is Method.MINT_SAMPLE:
        g = g_min_trace(smat, sample_covariance(residuals))
        return GMatrix(g.entries, method_tag="mint-sample")
    raise ValidationError(f"unknown method: {method!r}")
