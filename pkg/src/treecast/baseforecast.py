"""Simple univariate base forecasters and their one-step in-sample residuals.

These stand in for whatever forecasting stack produces the base forecasts in
practice. They are deliberately small: deterministic, dependency-free, and
fast enough to run inside Monte Carlo loops. Each returns point forecasts
for a requested horizon plus the one-step residuals the reconcilers need.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import SeriesTooShortError


class ForecasterKind(Enum):
    NAIVE = "naive"
    MEAN = "mean"
    AR_OLS = "ar"
    SES = "ses"


SES_GRID = np.round(np.arange(0.05, 1.0, 0.05), 2)


def _naive(series: np.ndarray, horizon: int):
    forecasts = np.full(horizon, series[-1])
    residuals = np.diff(series)
    return forecasts, residuals


def _mean(series: np.ndarray, horizon: int):
    mu = series.mean()
    return np.full(horizon, mu), series - mu


def _ses(series: np.ndarray, horizon: int, grid=SES_GRID):
    """Simple exponential smoothing; alpha picked from a grid by in-sample SSE."""
    best = (np.inf, None, None)
    for alpha in grid:
        level = series[0]
        resid = np.empty(len(series) - 1)
        for t in range(1, len(series)):
            resid[t - 1] = series[t] - level
            level += alpha * resid[t - 1]
        sse = float(resid @ resid)
        if sse < best[0]:
            best = (sse, float(alpha), (np.full(horizon, level), resid))
    return best[2]


def _ar_design(series: np.ndarray, order: int, rows: int):
    """Last ``rows`` regression rows of x_t on [1, x_{t-1}, ..., x_{t-order}]."""
    t_end = len(series)
    y = series[t_end - rows :]
    cols = [np.ones(rows)]
    for lag in range(1, order + 1):
        cols.append(series[t_end - rows - lag : t_end - lag])
    return np.column_stack(cols), y


def _ar_ols(series: np.ndarray, horizon: int, max_order: int = 2):
    """Autoregression fit by least squares, order chosen by AIC.

    Orders 0..max_order are compared on the common sample the largest order
    leaves usable, with AIC = n*log(SSE/n) + 2*(p+1); the winner is then
    refit on its full usable sample. Iterated one-step predictions give the
    multi-step forecasts. A constant series falls back to the mean model.
    """
    n = len(series)
    max_order = min(max_order, n - 2)
    if np.ptp(series) == 0.0:
        return _mean(series, horizon)

    n_common = n - max_order
    best_order, best_aic = 0, np.inf
    for order in range(max_order + 1):
        x, y = _ar_design(series, order, n_common)
        coef, *_ = np.linalg.lstsq(x, y, rcond=None)
        sse = float(((y - x @ coef) ** 2).sum())
        sse = max(sse, 1e-300)  # guard log(0) on perfect fits
        aic = n_common * np.log(sse / n_common) + 2 * (order + 1)
        if aic < best_aic:
            best_order, best_aic = order, aic

    x, y = _ar_design(series, best_order, n - best_order)
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    residuals = y - x @ coef

    history = list(series[-max(best_order, 1) :])
    forecasts = np.empty(horizon)
    for step in range(horizon):
        value = coef[0]
        for lag in range(1, best_order + 1):
            value += coef[lag] * history[-lag]
        forecasts[step] = value
        history.append(value)
    return forecasts, residuals


def fit_forecast(
    series: np.ndarray,
    horizon: int,
    kind: ForecasterKind,
    max_order: int = 2,
) -> tuple[np.ndarray, np.ndarray]:
    """Fit one forecaster and return ``(forecasts, one_step_residuals)``.

    Residuals cover the usable sample only (series length minus the model's
    warm-up), aligned to the end of the series.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be 1-dimensional")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if len(series) < 4:
        raise SeriesTooShortError(
            f"need at least 4 observations, have {len(series)}"
        )
    if not np.isfinite(series).all():
        raise ValueError("series contains non-finite values")
    if kind is ForecasterKind.NAIVE:
        return _naive(series, horizon)
    if kind is ForecasterKind.MEAN:
        return _mean(series, horizon)
    if kind is ForecasterKind.SES:
        return _ses(series, horizon)
    if kind is ForecasterKind.AR_OLS:
        return _ar_ols(series, horizon, max_order=max_order)
    raise ValueError(f"unknown forecaster kind: {kind!r}")
