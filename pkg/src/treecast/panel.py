"""Aligned multivariate series panels.

A panel is a T-by-m float array whose columns follow a hierarchy's canonical
node order. Series that start late are padded with NaN at the head only, so
"rows complete for a subset of series" is always a contiguous tail block and
every estimator can reason about sample sizes per subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SeriesPanel:
    """T-by-m value matrix with NaN padding at the head of late series."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValidationError("panel must be 2-dimensional")
        if values.shape[1] != len(self.labels):
            raise ValidationError("one label per panel column required")
        object.__setattr__(self, "values", values)
        valid = ~np.isnan(values)
        for j in range(values.shape[1]):
            col = valid[:, j]
            first = int(np.argmax(col)) if col.any() else values.shape[0]
            if not col[first:].all():
                raise ValidationError(
                    f"series {self.labels[j]!r} has missing values after its start"
                )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    @property
    def start_offsets(self) -> np.ndarray:
        """Index of the first valid observation per series."""
        valid = ~np.isnan(self.values)
        n_rows = self.values.shape[0]
        return np.where(valid.any(axis=0), valid.argmax(axis=0), n_rows)

    def complete_rows(self, idx: list[int] | None = None) -> np.ndarray:
        """Rows with no missing value across the requested series."""
        cols = self.values if idx is None else self.values[:, list(idx)]
        return cols[~np.isnan(cols).any(axis=1)]

    def series(self, j: int) -> np.ndarray:
        """Valid observations of column ``j`` (head padding dropped)."""
        col = self.values[:, j]
        return col[~np.isnan(col)]
