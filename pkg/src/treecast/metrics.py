"""Out-of-sample evaluation: per-level RMSE and percent change vs. base.

The reporting protocol is fixed so runs are reproducible: squared forecast
errors are pooled across replicas per node and horizon window, the pooled
RMSEs are averaged within each hierarchy level, and the level values are
expressed as percent change against the base forecasts. Pooling across
replicas before the ratio keeps single-replica denominators near zero from
dominating the table. Negative numbers mean the reconciled forecasts beat
the base forecasts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedChangeError, ValidationError
from .hierarchy import Hierarchy


def rmse(forecast: np.ndarray, actual: np.ndarray) -> float:
    """Root mean squared error between two equal-length vectors."""
    forecast = np.asarray(forecast, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if forecast.shape != actual.shape:
        raise ValidationError(
            f"length mismatch: forecast {forecast.shape}, actual {actual.shape}"
        )
    if forecast.size == 0:
        raise ValidationError("need at least one observation")
    return float(np.sqrt(np.mean((forecast - actual) ** 2)))


def relative_change(method_rmse: float, base_rmse: float) -> float:
    """Percent change of a method's RMSE against the base RMSE."""
    if base_rmse == 0.0:
        raise UndefinedChangeError("relative change undefined for zero base RMSE")
    return 100.0 * (method_rmse - base_rmse) / base_rmse


@dataclass(frozen=True)
class EvalWindowSpec:
    """Nested horizon windows, 1-based inclusive, e.g. (1,1), (1,2), (1,4)."""

    windows: tuple[tuple[int, int], ...]
    holdout_h: int

    def __post_init__(self):
        last_hi = 0
        for lo, hi in self.windows:
            if lo != 1 or hi < last_hi or hi > self.holdout_h:
                raise ValidationError(
                    f"windows must be nested within the {self.holdout_h}-step "
                    f"holdout, got {self.windows}"
                )
            last_hi = hi

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple("h=1" if hi == 1 else f"1:{hi}" for _, hi in self.windows)


def windows_for(T: int, holdout_h: int, large: bool = False) -> EvalWindowSpec:
    """Horizon windows used in the evaluation tables for a given length."""
    if large:
        spans = {30: (1, 2, 4), 60: (1, 3, 6), 90: (1, 4, 8)}[T]
    else:
        spans = {15: (1, 2, 4), 30: (1, 2, 4), 60: (1, 4, 8)}[T]
    return EvalWindowSpec(tuple((1, hi) for hi in spans), holdout_h)


def level_groups(h: Hierarchy) -> list[tuple[str, tuple[int, ...]]]:
    """Report row groups: one per depth, from Top-Level down to Bottom-Level."""
    groups = []
    for d in range(h.max_depth + 1):
        if d == 0:
            name = "Top-Level"
        elif d == h.max_depth:
            name = "Bottom-Level"
        else:
            name = f"Level {d}"
        groups.append((name, h.level(d)))
    return groups


def node_window_mse(
    forecasts: np.ndarray, actuals: np.ndarray, spec: EvalWindowSpec
) -> np.ndarray:
    """Per-node mean squared error over each window of m-by-H forecasts."""
    sq = (np.asarray(forecasts, dtype=float) - np.asarray(actuals, dtype=float)) ** 2
    out = np.empty((sq.shape[0], len(spec.windows)))
    for w, (lo, hi) in enumerate(spec.windows):
        out[:, w] = sq[:, lo - 1 : hi].mean(axis=1)
    return out


@dataclass(frozen=True)
class RepResult:
    """Node-by-window mean squared errors of one replica (base plus methods)."""

    base: np.ndarray
    methods: dict[str, np.ndarray]


@dataclass(frozen=True)
class RunReport:
    """Aggregated evaluation table of one scenario run."""

    level_names: tuple[str, ...]
    window_labels: tuple[str, ...]
    methods: tuple[str, ...]
    changes: dict[str, np.ndarray]  # method -> (n_levels, n_windows), percent
    base_rmse: np.ndarray  # (n_levels, n_windows) pooled level RMSE
    reps: int
    meta: dict[str, str] = field(default_factory=dict)

    def change_table(self, method: str) -> np.ndarray:
        """Percent changes with an appended average column and average row."""
        core = self.changes[method]
        with_col = np.column_stack([core, core.mean(axis=1)])
        return np.vstack([with_col, with_col.mean(axis=0)])

    def average_change(self, method: str) -> float:
        """Grand average: mean over levels of the mean over windows."""
        return float(self.changes[method].mean(axis=1).mean())

    def level_change(self, method: str, level_name: str) -> float:
        """Window-averaged change of one level row."""
        lev = self.level_names.index(level_name)
        return float(self.changes[method][lev].mean())

    def to_json_dict(self) -> dict:
        return {
            "meta": self.meta,
            "reps": self.reps,
            "levels": list(self.level_names),
            "windows": list(self.window_labels),
            "base_rmse": [[float(x) for x in row] for row in self.base_rmse],
            "changes": {
                name: [[float(x) for x in row] for row in table]
                for name, table in self.changes.items()
            },
        }

    def to_csv_text(self) -> str:
        lines = ["level,method," + ",".join(self.window_labels) + ",average"]
        row_names = list(self.level_names) + ["Average"]
        for method in self.methods:
            table = self.change_table(method)
            for r, name in enumerate(row_names):
                cells = ",".join(f"{x:.6f}" for x in table[r])
                lines.append(f"{name},{method},{cells}")
        return "\n".join(lines) + "\n"

    def to_text_table(self) -> str:
        width = 12
        header = "".join(f"{lab:>{width}}" for lab in (*self.window_labels, "Av."))
        out = []
        for lev, name in enumerate(list(self.level_names) + ["Average"]):
            out.append(f"-- {name} --")
            out.append(" " * 12 + header)
            for method in self.methods:
                table = self.change_table(method)
                cells = "".join(f"{x:{width}.1f}" for x in table[lev])
                out.append(f"{method:<12}" + cells)
        return "\n".join(out) + "\n"


def pooled_level_rmse(
    mse_tables: list[np.ndarray], groups: list[tuple[str, tuple[int, ...]]]
) -> np.ndarray:
    """Pool per-replica MSEs, take node RMSEs, and average within levels."""
    pooled = np.mean(mse_tables, axis=0)
    node_rmse = np.sqrt(pooled)
    return np.vstack([node_rmse[list(idx)].mean(axis=0) for _, idx in groups])


def build_report(
    per_rep: list[RepResult],
    groups: list[tuple[str, tuple[int, ...]]],
    window_labels: tuple[str, ...],
    meta: dict[str, str] | None = None,
) -> RunReport:
    """Aggregate per-replica squared errors into the final change table."""
    if not per_rep:
        raise ValidationError("need at least one replica result")
    methods = tuple(per_rep[0].methods)
    base_lw = pooled_level_rmse([rep.base for rep in per_rep], groups)
    if np.any(base_lw == 0.0):
        raise UndefinedChangeError("pooled base RMSE of zero in some level")
    changes = {}
    for m in methods:
        method_lw = pooled_level_rmse([rep.methods[m] for rep in per_rep], groups)
        changes[m] = 100.0 * (method_lw - base_lw) / base_lw
    return RunReport(
        level_names=tuple(name for name, _ in groups),
        window_labels=tuple(window_labels),
        methods=methods,
        changes=changes,
        base_rmse=base_lw,
        reps=len(per_rep),
        meta=dict(meta or {}),
    )
