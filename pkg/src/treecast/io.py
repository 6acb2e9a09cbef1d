"""File formats: hierarchy JSON / edge-list CSV, wide panels, raw results.

Wide CSVs carry one column per node label and one row per time step or
horizon step; blank cells mark the missing head of a late-starting series.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hierarchy import Hierarchy
from .metrics import RepResult
from .panel import SeriesPanel
from .reconcilers import ForecastPanel


def hierarchy_to_json_dict(h: Hierarchy) -> dict:
    """Nested ``{"label": ..., "children": [...]}`` representation."""

    def node(i: int) -> dict:
        out = {"label": h.labels[i]}
        if h.children[i]:
            out["children"] = [node(c) for c in h.children[i]]
        return out

    return node(h.parents.index(None))


def hierarchy_from_json_dict(data: dict) -> Hierarchy:
    nodes: list[tuple[str, int | None]] = []

    def walk(obj: dict, parent: int | None):
        if not isinstance(obj, dict) or "label" not in obj:
            raise ValidationError("hierarchy JSON nodes need a 'label' field")
        nodes.append((str(obj["label"]), parent))
        me = len(nodes) - 1
        for child in obj.get("children", []):
            walk(child, me)

    walk(data, None)
    return Hierarchy.from_nodes(nodes)


def hierarchy_from_edge_rows(rows: list[tuple[str, str]]) -> Hierarchy:
    """Build a hierarchy from ``(child, parent)`` label pairs.

    The root may appear as a row with an empty parent or only on the parent
    side. Declaration order follows first appearance.
    """
    seen: dict[str, int] = {}
    parents: dict[str, str | None] = {}

    def declare(label: str):
        if label not in seen:
            seen[label] = len(seen)
            parents.setdefault(label, None)

    for child, parent in rows:
        child = child.strip()
        parent = parent.strip()
        if not child:
            raise ValidationError("edge list rows need a child label")
        if parent:
            declare(parent)
            declare(child)
            if parents.get(child) not in (None, parent):
                raise ValidationError(f"node {child!r} listed with two parents")
            parents[child] = parent
        else:
            declare(child)

    order = sorted(seen, key=seen.get)
    index = {label: i for i, label in enumerate(order)}
    nodes = [
        (label, None if parents[label] is None else index[parents[label]])
        for label in order
    ]
    return Hierarchy.from_nodes(nodes)


def load_hierarchy(path: str | Path) -> Hierarchy:
    """Read a hierarchy from nested JSON or a ``child,parent`` CSV edge list."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return hierarchy_from_json_dict(json.loads(text))
    rows = []
    for row in csv.reader(text.splitlines()):
        if not row or not any(cell.strip() for cell in row):
            continue
        if [cell.strip().lower() for cell in row[:2]] == ["child", "parent"]:
            continue
        rows.append((row[0], row[1] if len(row) > 1 else ""))
    return hierarchy_from_edge_rows(rows)


def write_hierarchy_json(path: str | Path, h: Hierarchy):
    Path(path).write_text(json.dumps(hierarchy_to_json_dict(h), indent=2) + "\n")


def load_wide_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a wide CSV into ``(labels, values)``; blank cells become NaN."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        labels = tuple(cell.strip() for cell in header)
        rows = []
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != len(labels):
                raise ValidationError(
                    f"{path}: row with {len(row)} cells, header has {len(labels)}"
                )
            rows.append(
                [float(cell) if cell.strip() else np.nan for cell in row]
            )
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return labels, np.asarray(rows, dtype=float)


def write_wide_csv(path: str | Path, labels: tuple[str, ...], values: np.ndarray):
    """Write a time-by-series array as a wide CSV (NaN cells left blank)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(labels)
        for row in np.atleast_2d(values):
            writer.writerow(["" if np.isnan(x) else f"{x:.12g}" for x in row])


def _align_columns(
    labels: tuple[str, ...], values: np.ndarray, h: Hierarchy, what: str
) -> np.ndarray:
    missing = [lab for lab in h.labels if lab not in labels]
    extra = [lab for lab in labels if lab not in h.labels]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing columns {missing}")
        if extra:
            parts.append(f"unknown columns {extra}")
        raise ValidationError(f"{what}: {'; '.join(parts)}")
    order = [labels.index(lab) for lab in h.labels]
    return values[:, order]


def load_forecast_csv(path: str | Path, h: Hierarchy) -> ForecastPanel:
    """Forecast CSV: one row per horizon step, columns matched to the tree."""
    labels, values = load_wide_csv(path)
    values = _align_columns(labels, values, h, f"{path} (forecasts)")
    if np.isnan(values).any():
        raise ValidationError(f"{path}: forecasts must not have blank cells")
    return ForecastPanel(values.T, h.labels)


def load_panel_csv(path: str | Path, h: Hierarchy) -> SeriesPanel:
    """Observation/residual CSV: one row per time step, blank head cells OK."""
    labels, values = load_wide_csv(path)
    return SeriesPanel(_align_columns(labels, values, h, str(path)), h.labels)


def write_forecast_csv(path: str | Path, panel: ForecastPanel):
    write_wide_csv(path, panel.labels, panel.values.T)


RAW_HEADER = ("rep", "series", "node", "level", "window", "mse")


def write_raw_results(
    path: str | Path,
    per_rep: list[RepResult],
    node_labels: tuple[str, ...],
    node_levels: tuple[str, ...],
    window_labels: tuple[str, ...],
):
    """Per-replica node MSE in long form ('base' plus one row set per method)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_HEADER)
        for rep, result in enumerate(per_rep):
            tables = {"base": result.base, **result.methods}
            for series, table in tables.items():
                for j, (node, level) in enumerate(zip(node_labels, node_levels)):
                    for w, w_name in enumerate(window_labels):
                        writer.writerow(
                            [rep, series, node, level, w_name, f"{table[j, w]:.17g}"]
                        )


def read_raw_results(
    path: str | Path,
) -> tuple[
    list[RepResult], list[tuple[str, tuple[int, ...]]], tuple[str, ...]
]:
    """Inverse of :func:`write_raw_results`: replicas, level groups, windows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != RAW_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(RAW_HEADER)}")
        cells: dict[int, dict[str, dict[tuple[str, str], float]]] = {}
        nodes: list[str] = []
        node_level: dict[str, str] = {}
        levels: list[str] = []
        windows: list[str] = []
        for row in reader:
            if not row:
                continue
            rep, series, node, level, window, value = row
            if node not in node_level:
                nodes.append(node)
                node_level[node] = level
            if level not in levels:
                levels.append(level)
            if window not in windows:
                windows.append(window)
            cells.setdefault(int(rep), {}).setdefault(series, {})[
                (node, window)
            ] = float(value)
    groups = [
        (
            level,
            tuple(j for j, node in enumerate(nodes) if node_level[node] == level),
        )
        for level in levels
    ]
    per_rep = []
    for rep in sorted(cells):
        tables = {}
        for series, values in cells[rep].items():
            table = np.empty((len(nodes), len(windows)))
            for j, node in enumerate(nodes):
                for w, w_name in enumerate(windows):
                    try:
                        table[j, w] = values[(node, w_name)]
                    except KeyError:
                        raise ValidationError(
                            f"{path}: rep {rep} series {series!r} is missing "
                            f"cell ({node}, {w_name})"
                        ) from None
            tables[series] = table
        if "base" not in tables:
            raise ValidationError(f"{path}: rep {rep} has no 'base' rows")
        base = tables.pop("base")
        per_rep.append(RepResult(base=base, methods=tables))
    return per_rep, groups, tuple(windows)
