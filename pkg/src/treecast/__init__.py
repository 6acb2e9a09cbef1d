"""Coherent forecasting for hierarchical time series.

Base forecasts made independently per series rarely respect an additive
aggregation structure. This package builds the summing matrix of a labelled
tree, estimates base-error covariances, and maps base forecasts onto the
coherent subspace with bottom-up, weighted-least-squares, trace-minimizing,
or iterative trace-minimizing combinations. A seeded Monte Carlo harness
benchmarks the methods on six synthetic scenario families.
"""

from .baseforecast import ForecasterKind, fit_forecast
from .covariance import (
    CovarianceEstimate,
    ResidualPanel,
    sample_covariance,
    shrinkage_covariance,
    structural_weights,
    subset,
    variance_weights,
)
from .hierarchy import (
    Hierarchy,
    StructureMatrix,
    SubHierarchy,
    aggregate_bottom,
    balanced_hierarchy,
    build_structure_matrix,
    enumerate_subhierarchies,
    mint_param_count,
    mintit_param_count,
    node_count,
)
from .metrics import (
    EvalWindowSpec,
    RepResult,
    RunReport,
    build_report,
    level_groups,
    relative_change,
    rmse,
    windows_for,
)
from .mintit import MinTitConfig, MinTitResult, Mode, mintit, mintit_sweep
from .panel import SeriesPanel
from .reconcilers import (
    ForecastPanel,
    GMatrix,
    Method,
    g_bottom_up,
    g_min_trace,
    g_wls,
    make_reconciler,
    reconcile,
)
from .scenarios import Scenario, ScenarioConfig, generate, mix64

__version__ = "0.1.0"

__all__ = [
    "CovarianceEstimate",
    "EvalWindowSpec",
    "ForecastPanel",
    "ForecasterKind",
    "GMatrix",
    "Hierarchy",
    "Method",
    "MinTitConfig",
    "MinTitResult",
    "Mode",
    "RepResult",
    "ResidualPanel",
    "RunReport",
    "Scenario",
    "ScenarioConfig",
    "SeriesPanel",
    "StructureMatrix",
    "SubHierarchy",
    "aggregate_bottom",
    "balanced_hierarchy",
    "build_report",
    "build_structure_matrix",
    "enumerate_subhierarchies",
    "fit_forecast",
    "g_bottom_up",
    "g_min_trace",
    "g_wls",
    "generate",
    "level_groups",
    "make_reconciler",
    "mint_param_count",
    "mintit",
    "mintit_param_count",
    "mintit_sweep",
    "mix64",
    "node_count",
    "reconcile",
    "relative_change",
    "rmse",
    "sample_covariance",
    "shrinkage_covariance",
    "structural_weights",
    "subset",
    "variance_weights",
    "windows_for",
]
