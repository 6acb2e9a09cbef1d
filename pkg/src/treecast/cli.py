"""Command-line interface: run simulations, reconcile files, render reports.

Exit codes: 0 on success, 2 for validation problems (bad flags, malformed or
mismatched input files), 3 for numerical failures (singular weight matrices,
diverging iterations).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import io
from .baseforecast import ForecasterKind
from .errors import NumericalError, ValidationError
from .harness import (
    ALL_METHODS,
    DEFAULT_METHODS,
    MINTIT_METHODS,
    ONE_SHOT_METHODS,
    SimulationSpec,
    run_rep,
    run_simulation,
)
from .hierarchy import build_structure_matrix
from .metrics import build_report, level_groups, windows_for
from .mintit import MinTitConfig, Mode, mintit
from .reconcilers import make_reconciler, reconcile
from .scenarios import Scenario, ScenarioConfig, generate, scenario_tree

_ENV_THREADS = "TREECAST_THREADS"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(_ENV_THREADS, "1")))
    except ValueError:
        return 1


def _add_mintit_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--mintit-eps",
        type=float,
        default=None,
        help="convergence threshold (default: scale-aware)",
    )
    parser.add_argument("--mintit-maxit", type=int, default=500)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecast",
        description="Coherent forecasting for hierarchical time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    sim.add_argument(
        "--scenario",
        required=True,
        choices=[s.value for s in Scenario],
    )
    sim.add_argument("--T", type=int, default=30, help="series length")
    sim.add_argument("--reps", type=int, default=200)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument(
        "--base",
        default="ar",
        choices=[k.value for k in ForecasterKind],
        help="base forecaster",
    )
    sim.add_argument(
        "--methods",
        default=",".join(DEFAULT_METHODS),
        help=f"comma list from {','.join(ALL_METHODS)}",
    )
    sim.add_argument("--threads", type=int, default=None)
    sim.add_argument("--out", required=True, help="report output path")
    sim.add_argument("--format", default="csv", choices=["csv", "json", "table"])
    sim.add_argument("--dump-raw", default=None, help="per-rep MSE CSV path")
    sim.add_argument(
        "--dump-panels", default=None, help="directory for per-rep panel CSVs"
    )
    _add_mintit_flags(sim)

    rec = sub.add_parser("reconcile", help="reconcile forecasts from files")
    rec.add_argument("--hierarchy", required=True, help="JSON tree or edge CSV")
    rec.add_argument("--forecasts", required=True, help="wide CSV of base forecasts")
    rec.add_argument("--residuals", default=None, help="wide CSV of residuals")
    rec.add_argument("--method", required=True, choices=list(ALL_METHODS))
    rec.add_argument("--out", required=True, help="reconciled forecast CSV path")
    rec.add_argument("--diagnostics", default=None, help="iteration JSON path")
    rec.add_argument(
        "--mintit-mode",
        default=None,
        choices=["global", "local"],
        help="override the mode implied by --method mintit-g/-l",
    )
    _add_mintit_flags(rec)

    rep = sub.add_parser("report", help="re-render a per-rep RMSE dump")
    rep.add_argument("--raw", required=True, help="CSV from simulate --dump-raw")
    rep.add_argument("--out", required=True)
    rep.add_argument("--format", default="csv", choices=["csv", "json", "table"])
    return parser


def _write_report(report, path: str, fmt: str):
    if fmt == "csv":
        text = report.to_csv_text()
    elif fmt == "json":
        text = json.dumps(report.to_json_dict(), indent=2) + "\n"
    else:
        text = report.to_text_table()
    Path(path).write_text(text)


def _parse_methods(raw: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in raw.split(",") if m.strip())
    if not methods:
        raise ValidationError("at least one method is required")
    return methods


def cmd_simulate(args) -> int:
    cfg = ScenarioConfig(
        scenario=Scenario(args.scenario),
        T=args.T,
        reps=args.reps,
        master_seed=args.seed,
    )
    spec = SimulationSpec(
        config=cfg,
        base_kind=ForecasterKind(args.base),
        methods=_parse_methods(args.methods),
        mintit_epsilon=args.mintit_eps,
        mintit_maxit=args.mintit_maxit,
    )
    workers = args.threads if args.threads is not None else _default_threads()
    if args.dump_panels:
        outdir = Path(args.dump_panels)
        outdir.mkdir(parents=True, exist_ok=True)
        for r in range(cfg.reps):
            _, panel = generate(cfg, r)
            io.write_wide_csv(outdir / f"rep_{r:05d}.csv", panel.labels, panel.values)
    if args.dump_raw:
        # Keep per-rep tables: run sequentially through run_rep for the dump,
        # still deterministic, then aggregate the same list.
        results = [run_rep(spec, r) for r in range(cfg.reps)]
        h = scenario_tree(cfg.scenario)
        groups = level_groups(h)
        win = windows_for(cfg.T, cfg.holdout_h, large=cfg.scenario is Scenario.LARGE)
        name_of = {
            idx: name for name, indices in groups for idx in indices
        }
        io.write_raw_results(
            args.dump_raw,
            results,
            node_labels=h.labels,
            node_levels=tuple(name_of[i] for i in range(h.n_nodes)),
            window_labels=win.labels,
        )
        report = build_report(
            results,
            groups,
            win.labels,
            meta={
                "scenario": cfg.scenario.value,
                "T": str(cfg.T),
                "holdout": str(cfg.holdout_h),
                "seed": str(cfg.master_seed),
                "base": spec.base_kind.value,
            },
        )
    else:
        report = run_simulation(spec, workers=workers)
    _write_report(report, args.out, args.format)
    return 0


def cmd_reconcile(args) -> int:
    h = io.load_hierarchy(args.hierarchy)
    smat = build_structure_matrix(h)
    base = io.load_forecast_csv(args.forecasts, h)
    residuals = None
    if args.residuals:
        residuals = io.load_panel_csv(args.residuals, h)

    if args.method in MINTIT_METHODS:
        if residuals is None:
            raise ValidationError(f"method {args.method} requires --residuals")
        mode = MINTIT_METHODS[args.method]
        if args.mintit_mode:
            mode = Mode(args.mintit_mode)
        cfg = MinTitConfig(
            mode=mode, epsilon=args.mintit_eps, max_iterations=args.mintit_maxit
        )
        result = mintit(base, residuals, h, cfg, smat=smat)
        io.write_forecast_csv(args.out, result.forecasts)
        if args.diagnostics:
            Path(args.diagnostics).write_text(
                json.dumps(
                    {
                        "iterations": result.iterations_used,
                        "converged": result.converged,
                        "change_norms": [float(x) for x in result.change_norms],
                    },
                    indent=2,
                )
                + "\n"
            )
    else:
        method = ONE_SHOT_METHODS[args.method]
        g = make_reconciler(method, smat, residuals)
        io.write_forecast_csv(args.out, reconcile(base, g, smat))
    return 0


def cmd_report(args) -> int:
    per_rep, groups, window_labels = io.read_raw_results(args.raw)
    report = build_report(per_rep, groups, window_labels)
    _write_report(report, args.out, args.format)
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "reconcile": cmd_reconcile,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
