"""Experiment harness: run scheduling experiments and emit metric tables.

Exit codes: 0 success, 2 invalid arguments, 3 config/schema error,
4 internal verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import files, plots
from .domain import PlantConfig, Workflow, validate_workflow
from .offline import DS, IS, PriorityStrategy, SelectionStrategy
from .simulate import (
    ExperimentOutcome,
    VerificationError,
    offline_experiment,
    online_experiment,
)
from .workload import WorkloadParams, case_study_plant, generate_workflows

PRIORITIES = [p.value for p in PriorityStrategy]
SELECTIONS = ["ds", "is"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fmsched",
        description="Workflow-to-resource scheduling experiments on a flexible manufacturing plant.",
    )
    p.add_argument("--mode", choices=["offline", "online"], default="offline")
    p.add_argument("--priority", choices=PRIORITIES, default="cd",
                   help="offline priority rule (ignored online)")
    p.add_argument("--selection", choices=SELECTIONS, default="is")
    p.add_argument("--grid", action="store_true",
                   help="run every strategy pair for the chosen mode")
    p.add_argument("--workflows", type=int, default=250,
                   help="number of generated workflows (ignored with --workload)")
    p.add_argument("--repeats", type=int, default=1,
                   help="seeds seed..seed+repeats-1, with mean rows appended")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plant", default="case-study",
                   help='"case-study" or a plant JSON path')
    p.add_argument("--workload", default=None, help="workload JSON path")
    p.add_argument("--tightness", type=float, default=1.3,
                   help="deadline slack multiplier for generated workloads")
    p.add_argument("--alpha", type=float, default=0.7,
                   help="IS weight on chain finish time")
    p.add_argument("--beta", type=float, default=0.3,
                   help="IS weight on resource load")
    p.add_argument("--out", default=None, help="metrics CSV path (default: stdout)")
    p.add_argument("--plot", default=None, help="directory for SVG charts")
    p.add_argument("--export-reservations", default=None,
                   help="reservation CSV path (single runs only); a "
                        "*.summary.csv is written next to it")
    p.add_argument("--jobs", type=int, default=0,
                   help="parallel grid cells (0 = one per CPU)")
    return p


def _selection(kind: str, alpha: float, beta: float) -> SelectionStrategy:
    if (alpha, beta) == (0.7, 0.3):
        return DS if kind == "ds" else IS
    return SelectionStrategy(kind, alpha, beta)


def _workload_for(args, plant: PlantConfig, seed: int) -> list[Workflow]:
    if args.workload:
        workflows = files.load_workload(args.workload)
        for w in workflows:
            report = validate_workflow(w, plant)
            if not report.ok:
                raise files.SchemaError(f"workflow {w.id}: " + "; ".join(report.violations))
        return workflows
    params = WorkloadParams(count=args.workflows, seed=seed, tightness=args.tightness)
    return generate_workflows(params, plant)


def _cells(args) -> list[tuple[str, str | None, str, int]]:
    """(mode, priority, selection, seed) for every requested experiment."""
    seeds = [args.seed + k for k in range(max(1, args.repeats))]
    cells = []
    if args.grid:
        if args.mode == "offline":
            pairs = [(p, s) for p in PRIORITIES for s in SELECTIONS]
        else:
            pairs = [(None, s) for s in SELECTIONS]
    else:
        pairs = [(args.priority if args.mode == "offline" else None, args.selection)]
    for seed in seeds:
        for prio, sel in pairs:
            cells.append((args.mode, prio, sel, seed))
    return cells


def _run_cell(payload) -> files.MetricsRow:
    args, (mode, prio, sel, seed) = payload
    plant = case_study_plant() if args.plant == "case-study" else files.load_plant(args.plant)
    workflows = _workload_for(args, plant, seed)
    selection = _selection(sel, args.alpha, args.beta)
    begin = time.perf_counter()
    if mode == "offline":
        outcome = offline_experiment(plant, workflows, PriorityStrategy(prio), selection, seed=seed)
    else:
        outcome = online_experiment(plant, workflows, selection, seed=seed)
    wall_ms = (time.perf_counter() - begin) * 1000.0
    return files.MetricsRow.from_report(outcome.report, len(workflows), round(wall_ms, 3))


def _mean_rows(rows: list[files.MetricsRow]) -> list[files.MetricsRow]:
    groups: dict[tuple, list[files.MetricsRow]] = {}
    for r in rows:
        groups.setdefault((r.mode, r.priority, r.selection, r.workflows), []).append(r)
    out = []
    for (mode, prio, sel, wf), members in sorted(groups.items()):
        if len(members) < 2:
            continue

        def mean(values):
            present = [v for v in values if v is not None]
            return sum(present) / len(present) if present else None

        out.append(
            files.MetricsRow(
                mode=mode, priority=prio, selection=sel, workflows=wf, seed="mean",
                submitted=members[0].submitted,
                accepted=round(sum(m.accepted for m in members) / len(members), 3),
                assignment_rate=sum(m.assignment_rate for m in members) / len(members),
                avg_waiting=mean([m.avg_waiting for m in members]),
                avg_execution=mean([m.avg_execution for m in members]),
                wall_ms=round(sum(m.wall_ms for m in members) / len(members), 3),
            )
        )
    return out


def emit_report(rows: list[files.MetricsRow], out: str | None, plot_dir: str | None,
                reservations_csv: str | None = None) -> list[str]:
    """Write the metrics CSV and optional SVG charts; returns written paths."""
    written = []
    if out:
        files.write_metrics_csv(rows, out)
        written.append(out)
    else:
        print(",".join(files.METRICS_COLUMNS))
        for r in rows:
            print(",".join(files._cell(v) for v in [
                r.mode, r.priority, r.selection, r.workflows, r.seed, r.submitted,
                r.accepted, r.assignment_rate, r.avg_waiting, r.avg_execution, r.wall_ms,
            ]))
    if plot_dir:
        os.makedirs(plot_dir, exist_ok=True)
        shown = [r for r in rows if r.seed == "mean"] or rows
        rates = os.path.join(plot_dir, "assignment_rate.svg")
        times = os.path.join(plot_dir, "times.svg")
        plots.plot_assignment_rates(shown, rates)
        plots.plot_times(shown, times)
        written += [rates, times]
        if reservations_csv:
            gantt = os.path.join(plot_dir, "gantt.svg")
            plots.plot_gantt(reservations_csv, gantt)
            written.append(gantt)
    return written


def run(args: argparse.Namespace) -> int:
    plant = case_study_plant() if args.plant == "case-study" else files.load_plant(args.plant)
    plant.check()
    cells = _cells(args)

    if args.export_reservations and len(cells) > 1:
        raise files.SchemaError("--export-reservations applies to single runs only")

    jobs = args.jobs if args.jobs > 0 else (os.cpu_count() or 1)
    payloads = [(args, cell) for cell in cells]
    if len(cells) > 1 and jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
            rows = list(pool.map(_run_cell, payloads))
    else:
        rows = [_run_cell(p) for p in payloads]

    order = {(m, p, s, seed): i for i, (m, p, s, seed) in enumerate(cells)}
    rows.sort(key=lambda r: order[(r.mode, r.priority or None, r.selection, r.seed)])
    rows = [files.MetricsRow(**{**r.__dict__, "priority": r.priority or ""}) for r in rows]
    if args.repeats > 1:
        rows = rows + _mean_rows(rows)

    reservations_csv = None
    if args.export_reservations:
        mode, prio, sel, seed = cells[0]
        workflows = _workload_for(args, plant, seed)
        selection = _selection(sel, args.alpha, args.beta)
        if mode == "offline":
            outcome = offline_experiment(plant, workflows, PriorityStrategy(prio), selection, seed=seed)
        else:
            outcome = online_experiment(plant, workflows, selection, seed=seed)
        outcome.store.export_csv(args.export_reservations)
        files.write_workflow_summary(
            args.export_reservations + ".summary.csv", outcome.schedules, outcome.rejections
        )
        reservations_csv = args.export_reservations

    emit_report(rows, args.out, args.plot, reservations_csv)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(args)
    except files.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"internal verification failure: {exc}", file=sys.stderr)
        return 4


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
