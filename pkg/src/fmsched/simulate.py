"""Discrete-event replay of executable workflows plus an independent verifier.

``execute`` turns committed schedules into a time-ordered event trace (one
leg-start and leg-end per reservation boundary, one workflow-complete per
workflow).  ``verify_trace`` recomputes resource occupancy and every chain
constraint from the events alone — it deliberately shares no code with the
reservation store so it can serve as an oracle over scheduler output.

Events are totally ordered by (time, kind, workflow, task, leg); the kind
names sort so that at equal times an ending leg precedes a starting one,
matching half-open reservation intervals.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

from .domain import PlantConfig, Workflow
from .offline import (
    ExecutableWorkflow,
    PriorityStrategy,
    Rejection,
    SelectionStrategy,
    schedule_batch,
)
from .online import schedule_on_arrival
from .store import ReservationStore

EVENT_ARRIVAL = "arrival"
EVENT_LEG_START = "leg-start"
EVENT_LEG_END = "leg-end"
EVENT_COMPLETE = "workflow-complete"


@dataclass(frozen=True, order=True)
class Event:
    time: int
    kind: str
    workflow: str
    task: str = ""
    leg: str = ""
    resource: str = ""


@dataclass
class ExecutionTrace:
    """Event list plus the workflow facts the verifier needs."""

    events: list[Event]
    deadlines: dict[str, int] = field(default_factory=dict)
    edges: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    arrivals: dict[str, int] = field(default_factory=dict)


class VerificationError(RuntimeError):
    """Raised when a produced schedule fails the independent re-check."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def execute(schedules: list[ExecutableWorkflow], plant: PlantConfig) -> ExecutionTrace:
    """Replay committed schedules: leg boundaries become events, exactly."""
    events: list[Event] = []
    trace = ExecutionTrace(events)
    for ex in schedules:
        w = ex.workflow
        trace.deadlines[w.id] = w.deadline
        trace.edges[w.id] = w.edges()
        trace.arrivals[w.id] = w.arrival
        for tid in sorted(ex.chains):
            for leg, resource, (start, end) in ex.chains[tid].legs():
                events.append(Event(start, EVENT_LEG_START, w.id, tid, leg, resource))
                events.append(Event(end, EVENT_LEG_END, w.id, tid, leg, resource))
        events.append(Event(ex.completion, EVENT_COMPLETE, w.id))
    events.sort()
    return trace


_LEG_ORDER = ("transport-main", "transport-station", "machining", "buffering")


def verify_trace(trace: ExecutionTrace, plant: PlantConfig) -> list[str]:
    """Re-derive occupancy and chain constraints from events alone.

    Flags capacity exceedance, broken leg alignment, precedence and dwell
    violations, and deadline misses.  Returns violation strings (empty means
    the trace is clean).
    """
    violations: list[str] = []
    capacities = {r.id: r.capacity for r in plant.resources()}

    # pair leg-start / leg-end events per (workflow, task, leg)
    legs: dict[tuple[str, str, str], dict[str, Event]] = {}
    for ev in trace.events:
        if ev.kind not in (EVENT_LEG_START, EVENT_LEG_END):
            continue
        slot = legs.setdefault((ev.workflow, ev.task, ev.leg), {})
        if ev.kind in slot:
            violations.append(f"{ev.workflow}/{ev.task}/{ev.leg}: duplicate {ev.kind}")
        slot[ev.kind] = ev

    intervals: dict[tuple[str, str, str], tuple[int, int, str]] = {}
    for (wid, tid, leg), pair in sorted(legs.items()):
        start = pair.get(EVENT_LEG_START)
        end = pair.get(EVENT_LEG_END)
        if start is None or end is None:
            violations.append(f"{wid}/{tid}/{leg}: unpaired leg event")
            continue
        if end.time <= start.time:
            violations.append(f"{wid}/{tid}/{leg}: empty or inverted interval")
            continue
        if start.resource != end.resource:
            violations.append(f"{wid}/{tid}/{leg}: start/end on different resources")
            continue
        intervals[(wid, tid, leg)] = (start.time, end.time, start.resource)

    # capacity: sweep each resource's boundaries, ends released before starts
    per_resource: dict[str, list[tuple[int, int]]] = {}
    for (wid, tid, leg), (s, e, res) in intervals.items():
        per_resource.setdefault(res, []).append((s, 1))
        per_resource[res].append((e, -1))
    for res in sorted(per_resource):
        cap = capacities.get(res)
        if cap is None:
            violations.append(f"unknown resource {res!r} in trace")
            continue
        level = 0
        worst = 0
        for t, delta in sorted(per_resource[res]):
            level += delta
            worst = max(worst, level)
        if worst > cap:
            violations.append(f"{res}: occupancy {worst} exceeds capacity {cap}")

    # alignment within each task's chain
    tasks = sorted({(wid, tid) for (wid, tid, _leg) in intervals})
    mach_end: dict[tuple[str, str], int] = {}
    main_start: dict[tuple[str, str], int] = {}
    for wid, tid in tasks:
        got = {leg: intervals.get((wid, tid, leg)) for leg in _LEG_ORDER}
        if any(v is None for v in got.values()):
            violations.append(f"{wid}/{tid}: missing chain leg")
            continue
        t_main, t_sta, mach, buf = (got[leg] for leg in _LEG_ORDER)
        if t_sta[0] != t_main[1]:
            violations.append(f"{wid}/{tid}: station transport must start at main transport end")
        if mach[0] != t_sta[1]:
            violations.append(f"{wid}/{tid}: machining must start at station transport end")
        if buf[0] != mach[1]:
            violations.append(f"{wid}/{tid}: buffering must start at machining end")
        if buf[1] - buf[0] > plant.max_dwell:
            violations.append(f"{wid}/{tid}: buffer hold exceeds max dwell")
        mach_end[(wid, tid)] = mach[1]
        main_start[(wid, tid)] = t_main[0]

    # precedence and pickup windows along workflow edges
    for wid in sorted(trace.edges):
        for pred, succ in trace.edges[wid]:
            pe = mach_end.get((wid, pred))
            ss = main_start.get((wid, succ))
            if pe is None or ss is None:
                continue
            if ss < pe:
                violations.append(f"{wid}: {succ} departs before {pred} finishes machining")
            elif ss > pe + plant.max_dwell:
                violations.append(f"{wid}: {succ} departs after {pred}'s dwell window")

    # deadlines
    completion: dict[str, int] = {}
    for (wid, tid), end in mach_end.items():
        completion[wid] = max(completion.get(wid, 0), end)
    for wid in sorted(completion):
        deadline = trace.deadlines.get(wid)
        if deadline is not None and completion[wid] > deadline:
            violations.append(f"{wid}: completion {completion[wid]} misses deadline {deadline}")

    return violations


@dataclass
class MetricsReport:
    """Per-strategy outcome of one experiment (Fig 5/6 quantities)."""

    mode: str
    priority: str | None
    selection: str
    submitted: int
    accepted: int
    assignment_rate: float
    avg_waiting: float | None
    avg_execution: float | None
    seed: int | None = None

    @property
    def label(self) -> str:
        if self.priority:
            return f"{self.priority}-{self.selection}"
        return self.selection


@dataclass
class ExperimentOutcome:
    """Everything one experiment produced, for exports and inspection."""

    report: MetricsReport
    store: ReservationStore
    schedules: list[ExecutableWorkflow]
    rejections: list[Rejection]
    trace: ExecutionTrace


def _metrics(
    mode: str,
    priority: str | None,
    selection: str,
    submitted: int,
    schedules: list[ExecutableWorkflow],
    seed: int | None,
) -> MetricsReport:
    accepted = len(schedules)
    rate = accepted / submitted if submitted else 0.0
    waits = [ex.planned_start - ex.workflow.arrival for ex in schedules]
    execs = [ex.completion - ex.planned_start for ex in schedules]
    avg_w = sum(waits) / accepted if accepted else None
    avg_e = sum(execs) / accepted if accepted else None
    return MetricsReport(mode, priority, selection, submitted, accepted, rate, avg_w, avg_e, seed)


def offline_experiment(
    plant: PlantConfig,
    workflows: list[Workflow],
    priority: PriorityStrategy,
    selection: SelectionStrategy,
    horizon: int | None = None,
    seed: int | None = None,
) -> ExperimentOutcome:
    """schedule_batch -> execute -> verify (must be clean) -> metrics."""
    store = ReservationStore.for_plant(plant)
    schedules, rejections = schedule_batch(workflows, store, priority, selection, plant, horizon)
    trace = execute(schedules, plant)
    violations = verify_trace(trace, plant)
    if violations:
        raise VerificationError(violations)
    report = _metrics("offline", priority.value, selection.kind, len(workflows), schedules, seed)
    return ExperimentOutcome(report, store, schedules, rejections, trace)


def run_offline_experiment(
    plant: PlantConfig,
    workflows: list[Workflow],
    priority: PriorityStrategy,
    selection: SelectionStrategy,
    horizon: int | None = None,
    seed: int | None = None,
) -> MetricsReport:
    return offline_experiment(plant, workflows, priority, selection, horizon, seed).report


def online_experiment(
    plant: PlantConfig,
    workflows: list[Workflow],
    selection: SelectionStrategy,
    horizon: int | None = None,
    seed: int | None = None,
) -> ExperimentOutcome:
    """Feed arrivals in FIFO order through the on-arrival scheduler."""
    store = ReservationStore.for_plant(plant)
    schedules: list[ExecutableWorkflow] = []
    rejections: list[Rejection] = []
    for w in sorted(workflows, key=lambda w: (w.arrival, w.id)):
        out = schedule_on_arrival(w, store, selection, w.arrival, plant, horizon)
        if isinstance(out, Rejection):
            rejections.append(out)
        else:
            schedules.append(out)
    trace = execute(schedules, plant)
    for w in workflows:
        trace.arrivals[w.id] = w.arrival
        trace.events.append(Event(w.arrival, EVENT_ARRIVAL, w.id))
    trace.events.sort()
    violations = verify_trace(trace, plant)
    if violations:
        raise VerificationError(violations)
    report = _metrics("online", None, selection.kind, len(workflows), schedules, seed)
    return ExperimentOutcome(report, store, schedules, rejections, trace)


def run_online_experiment(
    plant: PlantConfig,
    workflows: list[Workflow],
    selection: SelectionStrategy,
    horizon: int | None = None,
    seed: int | None = None,
) -> MetricsReport:
    return online_experiment(plant, workflows, selection, horizon, seed).report


def export_trace_csv(trace: ExecutionTrace, path: str) -> None:
    """Write the event trace as (time, kind, workflow, task, leg, resource)."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "kind", "workflow", "task", "leg", "resource"])
        for ev in trace.events:
            w.writerow([ev.time, ev.kind, ev.workflow, ev.task, ev.leg, ev.resource])
