"""Plant/workload JSON files and the CSV outputs.

Plant schema:
    {"stations": [{"id", "machines": [...], "buffer": {"id", "capacity"},
                   "conveyor": {"id", "capacity", "transit"}}],
     "main_conveyor": {"id", "capacity", "transit"},
     "max_dwell", "unload_dwell"}

Workload schema:
    {"workflows": [{"id", "arrival", "deadline",
                    "tasks": [{"id", "station", "duration",
                               "predecessors": [...]}]}]}

Metrics CSV columns (stable):
    mode, priority, selection, workflows, seed, submitted, accepted,
    assignment_rate, avg_waiting, avg_execution, wall_ms
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .domain import PlantConfig, Station, Task, Workflow
from .offline import ExecutableWorkflow, Rejection
from .simulate import MetricsReport

METRICS_COLUMNS = [
    "mode", "priority", "selection", "workflows", "seed", "submitted",
    "accepted", "assignment_rate", "avg_waiting", "avg_execution", "wall_ms",
]


class SchemaError(ValueError):
    """A plant or workload document does not match its schema."""


def _need(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing {key!r}")
    val = obj[key]
    if kind is int and isinstance(val, bool):
        raise SchemaError(f"{where}: {key!r} must be an integer")
    if not isinstance(val, kind):
        raise SchemaError(f"{where}: {key!r} has wrong type")
    return val


def plant_from_dict(doc: dict) -> PlantConfig:
    stations = []
    for i, s in enumerate(_need(doc, "stations", list, "plant")):
        where = f"stations[{i}]"
        machines = _need(s, "machines", list, where)
        if not machines or not all(isinstance(m, str) for m in machines):
            raise SchemaError(f"{where}: machines must be a nonempty list of ids")
        buf = _need(s, "buffer", dict, where)
        conv = _need(s, "conveyor", dict, where)
        stations.append(
            Station(
                id=_need(s, "id", str, where),
                machines=tuple(machines),
                buffer=_need(buf, "id", str, f"{where}.buffer"),
                buffer_capacity=_need(buf, "capacity", int, f"{where}.buffer"),
                conveyor=_need(conv, "id", str, f"{where}.conveyor"),
                conveyor_capacity=_need(conv, "capacity", int, f"{where}.conveyor"),
                conveyor_transit=_need(conv, "transit", int, f"{where}.conveyor"),
            )
        )
    main = _need(doc, "main_conveyor", dict, "plant")
    plant = PlantConfig(
        stations=tuple(stations),
        main_conveyor=_need(main, "id", str, "main_conveyor"),
        main_capacity=_need(main, "capacity", int, "main_conveyor"),
        main_transit=_need(main, "transit", int, "main_conveyor"),
        max_dwell=_need(doc, "max_dwell", int, "plant"),
        unload_dwell=_need(doc, "unload_dwell", int, "plant"),
    )
    try:
        plant.check()
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    return plant


def plant_to_dict(plant: PlantConfig) -> dict:
    return {
        "stations": [
            {
                "id": s.id,
                "machines": list(s.machines),
                "buffer": {"id": s.buffer, "capacity": s.buffer_capacity},
                "conveyor": {
                    "id": s.conveyor,
                    "capacity": s.conveyor_capacity,
                    "transit": s.conveyor_transit,
                },
            }
            for s in plant.stations
        ],
        "main_conveyor": {
            "id": plant.main_conveyor,
            "capacity": plant.main_capacity,
            "transit": plant.main_transit,
        },
        "max_dwell": plant.max_dwell,
        "unload_dwell": plant.unload_dwell,
    }


def load_plant(path: str) -> PlantConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return plant_from_dict(doc)


def save_plant(plant: PlantConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(plant_to_dict(plant), fh, indent=2)
        fh.write("\n")


def workflows_from_dict(doc: dict) -> list[Workflow]:
    out = []
    for i, w in enumerate(_need(doc, "workflows", list, "workload")):
        where = f"workflows[{i}]"
        tasks = []
        for j, t in enumerate(_need(w, "tasks", list, where)):
            tw = f"{where}.tasks[{j}]"
            preds = _need(t, "predecessors", list, tw)
            if not all(isinstance(p, str) for p in preds):
                raise SchemaError(f"{tw}: predecessors must be task ids")
            tasks.append(
                Task(
                    id=_need(t, "id", str, tw),
                    station=_need(t, "station", str, tw),
                    duration=_need(t, "duration", int, tw),
                    predecessors=frozenset(preds),
                )
            )
        out.append(
            Workflow(
                id=_need(w, "id", str, where),
                tasks=tuple(tasks),
                arrival=_need(w, "arrival", int, where),
                deadline=_need(w, "deadline", int, where),
            )
        )
    return out


def workflows_to_dict(workflows: list[Workflow]) -> dict:
    return {
        "workflows": [
            {
                "id": w.id,
                "arrival": w.arrival,
                "deadline": w.deadline,
                "tasks": [
                    {
                        "id": t.id,
                        "station": t.station,
                        "duration": t.duration,
                        "predecessors": sorted(t.predecessors),
                    }
                    for t in w.tasks
                ],
            }
            for w in workflows
        ]
    }


def load_workload(path: str) -> list[Workflow]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return workflows_from_dict(doc)


def save_workload(workflows: list[Workflow], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(workflows_to_dict(workflows), fh, indent=2)
        fh.write("\n")


@dataclass
class MetricsRow:
    mode: str
    priority: str
    selection: str
    workflows: int
    seed: int | str
    submitted: int
    accepted: int
    assignment_rate: float
    avg_waiting: float | None
    avg_execution: float | None
    wall_ms: float

    @classmethod
    def from_report(cls, report: MetricsReport, workflows: int, wall_ms: float) -> "MetricsRow":
        return cls(
            mode=report.mode,
            priority=report.priority or "",
            selection=report.selection,
            workflows=workflows,
            seed=report.seed if report.seed is not None else "",
            submitted=report.submitted,
            accepted=report.accepted,
            assignment_rate=report.assignment_rate,
            avg_waiting=report.avg_waiting,
            avg_execution=report.avg_execution,
            wall_ms=wall_ms,
        )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(rows: list[MetricsRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for r in rows:
            w.writerow(
                [
                    r.mode, r.priority, r.selection, _cell(r.workflows), _cell(r.seed),
                    _cell(r.submitted), _cell(r.accepted), _cell(r.assignment_rate),
                    _cell(r.avg_waiting), _cell(r.avg_execution), _cell(r.wall_ms),
                ]
            )


def write_workflow_summary(
    path: str,
    schedules: list[ExecutableWorkflow],
    rejections: list[Rejection],
) -> None:
    """Per-workflow outcome: id, accepted, start, completion, deadline."""
    rows = []
    for ex in schedules:
        rows.append([ex.id, 1, ex.planned_start, ex.completion, ex.workflow.deadline])
    for rej in rejections:
        rows.append([rej.workflow, 0, "", "", ""])
    rows.sort(key=lambda r: r[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["workflow", "accepted", "start", "completion", "deadline"])
        w.writerows(rows)
