"""Core data model: tasks, workflows, plant resources, and structural queries.

Time is integer ticks (1 tick = 1 second).  All intervals are half-open
``[start, end)`` with ``end > start``; durations are strictly positive.  Every
value here is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MACHINE = "machine"
BUFFER = "buffer"
CONVEYOR = "conveyor-link"

MAIN_STATION = "main"


@dataclass(frozen=True)
class Task:
    """One atomic manufacturing operation within a workflow.

    ``station`` names the station whose machines can perform the operation
    (any machine of that station will do); ``duration`` is machining time in
    ticks; ``predecessors`` are task ids within the same workflow.
    """

    id: str
    station: str
    duration: int
    predecessors: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Workflow:
    """A customized-product order: a DAG of tasks plus deadline metadata."""

    id: str
    tasks: tuple[Task, ...]
    arrival: int = 0
    deadline: int = 0

    def task_map(self) -> dict[str, Task]:
        return {t.id: t for t in self.tasks}

    def edges(self) -> list[tuple[str, str]]:
        """(predecessor, successor) pairs."""
        out = []
        for t in self.tasks:
            for p in sorted(t.predecessors):
                out.append((p, t.id))
        return out

    def successors(self) -> dict[str, set[str]]:
        succ: dict[str, set[str]] = {t.id: set() for t in self.tasks}
        for p, s in self.edges():
            succ[p].add(s)
        return succ


@dataclass(frozen=True)
class Resource:
    """A reservable unit: machine, buffer, or conveyor link.

    Machines are strictly exclusive (capacity 1); buffers and conveyors admit
    up to ``capacity`` concurrent holds.  ``station`` is the owning station id
    or ``"main"`` for the inter-station conveyor.
    """

    id: str
    kind: str
    station: str
    capacity: int


@dataclass(frozen=True)
class Station:
    id: str
    machines: tuple[str, ...]
    buffer: str
    buffer_capacity: int
    conveyor: str
    conveyor_capacity: int
    conveyor_transit: int


@dataclass(frozen=True)
class PlantConfig:
    """Plant layout: stations, the shared main conveyor, and dwell limits.

    ``main_transit`` is the per-hop travel time on the main conveyor (one hop
    per inter-station transport leg).  ``max_dwell`` bounds how long a part
    may wait in a buffer for its successor's pickup; ``unload_dwell`` is the
    buffer hold applied to a workflow's terminal tasks.
    """

    stations: tuple[Station, ...]
    main_conveyor: str
    main_capacity: int
    main_transit: int
    max_dwell: int
    unload_dwell: int

    def station(self, station_id: str) -> Station:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(f"unknown station {station_id!r}")

    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]

    def resources(self) -> list[Resource]:
        out = [Resource(self.main_conveyor, CONVEYOR, MAIN_STATION, self.main_capacity)]
        for s in self.stations:
            out.append(Resource(s.conveyor, CONVEYOR, s.id, s.conveyor_capacity))
            out.append(Resource(s.buffer, BUFFER, s.id, s.buffer_capacity))
            for m in s.machines:
                out.append(Resource(m, MACHINE, s.id, 1))
        return out

    def capacity_of(self, resource_id: str) -> int:
        for r in self.resources():
            if r.id == resource_id:
                return r.capacity
        raise KeyError(f"unknown resource {resource_id!r}")

    def lead(self, station_id: str) -> int:
        """Transport lead time to a station: main hop plus input conveyor."""
        return self.main_transit + self.station(station_id).conveyor_transit

    def check(self) -> None:
        """Raise ValueError on an inconsistent layout."""
        ids: list[str] = [r.id for r in self.resources()]
        if len(ids) != len(set(ids)):
            raise ValueError("resource ids must be globally unique")
        if self.main_transit < 1 or self.max_dwell < 1 or self.unload_dwell < 1:
            raise ValueError("transit times and dwells must be >= 1 tick")
        for s in self.stations:
            if s.conveyor_transit < 1:
                raise ValueError(f"station {s.id}: conveyor transit must be >= 1 tick")
            if s.buffer_capacity < 1 or s.conveyor_capacity < 1:
                raise ValueError(f"station {s.id}: capacities must be >= 1")
            if not s.machines:
                raise ValueError(f"station {s.id}: needs at least one machine")


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_workflow(w: Workflow, plant: PlantConfig) -> ValidationReport:
    """Check every workflow invariant; violations are returned, never raised."""
    v: list[str] = []
    if not w.tasks:
        v.append("empty workflow")
        return ValidationReport(v)
    ids = [t.id for t in w.tasks]
    if len(ids) != len(set(ids)):
        v.append("duplicate task ids")
    known = set(ids)
    stations = set(plant.station_ids())
    for t in w.tasks:
        if t.duration < 1:
            v.append(f"task {t.id}: duration must be >= 1 tick")
        if t.station not in stations:
            v.append(f"task {t.id}: unknown station {t.station!r}")
        for p in sorted(t.predecessors):
            if p not in known:
                v.append(f"task {t.id}: unresolved predecessor {p!r}")
    if w.deadline <= w.arrival:
        v.append("deadline must exceed arrival")
    if w.arrival < 0:
        v.append("arrival must be >= 0")
    if not _is_acyclic(w):
        v.append("cycle detected")
    return ValidationReport(v)


def _is_acyclic(w: Workflow) -> bool:
    tasks = w.task_map()
    state: dict[str, int] = {}  # 0 in progress, 1 done

    def visit(tid: str) -> bool:
        mark = state.get(tid)
        if mark == 0:
            return False
        if mark == 1:
            return True
        state[tid] = 0
        for p in tasks[tid].predecessors:
            if p in tasks and not visit(p):
                return False
        state[tid] = 1
        return True

    return all(visit(t.id) for t in w.tasks)


def root_tasks(w: Workflow) -> set[str]:
    """Tasks with no predecessors."""
    return {t.id for t in w.tasks if not t.predecessors}


def ready_successors(w: Workflow, done: set[str]) -> set[str]:
    """Tasks not yet done whose predecessors are all done."""
    return {t.id for t in w.tasks if t.id not in done and t.predecessors <= done}


def remaining_critical_path(w: Workflow, done: set[str]) -> int:
    """Longest duration-weighted path through the unfinished tasks.

    Machining time only; transport is excluded.  ``done`` must be closed
    under predecessors.
    """
    tasks = w.task_map()
    order = topological_order(w)
    longest: dict[str, int] = {}
    best = 0
    for tid in order:
        if tid in done:
            continue
        t = tasks[tid]
        base = 0
        for p in t.predecessors:
            if p not in done and longest[p] > base:
                base = longest[p]
        longest[tid] = base + t.duration
        if longest[tid] > best:
            best = longest[tid]
    return best


def topological_order(w: Workflow) -> list[str]:
    """Deterministic topological order (ready tasks taken in id order)."""
    tasks = w.task_map()
    pending = {t.id: len(t.predecessors) for t in w.tasks}
    succ = w.successors()
    ready = sorted(tid for tid, n in pending.items() if n == 0)
    out: list[str] = []
    while ready:
        tid = ready.pop(0)
        out.append(tid)
        changed = False
        for s in succ[tid]:
            pending[s] -= 1
            if pending[s] == 0:
                ready.append(s)
                changed = True
        if changed:
            ready.sort()
    if len(out) != len(tasks):
        raise ValueError(f"workflow {w.id}: cycle detected")
    return out
