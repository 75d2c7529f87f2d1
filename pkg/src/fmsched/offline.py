"""Offline list scheduling with priority rules and resource-selection strategies.

The batch scheduler seeds a ready list with every workflow's root tasks, then
repeatedly pops the task with the smallest priority key, picks a resource
combination (detached or integrated selection), and books the task's aligned
reservation chain: main-conveyor transport, station-conveyor transport,
machining, and a buffer hold.  A task that cannot be booked rejects its whole
workflow (all of its reservations are released); other workflows are never
touched.

Priority rules:
  cd   closest deadline (ascending absolute deadline)
  rcd  relatively closest deadline (slack-to-remaining-work ratio)
  lu   least utilized station machine pool first
  mu   most utilized station machine pool first

Selection strategies:
  ds   detached: machine by earliest machine-table slot, then conveyors and
       buffer by lowest utilization
  is   integrated: every combination scored jointly by weighted chain finish
       time and mean resource utilization
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

from .domain import PlantConfig, Task, Workflow, remaining_critical_path, root_tasks
from .store import (
    LEG_BUFFERING,
    LEG_MACHINING,
    LEG_TRANSPORT_MAIN,
    LEG_TRANSPORT_STATION,
    ReservationStore,
)
from . import kernels

REASON_DEADLINE = "deadline-infeasible"
REASON_NO_SLOT = "no-resource-slot"
REASON_DWELL = "dwell-window-exceeded"


class PriorityStrategy(str, Enum):
    CD = "cd"
    RCD = "rcd"
    LU = "lu"
    MU = "mu"


@dataclass(frozen=True)
class SelectionStrategy:
    """Resource selection mode; alpha/beta weight finish time vs load for IS."""

    kind: str
    alpha: float = 0.7
    beta: float = 0.3

    def __post_init__(self):
        if self.kind not in ("ds", "is"):
            raise ValueError(f"unknown selection strategy {self.kind!r}")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("selection weights must lie in [0, 1]")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError("selection weights must sum to 1")


DS = SelectionStrategy("ds")
IS = SelectionStrategy("is")


@dataclass(frozen=True)
class ResourceCombo:
    machine: str
    station_conveyor: str
    main_conveyor: str
    buffer: str


@dataclass(frozen=True)
class ReservationChain:
    """The four aligned legs of one task, as half-open intervals.

    Transports and machining abut exactly; buffering starts at machining end.
    """

    combo: ResourceCombo
    transport_main: tuple[int, int]
    transport_station: tuple[int, int]
    machining: tuple[int, int]
    buffering: tuple[int, int]

    @property
    def start(self) -> int:
        return self.transport_main[0]

    @property
    def completion(self) -> int:
        return self.machining[1]

    def legs(self) -> list[tuple[str, str, tuple[int, int]]]:
        """(leg name, resource, interval) triples in chain order."""
        return [
            (LEG_TRANSPORT_MAIN, self.combo.main_conveyor, self.transport_main),
            (LEG_TRANSPORT_STATION, self.combo.station_conveyor, self.transport_station),
            (LEG_MACHINING, self.combo.machine, self.machining),
            (LEG_BUFFERING, self.combo.buffer, self.buffering),
        ]


@dataclass
class ExecutableWorkflow:
    workflow: Workflow
    chains: dict[str, ReservationChain]
    planned_start: int
    completion: int

    @property
    def id(self) -> str:
        return self.workflow.id


@dataclass(frozen=True)
class Rejection:
    workflow: str
    task: str | None
    reason: str


def priority_key(
    task: Task,
    workflow: Workflow,
    store: ReservationStore,
    plant: PlantConfig,
    strategy: PriorityStrategy,
    now: int,
    horizon: int,
    done: frozenset[str] = frozenset(),
):
    """Comparable key for a ready task; ascending keys schedule first.

    Ties are broken by (workflow id, task id) in the scheduler loop.
    """
    if strategy is PriorityStrategy.CD:
        return workflow.deadline
    if strategy is PriorityStrategy.RCD:
        remaining = remaining_critical_path(workflow, set(done))
        if remaining <= 0:
            raise ValueError("a ready task implies remaining work >= 1")
        return Fraction(workflow.deadline - now, remaining)
    util = station_pool_utilization(store, plant, task.station, (now, horizon))
    if strategy is PriorityStrategy.LU:
        return util
    return -util  # MU


def station_pool_utilization(
    store: ReservationStore, plant: PlantConfig, station_id: str, window: tuple[int, int]
) -> float:
    """Booked fraction of a station's machine pool over a window."""
    st = plant.station(station_id)
    lo, hi = window
    busy = 0
    for m in st.machines:
        t = store.table(m)
        busy += int(kernels.busy_sum(t.starts, t.ends, lo, hi))
    return busy / (len(st.machines) * (hi - lo))


def _station_combos(task: Task, plant: PlantConfig) -> list[ResourceCombo]:
    st = plant.station(task.station)
    return [
        ResourceCombo(m, st.conveyor, plant.main_conveyor, st.buffer)
        for m in sorted(st.machines)
    ]


def select_resources_ds(
    task: Task,
    store: ReservationStore,
    plant: PlantConfig,
    not_before: int,
    horizon: int,
) -> ResourceCombo:
    """Detached selection: machine first, transport and buffer independently.

    The machine is the station's machine with the earliest feasible machining
    slot judged on the machine table alone; conveyors and buffer are then the
    least-utilized candidates over [not_before, horizon].  Ties fall to the
    lowest resource id.
    """
    st = plant.station(task.station)
    best_machine = None
    best_slot = None
    for m in sorted(st.machines):
        # detached probe: the machine table alone, blind even to transport lead
        slot = store.table(m).earliest_feasible(not_before, task.duration, horizon)
        key = math.inf if slot is None else slot
        if best_slot is None or key < best_slot:
            best_slot = key
            best_machine = m
    window = (not_before, horizon)
    conveyor = min([st.conveyor], key=lambda r: (store.utilization(r, window), r))
    buffer = min([st.buffer], key=lambda r: (store.utilization(r, window), r))
    return ResourceCombo(best_machine, conveyor, plant.main_conveyor, buffer)


def ds_combo_candidates(
    task: Task,
    store: ReservationStore,
    plant: PlantConfig,
    not_before: int,
    horizon: int,
) -> list[ResourceCombo]:
    """The DS pick followed by alternate machines in ascending utilization.

    The retry budget on constraint violations is one alternate per machine of
    the station, so every machine ends up a candidate exactly once.
    """
    first = select_resources_ds(task, store, plant, not_before, horizon)
    st = plant.station(task.station)
    window = (not_before, horizon)
    rest = sorted(
        (m for m in st.machines if m != first.machine),
        key=lambda m: (store.utilization(m, window), m),
    )
    return [first] + [replace(first, machine=m) for m in rest]


def find_task_slot(
    task: Task,
    combo: ResourceCombo,
    not_before: int,
    deadline: int,
    store: ReservationStore,
    plant: PlantConfig,
    dwell: int | None = None,
) -> ReservationChain | None:
    """Earliest aligned chain with machining done by the deadline, or None.

    The buffer leg is reserved for ``dwell`` ticks (the plant's maximum dwell
    by default) and truncated later once the successor's pickup is known.
    """
    if not_before >= deadline:
        return None
    if dwell is None:
        dwell = plant.max_dwell
    t_main = plant.main_transit
    t_station = plant.station(task.station).conveyor_transit
    mt = store.table(combo.main_conveyor)
    ct = store.table(combo.station_conveyor)
    kt = store.table(combo.machine)
    bt = store.table(combo.buffer)
    s = int(
        kernels.chain_fit(
            mt.starts, mt.ends, mt.capacity,
            ct.starts, ct.ends, ct.capacity,
            kt.starts, kt.ends, kt.capacity,
            bt.starts, bt.ends, bt.capacity,
            t_main, t_station, task.duration, dwell,
            not_before, deadline,
        )
    )
    if s < 0:
        return None
    m_end = s + t_main
    c_end = m_end + t_station
    k_end = c_end + task.duration
    return ReservationChain(
        combo=combo,
        transport_main=(s, m_end),
        transport_station=(m_end, c_end),
        machining=(c_end, k_end),
        buffering=(k_end, k_end + dwell),
    )


def select_resources_is(
    task: Task,
    store: ReservationStore,
    plant: PlantConfig,
    not_before: int,
    deadline: int,
    horizon: int,
    selection: SelectionStrategy = IS,
    dwell: int | None = None,
    latest_start: int | None = None,
) -> tuple[ResourceCombo, ReservationChain] | None:
    """Integrated selection: jointly score every valid resource combination.

    cost = alpha * (chain completion - not_before) / horizon
         + beta  * mean utilization of the combo's four resources
    over [not_before, horizon].  Returns the minimum-cost combo with its
    chain, ties to the lowest machine id; None when no combination admits a
    chain within the deadline (and pickup window, when given).
    """
    window = (not_before, horizon)
    best = None
    best_key = None
    for combo in _station_combos(task, plant):
        chain = find_task_slot(task, combo, not_before, deadline, store, plant, dwell)
        if chain is None:
            continue
        if latest_start is not None and chain.start > latest_start:
            continue
        finish = (chain.completion - not_before) / horizon
        load = (
            store.utilization(combo.machine, window)
            + store.utilization(combo.station_conveyor, window)
            + store.utilization(combo.main_conveyor, window)
            + store.utilization(combo.buffer, window)
        ) / 4.0
        cost = selection.alpha * finish + selection.beta * load
        key = (cost, combo.machine)
        if best_key is None or key < best_key:
            best_key = key
            best = (combo, chain)
    return best


@dataclass
class _Placed:
    chain: ReservationChain
    reservation_ids: dict[str, int]  # leg -> reservation id


def _commit_chain(
    store: ReservationStore, workflow_id: str, task_id: str, chain: ReservationChain
) -> dict[str, int] | None:
    batch = [
        store.make_reservation(resource, interval[0], interval[1], workflow_id, task_id, leg)
        for leg, resource, interval in chain.legs()
    ]
    report = store.commit_batch(batch)
    if not report.ok:
        return None
    return {r.leg: r.id for r in batch}


def _place_task(
    workflow: Workflow,
    task: Task,
    store: ReservationStore,
    plant: PlantConfig,
    selection: SelectionStrategy,
    not_before: int,
    latest_start: int | None,
    horizon: int,
    dwell: int,
) -> tuple[_Placed | None, str | None]:
    """Select resources, find the aligned chain, and commit it atomically.

    Returns (placement, None) on success or (None, rejection reason).  A
    commit lost to a concurrent scheduler re-runs selection against the
    updated store.
    """
    deadline = workflow.deadline
    lead = plant.lead(task.station)
    if not_before + lead + task.duration > deadline:
        return None, REASON_DEADLINE
    for _ in range(100):
        blocked_by_window = False
        found = None
        if selection.kind == "ds":
            for combo in ds_combo_candidates(task, store, plant, not_before, horizon):
                chain = find_task_slot(task, combo, not_before, deadline, store, plant, dwell)
                if chain is None:
                    continue
                if latest_start is not None and chain.start > latest_start:
                    blocked_by_window = True
                    continue
                found = chain
                break
        else:
            pick = select_resources_is(
                task, store, plant, not_before, deadline, horizon,
                selection, dwell, latest_start,
            )
            if pick is None and latest_start is not None:
                # distinguish dwell-window blockage from plain infeasibility
                unbounded = select_resources_is(
                    task, store, plant, not_before, deadline, horizon, selection, dwell
                )
                blocked_by_window = unbounded is not None
            if pick is not None:
                found = pick[1]
        if found is None:
            return None, (REASON_DWELL if blocked_by_window else REASON_NO_SLOT)
        ids = _commit_chain(store, workflow.id, task.id, found)
        if ids is not None:
            return _Placed(found, ids), None
        # lost the slot to a concurrent commit; retry with fresh state
    return None, REASON_NO_SLOT


def default_horizon(workflows: list[Workflow], plant: PlantConfig) -> int:
    """Latest deadline plus one maximal chain length."""
    if not workflows:
        return 1
    max_deadline = max(w.deadline for w in workflows)
    max_duration = max(t.duration for w in workflows for t in w.tasks)
    max_transit = max(s.conveyor_transit for s in plant.stations)
    return max_deadline + plant.main_transit + max_transit + max_duration + plant.max_dwell


class _ReadyQueue:
    """Min-heap over (key, workflow, task) with lazy re-push on key changes.

    The scheduler re-pushes every entry whose key inputs changed, so the heap
    always holds a fresh entry per live task and stale ones are skipped.
    """

    def __init__(self, keyfunc):
        self._key = keyfunc
        self._heap: list = []
        self._live: dict[tuple[str, str], object] = {}

    def __len__(self) -> int:
        return len(self._live)

    def push(self, wid: str, tid: str) -> None:
        k = self._key(wid, tid)
        self._live[(wid, tid)] = k
        heapq.heappush(self._heap, (k, wid, tid))

    def refresh(self, entries) -> None:
        for wid, tid in entries:
            old = self._live.get((wid, tid))
            if old is None:
                continue
            k = self._key(wid, tid)
            if k != old:
                self._live[(wid, tid)] = k
                heapq.heappush(self._heap, (k, wid, tid))

    def discard(self, wid: str, tid: str) -> None:
        self._live.pop((wid, tid), None)

    def pop(self) -> tuple[str, str] | None:
        while self._heap:
            k, wid, tid = heapq.heappop(self._heap)
            if self._live.get((wid, tid)) != k:
                continue
            del self._live[(wid, tid)]
            return wid, tid
        return None


class _WorkflowState:
    def __init__(self, w: Workflow):
        self.workflow = w
        self.tasks = w.task_map()
        self.successors = w.successors()
        self.pending = {t.id: len(t.predecessors) for t in w.tasks}
        self.done: set[str] = set()
        self.chains: dict[str, ReservationChain] = {}
        self.buffer_ids: dict[str, int] = {}
        self.pickups: dict[str, list[int]] = {}
        self.succ_left = {tid: len(s) for tid, s in self.successors.items()}
        self.rejected = False
        self.stations_touched: set[str] = set()


def schedule_batch(
    workflows: list[Workflow],
    store: ReservationStore,
    priority: PriorityStrategy,
    selection: SelectionStrategy,
    plant: PlantConfig,
    horizon: int | None = None,
) -> tuple[list[ExecutableWorkflow], list[Rejection]]:
    """Schedule a batch of workflows known in advance (now = 0).

    Returns the executable workflows in workflow-id order plus one rejection
    per refused workflow.  Rejecting a workflow releases exactly its own
    reservations; previously accepted workflows are never disturbed.
    """
    now = 0
    if horizon is None:
        horizon = default_horizon(workflows, plant)
    ids = [w.id for w in workflows]
    if len(ids) != len(set(ids)):
        raise ValueError("workflow ids must be unique within a batch")

    states = {w.id: _WorkflowState(w) for w in workflows}
    util_cache: dict[str, float] = {}

    def station_util(station_id: str) -> float:
        u = util_cache.get(station_id)
        if u is None:
            u = station_pool_utilization(store, plant, station_id, (now, horizon))
            util_cache[station_id] = u
        return u

    def key(wid: str, tid: str):
        st = states[wid]
        if priority is PriorityStrategy.CD:
            return st.workflow.deadline
        if priority is PriorityStrategy.RCD:
            return Fraction(st.workflow.deadline - now, remaining_critical_path(st.workflow, st.done))
        u = station_util(st.tasks[tid].station)
        return u if priority is PriorityStrategy.LU else -u

    queue = _ReadyQueue(key)
    by_station: dict[str, set[tuple[str, str]]] = {}
    by_workflow: dict[str, set[tuple[str, str]]] = {}

    def push(wid: str, tid: str) -> None:
        queue.push(wid, tid)
        by_station.setdefault(states[wid].tasks[tid].station, set()).add((wid, tid))
        by_workflow.setdefault(wid, set()).add((wid, tid))

    def drop(wid: str, tid: str) -> None:
        queue.discard(wid, tid)
        by_station.get(states[wid].tasks[tid].station, set()).discard((wid, tid))
        by_workflow.get(wid, set()).discard((wid, tid))

    def touched_stations_changed(stations: set[str]) -> None:
        if priority not in (PriorityStrategy.LU, PriorityStrategy.MU):
            return
        affected = set()
        for s in stations:
            util_cache.pop(s, None)
            affected |= by_station.get(s, set())
        queue.refresh(sorted(affected))

    for w in sorted(workflows, key=lambda w: w.id):
        for tid in sorted(root_tasks(w)):
            push(w.id, tid)

    rejections: list[Rejection] = []

    while True:
        entry = queue.pop()
        if entry is None:
            break
        wid, tid = entry
        state = states[wid]
        by_station.get(state.tasks[tid].station, set()).discard((wid, tid))
        by_workflow.get(wid, set()).discard((wid, tid))
        task = state.tasks[tid]

        preds = sorted(task.predecessors)
        if preds:
            ready = max(state.chains[p].machining[1] for p in preds)
            latest_start = min(state.chains[p].machining[1] for p in preds) + plant.max_dwell
        else:
            ready = max(now, state.workflow.arrival)
            latest_start = None
        dwell = plant.unload_dwell if not state.successors[tid] else plant.max_dwell

        placed, reason = _place_task(
            state.workflow, task, store, plant, selection, ready, latest_start, horizon, dwell
        )
        if placed is None:
            store.release(wid)
            state.rejected = True
            rejections.append(Rejection(wid, tid, reason))
            for ewid, etid in sorted(by_workflow.get(wid, set())):
                drop(ewid, etid)
            touched_stations_changed(state.stations_touched)
            continue

        state.chains[tid] = placed.chain
        state.buffer_ids[tid] = placed.reservation_ids[LEG_BUFFERING]
        state.done.add(tid)
        state.stations_touched.add(task.station)

        # shrink each predecessor's buffer hold once its last pickup is known
        for p in preds:
            state.pickups.setdefault(p, []).append(placed.chain.start)
            state.succ_left[p] -= 1
            if state.succ_left[p] == 0:
                pchain = state.chains[p]
                new_end = max(max(state.pickups[p]), pchain.buffering[0] + 1)
                if new_end < pchain.buffering[1]:
                    store.truncate(state.buffer_ids[p], new_end)
                    state.chains[p] = replace(
                        pchain, buffering=(pchain.buffering[0], new_end)
                    )

        for s in sorted(state.successors[tid]):
            state.pending[s] -= 1
            if state.pending[s] == 0:
                push(wid, s)

        touched_stations_changed({task.station})
        if priority is PriorityStrategy.RCD:
            queue.refresh(sorted(by_workflow.get(wid, set())))

    results = []
    for w in sorted(workflows, key=lambda w: w.id):
        state = states[w.id]
        if state.rejected or len(state.done) != len(state.tasks):
            continue
        planned = min(c.start for c in state.chains.values())
        completion = max(c.machining[1] for c in state.chains.values())
        results.append(ExecutableWorkflow(w, dict(state.chains), planned, completion))
    return results, rejections


def rollback_workflow(store: ReservationStore, workflow_id: str) -> int:
    """Remove every reservation of a workflow; it may then be re-scheduled."""
    return store.release(workflow_id)
