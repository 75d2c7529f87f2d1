"""On-arrival scheduling: book a workflow immediately against the live store.

No priority ordering is involved; the workflow's tasks are booked in a fixed
topological order (ties by task id) using the same selection strategies and
slot search as the batch scheduler.  Booking is all-or-nothing: if any task
cannot be placed, every reservation the workflow acquired is released and the
store is left exactly as it was before the arrival.
"""

from __future__ import annotations

from dataclasses import replace

from .domain import PlantConfig, Workflow, topological_order
from .offline import (
    ExecutableWorkflow,
    Rejection,
    SelectionStrategy,
    _place_task,
    default_horizon,
)
from .store import LEG_BUFFERING, ReservationStore


def schedule_on_arrival(
    w: Workflow,
    store: ReservationStore,
    selection: SelectionStrategy,
    now: int,
    plant: PlantConfig,
    horizon: int | None = None,
) -> ExecutableWorkflow | Rejection:
    """Schedule one newly arrived workflow at time ``now`` (= its arrival)."""
    if horizon is None:
        horizon = default_horizon([w], plant)
    tasks = w.task_map()
    successors = w.successors()
    succ_left = {tid: len(s) for tid, s in successors.items()}
    chains = {}
    buffer_ids = {}
    pickups: dict[str, list[int]] = {}

    for tid in topological_order(w):
        task = tasks[tid]
        preds = sorted(task.predecessors)
        if preds:
            ready = max(chains[p].machining[1] for p in preds)
            latest_start = min(chains[p].machining[1] for p in preds) + plant.max_dwell
        else:
            ready = max(now, w.arrival)
            latest_start = None
        dwell = plant.unload_dwell if not successors[tid] else plant.max_dwell

        placed, reason = _place_task(
            w, task, store, plant, selection, ready, latest_start, horizon, dwell
        )
        if placed is None:
            store.release(w.id)
            return Rejection(w.id, tid, reason)

        chains[tid] = placed.chain
        buffer_ids[tid] = placed.reservation_ids[LEG_BUFFERING]
        for p in preds:
            pickups.setdefault(p, []).append(placed.chain.start)
            succ_left[p] -= 1
            if succ_left[p] == 0:
                pchain = chains[p]
                new_end = max(max(pickups[p]), pchain.buffering[0] + 1)
                if new_end < pchain.buffering[1]:
                    store.truncate(buffer_ids[p], new_end)
                    chains[p] = replace(pchain, buffering=(pchain.buffering[0], new_end))

    planned = min(c.start for c in chains.values())
    completion = max(c.machining[1] for c in chains.values())
    return ExecutableWorkflow(w, chains, planned, completion)
