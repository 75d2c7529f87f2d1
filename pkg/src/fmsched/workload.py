"""Case-study plant construction and the seeded random workflow generator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import PlantConfig, Station, Task, Workflow

PRODUCT_A_DURATIONS = (20, 50, 100, 180, 200)


def case_study_plant() -> PlantConfig:
    """Five stations A..E with five exclusive machines each.

    Per-station buffer and input conveyor hold four parts; the shared main
    conveyor holds ten pallets.  Transit times (10 ticks per main hop, 5 per
    station conveyor) and dwell limits are configurable defaults.
    """
    stations = tuple(
        Station(
            id=sid,
            machines=tuple(f"{sid}-m{i}" for i in range(1, 6)),
            buffer=f"{sid}-buf",
            buffer_capacity=4,
            conveyor=f"{sid}-conv",
            conveyor_capacity=4,
            conveyor_transit=15,
        )
        for sid in "ABCDE"
    )
    plant = PlantConfig(
        stations=stations,
        main_conveyor="main-conv",
        main_capacity=10,
        main_transit=30,
        max_dwell=120,
        unload_dwell=10,
    )
    plant.check()
    return plant


def product_a_workflow(deadline: int = 2000) -> Workflow:
    """The five-stage reference product: A(20) -> B(50) -> C(100) -> D(180) -> E(200)."""
    tasks = []
    prev = None
    for i, (sid, dur) in enumerate(zip("ABCDE", PRODUCT_A_DURATIONS), start=1):
        preds = frozenset() if prev is None else frozenset({prev})
        tid = f"t{i}"
        tasks.append(Task(tid, sid, dur, preds))
        prev = tid
    return Workflow("product-a", tuple(tasks), arrival=0, deadline=deadline)


@dataclass
class WorkloadParams:
    """Knobs of the random workflow generator.

    Deadlines are ``arrival + ceil(tightness * L)`` where L is the longest
    path weighting each task by machining time plus its transport lead, so
    tightness 1.0 is exactly achievable on an empty plant.  Arrivals spread
    uniformly over ``arrival_window`` ticks (one order stream consumed by
    either scheduling mode); "zero" drops every order at tick 0 instead.
    """

    count: int
    seed: int
    min_tasks: int = 3
    max_tasks: int = 5
    min_duration: int = 20
    max_duration: int = 200
    tightness: float = 1.3
    fork_probability: float = 0.2
    arrival_process: str = "uniform"  # "uniform" | "zero"
    arrival_window: int | None = None  # uniform default: 12 ticks per workflow

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not (1 <= self.min_tasks <= self.max_tasks):
            raise ValueError("task count range is empty")
        if not (1 <= self.min_duration <= self.max_duration):
            raise ValueError("duration range is empty")
        if self.tightness < 1.0:
            raise ValueError("tightness must be >= 1")
        if not (0.0 <= self.fork_probability <= 1.0):
            raise ValueError("fork probability must lie in [0, 1]")
        if self.arrival_process not in ("zero", "uniform"):
            raise ValueError(f"unknown arrival process {self.arrival_process!r}")


def _rng_for(seed: int, index: int) -> np.random.Generator:
    # PCG64 stream keyed by (seed, workflow index): each workflow's draw is
    # independent of the batch size and portable across platforms
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def lead_weighted_path(w: Workflow, plant: PlantConfig) -> int:
    """Longest path counting machining plus transport lead per task."""
    tasks = w.task_map()
    weights = {t.id: t.duration + plant.lead(t.station) for t in w.tasks}
    longest: dict[str, int] = {}
    best = 0
    from .domain import topological_order

    for tid in topological_order(w):
        base = max((longest[p] for p in tasks[tid].predecessors), default=0)
        longest[tid] = base + weights[tid]
        best = max(best, longest[tid])
    return best


def generate_workflows(params: WorkloadParams, plant: PlantConfig) -> list[Workflow]:
    """Deterministically generate ``params.count`` valid workflows.

    Each workflow is a chain over distinct, randomly ordered stations; with
    probability ``fork_probability`` (and at least four tasks) the second and
    third positions become a fork-join.  Fork branch durations are balanced
    within half the plant's dwell limit so the join's pickup window is always
    satisfiable on an empty plant.
    """
    station_ids = sorted(plant.station_ids())
    window = params.arrival_window
    if window is None:
        window = max(1, 12 * params.count)
    out: list[Workflow] = []
    for i in range(params.count):
        rng = _rng_for(params.seed, i)
        n = int(rng.integers(params.min_tasks, params.max_tasks + 1))
        n = min(n, len(station_ids))
        order = rng.permutation(len(station_ids))[:n]
        stations = [station_ids[int(j)] for j in order]
        durations = [int(d) for d in rng.integers(params.min_duration, params.max_duration + 1, size=n)]

        fork = n >= 4 and float(rng.random()) < params.fork_probability
        if fork:
            # keep the two branches' lead-inclusive lengths within half the
            # dwell limit so the join pickup window cannot be violated
            lead2 = plant.lead(stations[1])
            lead3 = plant.lead(stations[2])
            jitter = plant.max_dwell // 2
            target = durations[1] + lead2 - lead3
            lo = max(params.min_duration, target - jitter)
            hi = min(params.max_duration, target + jitter)
            if lo > hi:
                fork = False
            else:
                durations[2] = int(rng.integers(lo, hi + 1))

        tasks = []
        for k in range(n):
            tid = f"t{k + 1}"
            if k == 0:
                preds: frozenset[str] = frozenset()
            elif fork and k == 2:
                preds = frozenset({"t1"})
            elif fork and k == 3:
                preds = frozenset({"t2", "t3"})
            else:
                preds = frozenset({f"t{k}"})
            tasks.append(Task(tid, stations[k], durations[k], preds))

        if params.arrival_process == "uniform":
            arrival = int(rng.integers(0, window))
        else:
            arrival = 0
        wf = Workflow(f"wf-{i:04d}", tuple(tasks), arrival=arrival, deadline=arrival + 1)
        deadline = arrival + math.ceil(params.tightness * lead_weighted_path(wf, plant))
        out.append(Workflow(wf.id, wf.tasks, arrival, deadline))
    return out
