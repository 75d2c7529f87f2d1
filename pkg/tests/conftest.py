"""Shared fixtures and independent brute-force checkers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fmsched.domain import PlantConfig, Station, Task, Workflow
from fmsched.workload import case_study_plant


@pytest.fixture(scope="session")
def case_plant() -> PlantConfig:
    return case_study_plant()


def small_plant(
    machines_per_station: int = 2,
    main_transit: int = 5,
    conveyor_transit: int = 5,
    max_dwell: int = 60,
    unload_dwell: int = 5,
    stations: str = "XY",
    buffer_capacity: int = 2,
    conveyor_capacity: int = 2,
    main_capacity: int = 4,
) -> PlantConfig:
    plant = PlantConfig(
        stations=tuple(
            Station(
                id=sid,
                machines=tuple(f"{sid}-m{i}" for i in range(1, machines_per_station + 1)),
                buffer=f"{sid}-buf",
                buffer_capacity=buffer_capacity,
                conveyor=f"{sid}-conv",
                conveyor_capacity=conveyor_capacity,
                conveyor_transit=conveyor_transit,
            )
            for sid in stations
        ),
        main_conveyor="main",
        main_capacity=main_capacity,
        main_transit=main_transit,
        max_dwell=max_dwell,
        unload_dwell=unload_dwell,
    )
    plant.check()
    return plant


def chain_workflow(wid: str, spec: list[tuple[str, int]], arrival: int = 0, deadline: int = 10_000) -> Workflow:
    """Linear workflow from (station, duration) pairs."""
    tasks = []
    prev = None
    for i, (station, duration) in enumerate(spec, start=1):
        preds = frozenset() if prev is None else frozenset({prev})
        tid = f"t{i}"
        tasks.append(Task(tid, station, duration, preds))
        prev = tid
    return Workflow(wid, tuple(tasks), arrival, deadline)


def brute_max_overlap(starts, ends, lo: int, hi: int) -> int:
    """Tick-by-tick occupancy maximum; the slow oracle for the kernels."""
    best = 0
    for t in range(lo, hi):
        c = sum(1 for s, e in zip(starts, ends) if s <= t < e)
        best = max(best, c)
    return best


def brute_earliest(starts, ends, cap: int, not_before: int, duration: int, horizon: int):
    """Scan every integer start; the slow oracle for earliest_feasible."""
    for s in range(not_before, horizon - duration + 1):
        if brute_max_overlap(starts, ends, s, s + duration) < cap:
            return s
    return None


def occupancy_ok(reservations, capacities) -> bool:
    """Endpoint-sweep capacity check over (resource, start, end) triples."""
    per = {}
    for res, start, end in reservations:
        per.setdefault(res, []).append((start, 1))
        per[res].append((end, -1))
    for res, events in per.items():
        level = 0
        for _, delta in sorted(events):
            level += delta
            if level > capacities[res]:
                return False
    return True


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
