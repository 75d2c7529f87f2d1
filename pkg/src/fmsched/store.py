"""Per-resource reservation calendars with capacity semantics and atomic commit.

The store is the single serialization point of the system: ``commit_batch``,
``release`` and ``truncate`` are linearizable (one re-entrant lock); queries
take the same lock so they always see a consistent snapshot.  Everything else
in the package is deterministic and shares nothing mutable.

A reservation claims one resource over ``[start, end)`` on behalf of an owner
triple (workflow, task, leg).  Machines hold at most one live reservation per
instant; buffers and conveyors hold up to their capacity.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np

from . import kernels
from .domain import PlantConfig, Resource

LEG_TRANSPORT_MAIN = "transport-main"
LEG_TRANSPORT_STATION = "transport-station"
LEG_MACHINING = "machining"
LEG_BUFFERING = "buffering"

LEGS = (LEG_TRANSPORT_MAIN, LEG_TRANSPORT_STATION, LEG_MACHINING, LEG_BUFFERING)


@dataclass(frozen=True)
class Reservation:
    id: int
    resource: str
    start: int
    end: int
    workflow: str
    task: str
    leg: str

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"reservation {self.id}: end must exceed start")

    @property
    def owner(self) -> tuple[str, str, str]:
        return (self.workflow, self.task, self.leg)


@dataclass
class CommitReport:
    """Outcome of an all-or-nothing batch commit."""

    ok: bool
    conflicts: list[tuple[str, tuple[int, int]]]


class TimeslotTable:
    """Reservation calendar of one resource, ordered by start.

    Keeps parallel int64 arrays of starts/ends for the kernels; the invariant
    is that at every instant the number of covering entries is <= capacity.
    """

    def __init__(self, resource: str, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.resource = resource
        self.capacity = capacity
        self.entries: list[Reservation] = []
        self._starts = np.empty(0, np.int64)
        self._ends = np.empty(0, np.int64)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def starts(self) -> np.ndarray:
        return self._starts

    @property
    def ends(self) -> np.ndarray:
        return self._ends

    def is_feasible(self, start: int, end: int) -> bool:
        """True iff one more reservation over [start, end) fits everywhere."""
        if end <= start:
            raise ValueError("interval end must exceed start")
        return kernels.max_overlap(self._starts, self._ends, start, end) < self.capacity

    def earliest_feasible(self, not_before: int, duration: int, horizon: int) -> int | None:
        """Smallest feasible start >= not_before with start+duration <= horizon.

        Candidate starts are not_before and the ends of existing entries;
        occupancy can only drop at an entry end, so this is exhaustive.
        """
        if duration < 1:
            raise ValueError("duration must be >= 1")
        if not_before >= horizon:
            raise ValueError("not_before must precede horizon")
        s = kernels.earliest_fit(
            self._starts, self._ends, self.capacity, not_before, duration, horizon - duration
        )
        return None if s < 0 else int(s)

    def utilization(self, window: tuple[int, int]) -> float:
        """Booked fraction of capacity x window, in [0, 1]."""
        lo, hi = window
        if hi <= lo:
            raise ValueError("window end must exceed start")
        busy = int(kernels.busy_sum(self._starts, self._ends, lo, hi))
        return busy / (self.capacity * (hi - lo))

    def _insert(self, r: Reservation) -> None:
        i = int(np.searchsorted(self._starts, r.start, side="right"))
        self.entries.insert(i, r)
        self._starts = np.insert(self._starts, i, r.start)
        self._ends = np.insert(self._ends, i, r.end)

    def _remove_ids(self, ids: set[int]) -> list[Reservation]:
        removed = [r for r in self.entries if r.id in ids]
        if removed:
            keep = [i for i, r in enumerate(self.entries) if r.id not in ids]
            self.entries = [self.entries[i] for i in keep]
            self._starts = self._starts[keep]
            self._ends = self._ends[keep]
        return removed


class ReservationStore:
    """All timeslot tables of a plant plus the commit/release/truncate ops."""

    def __init__(self, resources: Iterable[Resource]):
        self.tables: dict[str, TimeslotTable] = {}
        for r in resources:
            if r.id in self.tables:
                raise ValueError(f"duplicate resource id {r.id!r}")
            self.tables[r.id] = TimeslotTable(r.id, r.capacity)
        self._lock = threading.RLock()
        self._next_id = 0
        self._owners: set[tuple[str, str, str]] = set()

    @classmethod
    def for_plant(cls, plant: PlantConfig) -> "ReservationStore":
        return cls(plant.resources())

    def table(self, resource: str) -> TimeslotTable:
        try:
            return self.tables[resource]
        except KeyError:
            raise KeyError(f"unknown resource {resource!r}") from None

    def make_reservation(
        self, resource: str, start: int, end: int, workflow: str, task: str, leg: str
    ) -> Reservation:
        """Build a reservation with a store-unique id (not yet committed)."""
        with self._lock:
            rid = self._next_id
            self._next_id += 1
        return Reservation(rid, resource, start, end, workflow, task, leg)

    def is_feasible(self, resource: str, start: int, end: int) -> bool:
        with self._lock:
            return self.table(resource).is_feasible(start, end)

    def earliest_feasible(
        self, resource: str, not_before: int, duration: int, horizon: int
    ) -> int | None:
        with self._lock:
            return self.table(resource).earliest_feasible(not_before, duration, horizon)

    def utilization(self, resource: str, window: tuple[int, int]) -> float:
        with self._lock:
            return self.table(resource).utilization(window)

    def commit_batch(self, batch: list[Reservation]) -> CommitReport:
        """Insert all reservations or none.

        Entries are checked in order against the live tables plus the already
        accepted part of the batch, so intra-batch conflicts are caught too.
        Returns a failure report naming every conflicting (resource, interval);
        on failure the store is left bit-identical to its prior state.
        """
        ids = [r.id for r in batch]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate reservation ids in batch")
        with self._lock:
            for r in batch:
                if r.owner in self._owners:
                    raise ValueError(f"owner {r.owner} already holds a live reservation")
            owners = [r.owner for r in batch]
            if len(owners) != len(set(owners)):
                raise ValueError("duplicate owner triples in batch")
            inserted: list[Reservation] = []
            conflicts: list[tuple[str, tuple[int, int]]] = []
            for r in batch:
                table = self.table(r.resource)
                if table.is_feasible(r.start, r.end):
                    table._insert(r)
                    inserted.append(r)
                else:
                    conflicts.append((r.resource, (r.start, r.end)))
            if conflicts:
                for r in inserted:
                    self.table(r.resource)._remove_ids({r.id})
                return CommitReport(False, conflicts)
            self._owners.update(owners)
            return CommitReport(True, [])

    def release(self, workflow: str, task: str | None = None) -> int:
        """Remove every live reservation of a workflow (or one of its tasks)."""
        with self._lock:
            count = 0
            for table in self.tables.values():
                ids = {
                    r.id
                    for r in table.entries
                    if r.workflow == workflow and (task is None or r.task == task)
                }
                removed = table._remove_ids(ids)
                for r in removed:
                    self._owners.discard(r.owner)
                count += len(removed)
            return count

    def truncate(self, reservation_id: int, new_end: int) -> Reservation:
        """Shorten a reservation; shrinking can never create a conflict."""
        with self._lock:
            for table in self.tables.values():
                for i, r in enumerate(table.entries):
                    if r.id == reservation_id:
                        if new_end <= r.start:
                            raise ValueError("new end must exceed start")
                        if new_end > r.end:
                            raise ValueError("truncate cannot extend a reservation")
                        updated = replace(r, end=new_end)
                        table.entries[i] = updated
                        table._ends[i] = new_end
                        return updated
        raise KeyError(f"unknown reservation id {reservation_id}")

    def reservations(self) -> Iterator[Reservation]:
        with self._lock:
            for rid in sorted(self.tables):
                yield from self.tables[rid].entries

    def find(self, workflow: str, task: str, leg: str) -> Reservation | None:
        with self._lock:
            for table in self.tables.values():
                for r in table.entries:
                    if r.owner == (workflow, task, leg):
                        return r
        return None

    def export_csv(self, path: str) -> None:
        """Dump all reservations for the trace verifier and Gantt plotting."""
        rows = sorted(
            self.reservations(), key=lambda r: (r.workflow, r.task, r.leg, r.resource)
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["workflow", "task", "leg", "resource", "start", "end"])
            for r in rows:
                w.writerow([r.workflow, r.task, r.leg, r.resource, r.start, r.end])
