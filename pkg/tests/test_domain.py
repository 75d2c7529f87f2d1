"""Domain model: validation, structural queries, and their invariants."""

import pytest

from fmsched.domain import (
    Task,
    Workflow,
    ready_successors,
    remaining_critical_path,
    root_tasks,
    topological_order,
    validate_workflow,
)
from fmsched.workload import case_study_plant, product_a_workflow

from conftest import chain_workflow, rng, small_plant


@pytest.fixture(scope="module")
def plant():
    return case_study_plant()


def fork_join(durations=(10, 50, 100, 20)):
    d1, d2, d3, d4 = durations
    return Workflow(
        "fj",
        (
            Task("t1", "A", d1),
            Task("t2", "B", d2, frozenset({"t1"})),
            Task("t3", "C", d3, frozenset({"t1"})),
            Task("t4", "D", d4, frozenset({"t2", "t3"})),
        ),
        arrival=0,
        deadline=1000,
    )


def test_product_a_is_valid(plant):
    assert validate_workflow(product_a_workflow(), plant).ok


def test_empty_workflow_flagged(plant):
    report = validate_workflow(Workflow("w", (), 0, 10), plant)
    assert not report.ok
    assert any("empty" in v for v in report.violations)


def test_cycle_flagged(plant):
    w = Workflow(
        "w",
        (Task("a", "A", 5, frozenset({"b"})), Task("b", "B", 5, frozenset({"a"}))),
        0,
        100,
    )
    report = validate_workflow(w, plant)
    assert any("cycle" in v for v in report.violations)


def test_unknown_station_and_bad_deadline(plant):
    w = Workflow("w", (Task("a", "Z", 5),), 10, 10)
    report = validate_workflow(w, plant)
    assert any("unknown station" in v for v in report.violations)
    assert any("deadline" in v for v in report.violations)


def test_root_tasks_chain_fork_disconnected():
    chain = chain_workflow("c", [("A", 20), ("B", 50), ("C", 10)])
    assert root_tasks(chain) == {"t1"}
    fj = fork_join()
    assert root_tasks(fj) == {"t1"}
    two = Workflow("two", (Task("t1", "A", 5), Task("t2", "B", 5)), 0, 100)
    assert root_tasks(two) == {"t1", "t2"}


def test_remaining_critical_path_examples():
    chain = chain_workflow("c", [("A", 20), ("B", 50)])
    assert remaining_critical_path(chain, set()) == 70
    fj = fork_join()
    assert remaining_critical_path(fj, set()) == 130
    assert remaining_critical_path(product_a_workflow(), set()) == 550


def test_ready_successors_examples():
    chain = chain_workflow("c", [("A", 1), ("B", 1), ("C", 1)])
    assert ready_successors(chain, {"t1"}) == {"t2"}
    fj = fork_join()
    assert ready_successors(fj, {"t1"}) == {"t2", "t3"}
    assert ready_successors(chain, {"t1", "t2", "t3"}) == set()


def random_dag(gen, n_tasks, stations="ABCDE"):
    tasks = []
    for i in range(n_tasks):
        preds = {
            f"t{j + 1}" for j in range(i) if gen.random() < 0.4
        }
        tasks.append(
            Task(
                f"t{i + 1}",
                stations[int(gen.integers(0, len(stations)))],
                int(gen.integers(1, 40)),
                frozenset(preds),
            )
        )
    return Workflow("r", tuple(tasks), 0, 100000)


def test_roots_equal_ready_of_empty_and_topo_visits_all(plant):
    gen = rng(11)
    for _ in range(100):
        w = random_dag(gen, int(gen.integers(1, 8)))
        assert validate_workflow(w, plant).ok
        assert root_tasks(w) == ready_successors(w, set())
        order = topological_order(w)
        assert sorted(order) == sorted(t.id for t in w.tasks)
        seen = set()
        for tid in order:
            assert w.task_map()[tid].predecessors <= seen
            seen.add(tid)


def test_remaining_critical_path_monotone():
    gen = rng(12)
    for _ in range(50):
        w = random_dag(gen, int(gen.integers(1, 8)))
        done = set()
        prev = remaining_critical_path(w, done)
        for tid in topological_order(w):
            done.add(tid)
            cur = remaining_critical_path(w, done)
            assert cur <= prev
            prev = cur
        assert prev == 0


def test_topological_iteration_visits_once():
    gen = rng(13)
    for _ in range(50):
        w = random_dag(gen, int(gen.integers(1, 8)))
        done = set()
        visited = []
        while True:
            ready = ready_successors(w, done)
            if not ready:
                break
            tid = sorted(ready)[0]
            visited.append(tid)
            done.add(tid)
        assert sorted(visited) == sorted(t.id for t in w.tasks)


def test_plant_checks():
    plant = small_plant()
    assert plant.lead("X") == 10
    assert {r.kind for r in plant.resources()} == {"machine", "buffer", "conveyor-link"}
    with pytest.raises(KeyError):
        plant.station("nope")
