"""Advance-reservation workflow scheduling for flexible manufacturing plants.

Workflows (DAGs of machining tasks with deadlines) are allocated to machines,
buffers, and conveyors by booking aligned reservation chains in per-resource
timeslot tables; offline list scheduling, on-arrival scheduling, a replay
simulator with an independent verifier, and a benchmark CLI sit on top.
"""

from .domain import (
    PlantConfig,
    Resource,
    Station,
    Task,
    ValidationReport,
    Workflow,
    ready_successors,
    remaining_critical_path,
    root_tasks,
    validate_workflow,
)
from .offline import (
    DS,
    IS,
    ExecutableWorkflow,
    PriorityStrategy,
    Rejection,
    ReservationChain,
    ResourceCombo,
    SelectionStrategy,
    find_task_slot,
    priority_key,
    rollback_workflow,
    schedule_batch,
    select_resources_ds,
    select_resources_is,
)
from .online import schedule_on_arrival
from .simulate import (
    Event,
    ExecutionTrace,
    MetricsReport,
    VerificationError,
    execute,
    run_offline_experiment,
    run_online_experiment,
    verify_trace,
)
from .store import CommitReport, Reservation, ReservationStore, TimeslotTable
from .workload import (
    WorkloadParams,
    case_study_plant,
    generate_workflows,
    product_a_workflow,
)

__all__ = [
    "PlantConfig", "Resource", "Station", "Task", "ValidationReport", "Workflow",
    "ready_successors", "remaining_critical_path", "root_tasks", "validate_workflow",
    "DS", "IS", "ExecutableWorkflow", "PriorityStrategy", "Rejection",
    "ReservationChain", "ResourceCombo", "SelectionStrategy", "find_task_slot",
    "priority_key", "rollback_workflow", "schedule_batch", "select_resources_ds",
    "select_resources_is", "schedule_on_arrival", "Event", "ExecutionTrace",
    "MetricsReport", "VerificationError", "execute", "run_offline_experiment",
    "run_online_experiment", "verify_trace", "CommitReport", "Reservation",
    "ReservationStore", "TimeslotTable", "WorkloadParams", "case_study_plant",
    "generate_workflows", "product_a_workflow",
]

__version__ = "0.1.0"
