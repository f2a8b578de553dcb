# domain/scheduler.py
from __future__ import annotations
from dataclasses import dataclass, field

from domain.errors import ContractViolationError

EKF_TASK = "ekf_predict"
CONTROL_TASK = "control"
FUSION_TASK = "fusion"
CHECK_TASK = "ekf_check"
TELEMETRY_TASK = "telemetry"


@dataclass(frozen=True)
class TaskSpec:
    name: str
    rate: float  # Hz nominal


@dataclass(frozen=True)
class LoopConfig:
    loop_rate: float = 400.0
    tasks: tuple[TaskSpec, ...] = field(default_factory=lambda: (
        TaskSpec(EKF_TASK, 400.0),
        TaskSpec(CONTROL_TASK, 400.0),
        TaskSpec(FUSION_TASK, 10.0),
        TaskSpec(CHECK_TASK, 10.0),
        TaskSpec(TELEMETRY_TASK, 4.0),
    ))
    rate_window: float = 1.0

    def __post_init__(self) -> None:
        if self.loop_rate <= 0 or self.rate_window <= 0:
            raise ContractViolationError("loop_rate y rate_window deben ser > 0")
        for task in self.tasks:
            if task.rate <= 0:
                raise ContractViolationError(f"tarea {task.name}: tasa debe ser > 0")

    @classmethod
    def with_rates(cls, *, loop_rate: float = 400.0, fusion_rate: float = 10.0,
                   check_rate: float = 10.0, telemetry_rate: float = 4.0,
                   rate_window: float = 1.0) -> "LoopConfig":
        return cls(
            loop_rate=loop_rate,
            tasks=(
                TaskSpec(EKF_TASK, loop_rate),
                TaskSpec(CONTROL_TASK, loop_rate),
                TaskSpec(FUSION_TASK, fusion_rate),
                TaskSpec(CHECK_TASK, check_rate),
                TaskSpec(TELEMETRY_TASK, telemetry_rate),
            ),
            rate_window=rate_window,
        )

    def task_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tasks)


@dataclass(frozen=True)
class LoopTickRecord:
    time: float
    imu_fresh: bool
    tasks_run: tuple[str, ...]
    effective_ekf_rate: float
