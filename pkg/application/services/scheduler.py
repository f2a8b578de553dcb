# application/services/scheduler.py
# Acoplamiento del lazo rápido con la IMU: sin muestra fresca no se ejecuta ninguna tarea
from __future__ import annotations
import logging
from collections import deque
from typing import Iterable

from domain.errors import ContractViolationError
from domain.scheduler import EKF_TASK, LoopConfig, LoopTickRecord
from domain.sensors import SensorResponse

logger = logging.getLogger(__name__)

_EPS = 1e-9


class LoopScheduler:
    def __init__(self, config: LoopConfig | None = None) -> None:
        self.config = config or LoopConfig()
        self._next_due: dict[str, float | None] = {t.name: None for t in self.config.tasks}
        self._ekf_times: deque[float] = deque()
        self._last_t: float | None = None
        self._stalled_since: float | None = None

    def _due(self, name: str, rate: float, t: float) -> bool:
        if rate >= self.config.loop_rate - _EPS:
            return True
        nxt = self._next_due[name]
        if nxt is None or t >= nxt - _EPS:
            period = 1.0 / rate
            new_next = t + period if nxt is None else nxt + period
            if new_next <= t + _EPS:
                new_next = t + period
            self._next_due[name] = new_next
            return True
        return False

    def _window_rate(self, t: float) -> float:
        horizon = t - self.config.rate_window
        while self._ekf_times and self._ekf_times[0] <= horizon + _EPS:
            self._ekf_times.popleft()
        return len(self._ekf_times) / self.config.rate_window

    def tick(self, t: float, response: SensorResponse | bool, *, absent: bool = False) -> LoopTickRecord:
        if self._last_t is not None and t < self._last_t:
            raise ContractViolationError(f"tiempo no monótono en el planificador: {t} < {self._last_t}")
        self._last_t = t

        if isinstance(response, bool):
            fresh = response and not absent
        else:
            absent = response.fully_absent
            fresh = bool(response.fresh) and not absent

        tasks: list[str] = []
        if fresh:
            if self._stalled_since is not None:
                logger.info("Lazo reanudado en t=%.4fs tras %.3fs sin IMU", t, t - self._stalled_since)
                self._stalled_since = None
            for task in self.config.tasks:
                if self._due(task.name, task.rate, t):
                    tasks.append(task.name)
            if EKF_TASK in tasks:
                self._ekf_times.append(t)
        elif absent and self._stalled_since is None:
            self._stalled_since = t
            logger.warning("Lazo detenido en t=%.4fs: IMU sin datos", t)

        return LoopTickRecord(time=t, imu_fresh=fresh, tasks_run=tuple(tasks),
                              effective_ekf_rate=self._window_rate(t))


def tick(scheduler: LoopScheduler, response: SensorResponse, t: float) -> LoopTickRecord:
    return scheduler.tick(t, response)


def effective_rates(
    trace: Iterable[LoopTickRecord],
    *,
    start: float | None = None,
    stop: float | None = None,
    tasks: Iterable[str] | None = None,
) -> dict[str, float]:
    """Tasa conseguida por tarea (Hz) en [start, stop) del rastro."""
    records = list(trace)
    if not records:
        raise ContractViolationError("rastro vacío")
    if len(records) > 1:
        dt = records[1].time - records[0].time
    else:
        dt = 0.0
    t0 = records[0].time if start is None else start
    t1 = records[-1].time + dt if stop is None else stop
    duration = t1 - t0
    if duration < 1.0 - _EPS:
        raise ContractViolationError(f"el rastro debe cubrir >= 1 s (cubre {duration:.3f} s)")

    names = list(tasks) if tasks is not None else sorted({n for r in records for n in r.tasks_run})
    counts = {n: 0 for n in names}
    for r in records:
        if t0 - _EPS <= r.time < t1 - _EPS:
            for n in r.tasks_run:
                if n in counts:
                    counts[n] += 1
    return {n: c / duration for n, c in counts.items()}
