# application/services/detection.py
# Failsafe del EKF: la innovación supera el umbral de forma continuada durante la ventana
from __future__ import annotations
import logging
from dataclasses import replace
from typing import Iterable

import numpy as np

from domain.detection import FailsafeState
from domain.errors import ContractViolationError

logger = logging.getLogger(__name__)

_EPS = 1e-9


def failsafe_step(fs: FailsafeState, innovation_ratio: float, dt: float, *, t: float | None = None) -> FailsafeState:
    if dt <= 0:
        raise ContractViolationError(f"dt del failsafe debe ser > 0: {dt}")
    now = fs.time + dt if t is None else t
    if fs.triggered:
        return replace(fs, time=now)

    if innovation_ratio > fs.threshold:
        since = fs.above_since if fs.above_since is not None else now
        acc = now - since
        if acc >= fs.window - _EPS:
            logger.warning("Failsafe EKF disparado en t=%.4fs (ratio=%.3f, umbral=%.3f)",
                           now, innovation_ratio, fs.threshold)
            return replace(fs, time=now, above_since=since, accumulator=max(acc, fs.window),
                           triggered=True, trigger_time=now)
        return replace(fs, time=now, above_since=since, accumulator=acc)
    return replace(fs, time=now, above_since=None, accumulator=0.0)


def calibrate_failsafe_threshold(ratios: Iterable[float], *, factor: float = 4.0, quantile: float = 0.999) -> float:
    """factor * percentil del ratio de innovación en vuelos limpios."""
    arr = np.asarray(list(ratios), dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise ContractViolationError("no hay ratios de referencia para calibrar")
    return float(factor * np.quantile(arr, quantile))
