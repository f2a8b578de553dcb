# application/services/metrics.py
# Desviación, desviación máxima, TtD/TtC y agregación de campañas
from __future__ import annotations
import logging
import math
from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from domain.errors import ContractViolationError
from domain.metrics import NA, OUTCOMES, CampaignResult, ModeSummary, RunResult, Trajectory

logger = logging.getLogger(__name__)


def _interp(traj: Trajectory, t: np.ndarray) -> np.ndarray:
    return np.column_stack([np.interp(t, traj.t, traj.xyz[:, i]) for i in range(3)])


def deviation(A: Trajectory, R: Trajectory, t: float) -> np.ndarray:
    """D_t = sqrt((A_t - R_t)^2) por eje."""
    if not (A.covers(t) and R.covers(t)):
        raise ContractViolationError(f"t={t} fuera del rango de las trayectorias")
    ts = np.array([t], dtype=float)
    return np.sqrt((_interp(A, ts)[0] - _interp(R, ts)[0]) ** 2)


def max_deviation(A: Trajectory, R: Trajectory, window: tuple[float, float]) -> np.ndarray:
    t0, t1 = window
    if not t1 >= t0:
        raise ContractViolationError(f"ventana vacía [{t0}, {t1}]")
    for t in (t0, t1):
        if not (A.covers(t) and R.covers(t)):
            raise ContractViolationError(f"extremo de ventana t={t} fuera de las trayectorias")
    inner = np.concatenate([A.t, R.t])
    inner = inner[(inner > t0) & (inner < t1)]
    ts = np.unique(np.concatenate([[t0, t1], inner]))
    return np.max(np.abs(_interp(A, ts) - _interp(R, ts)), axis=0)


def reference_trajectory(baselines: Sequence[Trajectory], *, rate_hz: float = 10.0) -> Trajectory:
    """Media de las trayectorias base remuestreadas a `rate_hz`."""
    if not baselines:
        raise ContractViolationError("se necesita al menos una trayectoria base")
    t0 = max(b.t[0] for b in baselines)
    t1 = min(b.t[-1] for b in baselines)
    if t1 <= t0:
        raise ContractViolationError("las trayectorias base no se solapan")
    n = int(math.floor((t1 - t0) * rate_hz + 1e-9)) + 1
    grid = t0 + np.arange(n) / rate_hz
    stacked = np.stack([_interp(b, grid) for b in baselines])
    return Trajectory(t=grid, xyz=stacked.mean(axis=0), role="reference")


def largest_remainder_pct(counts: Sequence[int], *, decimals: int = 2) -> list[float]:
    """Porcentajes redondeados que suman exactamente 100 (regla del mayor resto)."""
    total = sum(counts)
    if total == 0:
        return [0.0 for _ in counts]
    scale = 100 * 10**decimals
    raw = [c * scale / total for c in counts]
    floors = [math.floor(r) for r in raw]
    missing = scale - sum(floors)
    order = sorted(range(len(counts)), key=lambda i: (-(raw[i] - floors[i]), i))
    for i in order[:missing]:
        floors[i] += 1
    return [f / 10**decimals for f in floors]


def _mean_std(values: Sequence[float]) -> tuple[float | str, float | str]:
    if not values:
        return NA, NA
    arr = np.asarray(sorted(values), dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def _summarize(mode: str, runs: list[RunResult]) -> ModeSummary:
    ok = [r for r in runs if r.outcome in OUTCOMES]
    counts = [sum(1 for r in ok if r.outcome == o) for o in OUTCOMES]
    pct = dict(zip(OUTCOMES, largest_remainder_pct(counts)))
    detected = [r for r in ok if r.detected]
    detected_pct = largest_remainder_pct([len(detected), len(ok) - len(detected)])[0] if ok else 0.0

    ttd_mean, ttd_std = _mean_std([r.ttd for r in detected if r.ttd is not None])
    ttc_mean, ttc_std = _mean_std([r.ttc for r in ok if r.ttc is not None])

    devs = [r.max_deviation for r in ok if r.max_deviation is not None]
    if devs:
        arr = np.asarray(sorted(devs), dtype=float)
        dev_mean = tuple(float(v) for v in arr.mean(axis=0))
        dev_std = tuple(float(v) for v in (arr.std(axis=0, ddof=1) if len(arr) > 1 else np.zeros(3)))
    else:
        dev_mean, dev_std = NA, NA
    return ModeSummary(mode=mode, runs=len(runs), pct=pct, detected_pct=detected_pct,
                       ttd_mean=ttd_mean, ttd_std=ttd_std, ttc_mean=ttc_mean, ttc_std=ttc_std,
                       dev_mean=dev_mean, dev_std=dev_std)


def aggregate_campaign(runs: Iterable[RunResult]) -> CampaignResult:
    ordered = sorted(runs, key=lambda r: (r.mode, r.seed, r.run_id))
    if not ordered:
        raise ContractViolationError("la campaña no tiene ejecuciones")
    by_mode: dict[str, list[RunResult]] = defaultdict(list)
    for r in ordered:
        by_mode[r.mode].append(r)
    summaries = tuple(_summarize(mode, by_mode[mode]) for mode in sorted(by_mode))
    samples = tuple((r.mode, r.seed, float(r.ttd)) for r in ordered if r.detected and r.ttd is not None)
    failed = sum(1 for r in ordered if r.outcome == "error")
    if failed:
        logger.warning("%d ejecuciones con error excluidas de los porcentajes", failed)
    return CampaignResult(runs=tuple(ordered), summaries=summaries, ttd_samples=samples)


def confidence_interval_95(samples: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ContractViolationError("sin muestras")
    mean = float(arr.mean())
    if arr.size < 2 or float(arr.std(ddof=1)) == 0.0:
        return mean, mean
    low, high = stats.t.interval(0.95, arr.size - 1, loc=mean, scale=stats.sem(arr))
    return float(low), float(high)
