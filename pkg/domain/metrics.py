# domain/metrics.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import pandas as pd

from domain.errors import ContractViolationError

Outcome = Literal["crash", "complete", "land", "timeout", "error"]
NA = "N.A."
# timeout: presupuesto de tiempo agotado en vuelo, sin completar ni aterrizar
OUTCOMES: tuple[str, ...] = ("crash", "complete", "land", "timeout")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    xyz: np.ndarray
    role: Literal["reference", "attacked"] = "attacked"

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float).reshape(-1)
        xyz = np.asarray(self.xyz, dtype=float).reshape(-1, 3)
        if t.size == 0 or t.size != xyz.shape[0]:
            raise ContractViolationError("Trajectory: tiempos y posiciones no coinciden")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ContractViolationError("Trajectory: tiempos no monótonos")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", xyz)

    @classmethod
    def from_frame(cls, df: pd.DataFrame, *, role: str = "attacked") -> "Trajectory":
        return cls(t=df["t"].to_numpy(), xyz=df[["x", "y", "z"]].to_numpy(), role=role)

    def covers(self, t: float) -> bool:
        return bool(self.t[0] - 1e-9 <= t <= self.t[-1] + 1e-9)


@dataclass(frozen=True)
class RunResult:
    run_id: str
    mode: str
    seed: int
    outcome: Outcome
    detected: bool
    attack_start: float | None = None
    ttd: float | None = None
    ttc: float | None = None
    end_time: float = 0.0
    max_deviation: tuple[float, float, float] | None = None
    ekf_runs_in_window: int | None = None
    error: str | None = None

    def as_row(self) -> dict[str, Any]:
        dev = self.max_deviation or (None, None, None)
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "seed": self.seed,
            "outcome": self.outcome,
            "detected": self.detected,
            "attack_start": self.attack_start,
            "ttd": self.ttd,
            "ttc": self.ttc,
            "end_time": self.end_time,
            "max_dev_x": dev[0],
            "max_dev_y": dev[1],
            "max_dev_z": dev[2],
            "ekf_runs_in_window": self.ekf_runs_in_window,
            "error": self.error,
        }


@dataclass(frozen=True)
class ModeSummary:
    mode: str
    runs: int
    pct: dict[str, float]
    detected_pct: float
    ttd_mean: float | str
    ttd_std: float | str
    ttc_mean: float | str
    ttc_std: float | str
    dev_mean: tuple[float, float, float] | str
    dev_std: tuple[float, float, float] | str


@dataclass(frozen=True)
class CampaignResult:
    runs: tuple[RunResult, ...]
    summaries: tuple[ModeSummary, ...]
    ttd_samples: tuple[tuple[str, int, float], ...] = field(default_factory=tuple)

    def outcome_table(self) -> pd.DataFrame:
        rows = []
        for s in self.summaries:
            rows.append({
                "mode": s.mode,
                "runs": s.runs,
                "pct_crash": s.pct["crash"],
                "pct_complete": s.pct["complete"],
                "pct_land": s.pct["land"],
                "pct_timeout": s.pct["timeout"],
                "pct_detected": s.detected_pct,
                "ttd_mean": s.ttd_mean,
                "ttd_std": s.ttd_std,
                "ttc_mean": s.ttc_mean,
                "ttc_std": s.ttc_std,
            })
        return pd.DataFrame(rows, columns=[
            "mode", "runs", "pct_crash", "pct_complete", "pct_land", "pct_timeout", "pct_detected",
            "ttd_mean", "ttd_std", "ttc_mean", "ttc_std",
        ])

    def deviation_table(self) -> pd.DataFrame:
        rows = []
        for s in self.summaries:
            row: dict[str, Any] = {"mode": s.mode}
            for i, axis in enumerate("xyz"):
                row[f"{axis}_mean"] = s.dev_mean if isinstance(s.dev_mean, str) else s.dev_mean[i]
                row[f"{axis}_std"] = s.dev_std if isinstance(s.dev_std, str) else s.dev_std[i]
            rows.append(row)
        return pd.DataFrame(rows, columns=["mode", "x_mean", "x_std", "y_mean", "y_std", "z_mean", "z_std"])

    def ttd_distribution(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.ttd_samples), columns=["mode", "seed", "ttd"])

    def runs_table(self) -> pd.DataFrame:
        return pd.DataFrame([r.as_row() for r in self.runs])
