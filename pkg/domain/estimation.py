# domain/estimation.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from domain.errors import ContractViolationError

# Orden del estado de error: [dtheta(3), dv(3), dp(3)]
ERR_DIM = 9
SourceKind = Literal["position_fix", "altitude"]


@dataclass(frozen=True)
class EkfEstimate:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    covariance: np.ndarray
    innovation: np.ndarray = field(default_factory=lambda: np.zeros(0))
    innovation_variance_ratio: float = 0.0   # y' S^-1 y / dim
    innovation_test_ratio: float = 0.0       # ratio / gate², consumido por el failsafe
    last_predict_time: float = 0.0
    angular_rate: np.ndarray = field(default_factory=lambda: np.zeros(3))
    source_ratios: tuple[tuple[str, float], ...] = ()

    @classmethod
    def initial(
        cls,
        *,
        position,
        velocity=(0.0, 0.0, 0.0),
        attitude=(1.0, 0.0, 0.0, 0.0),
        sigmas: tuple[float, float, float] = (0.02, 0.1, 0.3),
        time: float = 0.0,
    ) -> "EkfEstimate":
        s_att, s_vel, s_pos = sigmas
        P = np.diag([s_att**2] * 3 + [s_vel**2] * 3 + [s_pos**2] * 3)
        return cls(
            position=np.asarray(position, dtype=float).copy(),
            velocity=np.asarray(velocity, dtype=float).copy(),
            attitude=np.asarray(attitude, dtype=float).copy(),
            covariance=P,
            last_predict_time=time,
        )

    def max_test_ratio(self) -> float:
        if not self.source_ratios:
            return self.innovation_test_ratio
        return max(r for _, r in self.source_ratios)


@dataclass(frozen=True)
class FusionSource:
    kind: SourceKind
    reading: np.ndarray
    variance: np.ndarray | float

    def __post_init__(self) -> None:
        reading = np.atleast_1d(np.asarray(self.reading, dtype=float))
        dim = 3 if self.kind == "position_fix" else 1
        if self.kind not in ("position_fix", "altitude"):
            raise ContractViolationError(f"fuente desconocida: {self.kind}")
        if reading.shape != (dim,):
            raise ContractViolationError(f"{self.kind} requiere lectura de dimensión {dim}")
        var = np.broadcast_to(np.asarray(self.variance, dtype=float), (dim,)).copy()
        if np.any(var <= 0) or np.any(np.isnan(var)):
            raise ContractViolationError("la varianza de la fuente debe ser > 0")
        object.__setattr__(self, "reading", reading)
        object.__setattr__(self, "variance", var)

    @property
    def dim(self) -> int:
        return self.reading.shape[0]


@dataclass(frozen=True)
class EstimatorConfig:
    accel_process_sigma: float = 0.5     # m/s²/sqrt(Hz)
    gyro_process_sigma: float = 0.02     # rad/s/sqrt(Hz)
    position_process_sigma: float = 0.05  # m/sqrt(Hz)
    gravity: float = 9.81
    gate: float = 5.0
    max_predict_dt: float = 0.1
