# domain/control.py
from __future__ import annotations
from dataclasses import dataclass, field

import numpy as np

from domain.errors import ContractViolationError


@dataclass(frozen=True)
class MissionPlan:
    waypoints: tuple[tuple[float, float], ...]
    altitude: float
    cruise_speed: float
    lookahead: float = 1.0          # s, distancia del "carrot" = cruise_speed * lookahead
    acceptance_radius: float = 2.0  # m

    def __post_init__(self) -> None:
        wps = tuple((float(p[0]), float(p[1])) for p in self.waypoints)
        if len(wps) < 2:
            raise ContractViolationError("la misión necesita al menos 2 waypoints")
        if self.altitude <= 0:
            raise ContractViolationError("la altitud debe ser > 0")
        if self.cruise_speed <= 0:
            raise ContractViolationError("la velocidad de crucero debe ser > 0")
        object.__setattr__(self, "waypoints", wps)

    def points(self) -> np.ndarray:
        """Waypoints 3D a la altitud de misión."""
        wp = np.asarray(self.waypoints, dtype=float)
        return np.column_stack([wp, np.full(len(wp), self.altitude)])


@dataclass(frozen=True)
class PidGains:
    p: tuple[float, float, float] = (0.0, 0.0, 0.0)
    i: tuple[float, float, float] = (0.0, 0.0, 0.0)
    d: tuple[float, float, float] = (0.0, 0.0, 0.0)
    integral_limit: float = 0.0  # límite del término integral, en unidades de salida

    def __post_init__(self) -> None:
        for name in ("p", "i", "d"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (3,))
            if not np.all(np.isfinite(v)):
                raise ContractViolationError(f"ganancia {name} no finita")
            object.__setattr__(self, name, tuple(float(x) for x in v))
        if any(x < 0 for x in self.p):
            raise ContractViolationError("las ganancias P deben ser >= 0")

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.asarray(self.p), np.asarray(self.i), np.asarray(self.d)


@dataclass(frozen=True)
class ControllerGains:
    position: PidGains = field(default_factory=lambda: PidGains(p=(1.0, 1.0, 1.0)))
    velocity: PidGains = field(default_factory=lambda: PidGains(p=(2.0, 2.0, 3.0), i=(0.5, 0.5, 1.0), integral_limit=3.0))
    attitude: PidGains = field(default_factory=lambda: PidGains(p=(6.0, 6.0, 3.0)))
    rate: PidGains = field(default_factory=lambda: PidGains(p=(20.0, 20.0, 10.0), i=(5.0, 5.0, 2.0), integral_limit=20.0))
    max_tilt_deg: float = 35.0
    max_climb_rate: float = 2.0
    max_body_rate: float = 4.0


@dataclass(frozen=True)
class Setpoint:
    position: np.ndarray
    yaw: float = 0.0
    vertical_velocity: float | None = None  # override (modo aterrizaje)
    max_speed: float | None = None


@dataclass(frozen=True)
class ControllerState:
    """Integradores y errores previos de la cascada."""
    velocity_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rate_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_velocity_error: np.ndarray | None = None
    prev_rate_error: np.ndarray | None = None


@dataclass(frozen=True)
class ControlError:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    rate: np.ndarray

    def __post_init__(self) -> None:
        for name in ("position", "velocity", "attitude", "rate"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ContractViolationError(f"error de control {name} no finito")
