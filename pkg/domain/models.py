# domain/models.py
# Tipos del modelo físico: sistema lineal discreto y cuadricóptero rígido
from __future__ import annotations
from dataclasses import dataclass, field

import numpy as np

from domain.errors import ContractViolationError


def _as_matrix(name: str, value) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ContractViolationError(f"{name} debe ser una matriz 2D")
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} contiene valores no finitos")
    return arr


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self) -> None:
        A = _as_matrix("A", self.A)
        B = _as_matrix("B", self.B)
        C = _as_matrix("C", self.C)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ContractViolationError(f"A debe ser cuadrada, recibido {A.shape}")
        if B.shape[0] != n:
            raise ContractViolationError(f"B tiene {B.shape[0]} filas, se esperaban {n}")
        if C.shape[1] != n:
            raise ContractViolationError(f"C tiene {C.shape[1]} columnas, se esperaban {n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class LinearState:
    x: np.ndarray
    k: int = 0

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise ContractViolationError("estado lineal con valores no finitos")
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class VehicleState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray  # cuaternión [w, x, y, z], cuerpo -> mundo
    angular_rate: np.ndarray  # rad/s, ejes cuerpo
    time: float = 0.0

    @classmethod
    def at_rest(cls, position=(0.0, 0.0, 0.0), *, time: float = 0.0) -> "VehicleState":
        return cls(
            position=np.asarray(position, dtype=float),
            velocity=np.zeros(3),
            attitude=np.array([1.0, 0.0, 0.0, 0.0]),
            angular_rate=np.zeros(3),
            time=time,
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.position))
            and np.all(np.isfinite(self.velocity))
            and np.all(np.isfinite(self.attitude))
            and np.all(np.isfinite(self.angular_rate))
        )


@dataclass(frozen=True)
class MotorCommand:
    """Velocidades normalizadas de los cuatro motores (X: FL, FR, RR, RL)."""
    speeds: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.speeds) != 4:
            raise ContractViolationError("MotorCommand requiere 4 motores")
        if any(not (0.0 <= s <= 1.0) for s in self.speeds):
            raise ContractViolationError(f"velocidades fuera de [0,1]: {self.speeds}")

    @classmethod
    def saturated(cls, values) -> "MotorCommand":
        arr = np.clip(np.asarray(values, dtype=float).reshape(4), 0.0, 1.0)
        return cls(speeds=tuple(float(v) for v in arr))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.speeds, dtype=float)


@dataclass(frozen=True)
class ImuSample:
    time: float
    accel: np.ndarray  # fuerza específica, m/s², ejes cuerpo
    gyro: np.ndarray   # rad/s, ejes cuerpo


@dataclass(frozen=True)
class ImuNoise:
    accel_sigma: float = 0.05
    gyro_sigma: float = 0.005

    def __post_init__(self) -> None:
        if self.accel_sigma < 0 or self.gyro_sigma < 0:
            raise ContractViolationError("las sigmas de ruido deben ser >= 0")


@dataclass(frozen=True)
class QuadrotorParams:
    mass: float = 1.5
    inertia: tuple[float, float, float] = (0.02, 0.02, 0.04)
    arm_length: float = 0.25
    max_thrust: float = 8.0          # N por motor con comando 1.0
    yaw_moment_coeff: float = 0.016  # m, par de guiñada por N de empuje
    linear_damping: float = 0.25     # kg/s
    angular_damping: float = 0.0     # 1/s
    gravity: float = 9.81
    inertia_matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.mass <= 0:
            raise ContractViolationError("la masa debe ser positiva")
        if len(self.inertia) != 3 or any(i <= 0 for i in self.inertia):
            raise ContractViolationError("la inercia debe ser diagonal definida positiva")
        if self.arm_length <= 0 or self.max_thrust <= 0:
            raise ContractViolationError("brazo y empuje máximo deben ser positivos")
        object.__setattr__(self, "inertia_matrix", np.diag(np.asarray(self.inertia, dtype=float)))
