# domain/sensors.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from domain.errors import ContractViolationError

BehaviorKind = Literal["absent", "default", "erroneous"]
InjectionResult = Literal["accepted", "collision"]


@dataclass(frozen=True)
class ChannelBehavior:
    """Comportamiento de un sensor (acelerómetro o giróscopo) en modo suspendido."""
    kind: BehaviorKind
    values: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sigma: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind not in ("absent", "default", "erroneous"):
            raise ContractViolationError(f"comportamiento desconocido: {self.kind}")
        if len(self.values) != 3 or len(self.sigma) != 3:
            raise ContractViolationError("valores y sigma deben tener 3 ejes")
        if any(s < 0 for s in self.sigma):
            raise ContractViolationError("sigma debe ser >= 0")


@dataclass(frozen=True)
class ChipProfile:
    name: str
    gyro_output_rate: float
    power_mgmt: int
    suspend_mask: int
    suspend_value: int
    rate_divider: int
    accel_suspend: ChannelBehavior
    gyro_suspend: ChannelBehavior
    reset_values: dict[int, int] = field(default_factory=dict)
    suspend_response_rate: float | None = None
    max_rate: float | None = None
    min_accel_rate_tested: float | None = None
    min_accel_rate_allowed: float | None = None
    min_gyro_rate_tested: float | None = None
    min_gyro_rate_allowed: float | None = None

    def __post_init__(self) -> None:
        for addr in (self.power_mgmt, self.rate_divider, *self.reset_values.keys()):
            if not 0x00 <= addr <= 0xFF:
                raise ContractViolationError(f"{self.name}: dirección fuera de rango 0x{addr:X}")
        if self.gyro_output_rate <= 0:
            raise ContractViolationError(f"{self.name}: gyro_output_rate debe ser > 0")
        top = self.max_rate if self.max_rate is not None else self.gyro_output_rate
        if self.min_rate > top:
            raise ContractViolationError(f"{self.name}: tasa mínima > tasa máxima")

    @property
    def min_rate(self) -> float:
        """Tasa más baja admitida por ambos sensores (por defecto la del divisor 255)."""
        floor = self.gyro_output_rate / 256.0
        allowed = [r for r in (self.min_accel_rate_allowed, self.min_gyro_rate_allowed) if r is not None]
        return max([floor, *allowed])

    def reset_value(self, addr: int) -> int:
        return self.reset_values.get(addr, 0x00)


@dataclass
class RegisterFile:
    reset_values: dict[int, int] = field(default_factory=dict)
    values: dict[int, int] = field(default_factory=dict)

    def read(self, addr: int) -> int:
        _check_byte("dirección", addr)
        if addr in self.values:
            return self.values[addr]
        return self.reset_values.get(addr, 0x00)

    def write(self, addr: int, value: int) -> None:
        _check_byte("dirección", addr)
        _check_byte("valor", value)
        self.values[addr] = value

    def clear(self) -> None:
        self.values.clear()


def _check_byte(what: str, v: int) -> None:
    if not isinstance(v, (int, np.integer)) or not 0x00 <= int(v) <= 0xFF:
        raise ContractViolationError(f"{what} fuera de rango de byte: {v!r}")


@dataclass(frozen=True)
class WriteCommand:
    device_addr: int
    register_addr: int
    payload: int

    def __post_init__(self) -> None:
        if not 0x00 <= self.device_addr <= 0x7F:
            raise ContractViolationError(f"dirección de dispositivo inválida: {self.device_addr!r}")
        _check_byte("registro", self.register_addr)
        _check_byte("payload", self.payload)


@dataclass(frozen=True)
class BusModel:
    poll_rate: float = 400.0
    transaction_duration: float = 0.0005
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.poll_rate <= 0:
            raise ContractViolationError("poll_rate debe ser > 0")
        if not 0.0 <= self.transaction_duration < self.period:
            raise ContractViolationError("la transacción debe caber en el periodo de sondeo")

    @property
    def period(self) -> float:
        return 1.0 / self.poll_rate


@dataclass(frozen=True)
class SensorResponse:
    """Respuesta del chip a una lectura. Canal ausente -> None."""
    time: float
    accel: np.ndarray | None
    gyro: np.ndarray | None
    fresh: bool
    suspended: bool = False

    @property
    def fully_absent(self) -> bool:
        return self.accel is None and self.gyro is None
