# domain/attack.py
from __future__ import annotations
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

from domain.errors import ContractViolationError

Provenance = Literal["clean", "attacked"]


def _vec3(v) -> tuple[float, ...]:
    arr = np.broadcast_to(np.asarray(v, dtype=float), (3,))
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class Absent:
    pass


@dataclass(frozen=True)
class DefaultValue:
    value: tuple[float, ...]
    noise_std: tuple[float, ...] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", _vec3(self.value))
        object.__setattr__(self, "noise_std", _vec3(self.noise_std))
        if any(s < 0 for s in self.noise_std):
            raise ContractViolationError("noise_std debe ser >= 0")


@dataclass(frozen=True)
class Erroneous:
    mu: tuple[float, ...] = (0.0, 0.0, 0.0)
    sigma: tuple[float, ...] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _vec3(self.mu))
        object.__setattr__(self, "sigma", _vec3(self.sigma))
        if any(s < 0 for s in self.sigma):
            raise ContractViolationError("sigma debe ser >= 0")


@dataclass(frozen=True)
class Stale:
    pass


@dataclass(frozen=True)
class FrequencyReduction:
    divider: int

    def __post_init__(self) -> None:
        if not 0 <= int(self.divider) <= 255:
            raise ContractViolationError(f"divisor fuera de 0..255: {self.divider}")


@dataclass(frozen=True)
class Compound:
    """Submodo por canal (p.ej. BMI055: acelerómetro ausente, giróscopo por defecto)."""
    accel: "SdaMode"
    gyro: "SdaMode"

    def __post_init__(self) -> None:
        if isinstance(self.accel, (Compound, FrequencyReduction)) or isinstance(self.gyro, (Compound, FrequencyReduction)):
            raise ContractViolationError("los submodos de Compound deben ser modos de observación simples")


SdaMode = Union[Absent, DefaultValue, Erroneous, Stale, FrequencyReduction, Compound]


def mode_label(mode: SdaMode | None) -> str:
    if mode is None:
        return "baseline"
    return {
        Absent: "absent",
        DefaultValue: "default",
        Erroneous: "erroneous",
        Stale: "stale",
        FrequencyReduction: "frequency",
        Compound: "compound",
    }[type(mode)]


@dataclass(frozen=True)
class AttackPlan:
    mode: SdaMode
    windows: tuple[tuple[float, float], ...] = ()
    injection: Literal["stream", "register"] = "stream"
    persistent: bool = False
    stale_hold: Literal["recursive", "first_window"] = "recursive"
    loop_rate: float = 400.0

    def __post_init__(self) -> None:
        wins = tuple((float(a), float(b)) for a, b in self.windows)
        for a, b in wins:
            if not b > a:
                raise ContractViolationError(f"ventana de ataque vacía [{a}, {b})")
        object.__setattr__(self, "windows", tuple(sorted(wins)))
        if self.injection not in ("stream", "register"):
            raise ContractViolationError(f"inyección desconocida: {self.injection}")
        if self.stale_hold not in ("recursive", "first_window"):
            raise ContractViolationError(f"stale_hold desconocido: {self.stale_hold}")
        if self.loop_rate <= 0:
            raise ContractViolationError("loop_rate debe ser > 0")

    @classmethod
    def single(cls, mode: SdaMode, *, start: float, duration: float, **kw) -> "AttackPlan":
        return cls(mode=mode, windows=((start, start + duration),), **kw)

    @property
    def start(self) -> float | None:
        return self.windows[0][0] if self.windows else None

    @property
    def stop(self) -> float | None:
        return self.windows[-1][1] if self.windows else None


@dataclass(frozen=True)
class AttackedReading:
    value: np.ndarray | None  # None = marcador de ausencia
    provenance: Provenance = "clean"

    @property
    def absent(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class AttackedImuSample:
    time: float
    accel: AttackedReading
    gyro: AttackedReading
    gamma: int = 0

    @property
    def fully_absent(self) -> bool:
        return self.accel.absent and self.gyro.absent
