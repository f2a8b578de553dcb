# application/services/sensor_chip.py
# Emulación a nivel de registros de una IMU sondeada por bus (SPI/I2C)
from __future__ import annotations
import logging
import math
from typing import Mapping

import numpy as np

from domain.errors import UnknownProfileError
from domain.models import ImuSample
from domain.sensors import (
    BusModel,
    ChannelBehavior,
    ChipProfile,
    InjectionResult,
    RegisterFile,
    SensorResponse,
    WriteCommand,
)

logger = logging.getLogger(__name__)


class SensorChip:
    """Estado de un chip concreto: banco de registros + muestra retenida.

    Propiedad de una única simulación; no se comparte entre episodios.
    """

    def __init__(self, profile: ChipProfile, *, rng: np.random.Generator | None = None) -> None:
        self.profile = profile
        self.registers = RegisterFile(reset_values=dict(profile.reset_values))
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._latched_accel: np.ndarray | None = None
        self._latched_gyro: np.ndarray | None = None
        self._last_index: int | None = None
        self._rate_cache = self._compute_rate()

    # ───────────────────────── registros ─────────────────────────
    @property
    def divider(self) -> int:
        return self.registers.read(self.profile.rate_divider)

    @property
    def is_suspended(self) -> bool:
        reg = self.registers.read(self.profile.power_mgmt)
        return (reg & self.profile.suspend_mask) == self.profile.suspend_value

    def read_register(self, addr: int) -> int:
        return self.registers.read(addr)

    def write_register(self, addr: int, value: int, time: float) -> "SensorChip":
        was_suspended = self.is_suspended
        self.registers.write(addr, value)
        if addr == self.profile.power_mgmt:
            now = self.is_suspended
            if now != was_suspended:
                logger.info("%s: %s en t=%.4fs (0x%02X=0x%02X)",
                            self.profile.name, "suspendido" if now else "reactivado", time, addr, value)
                self._last_index = None
        elif addr == self.profile.rate_divider:
            self._rate_cache = self._compute_rate()
            self._last_index = None
            logger.info("%s: divisor=%d -> %.4f Hz en t=%.4fs",
                        self.profile.name, value, self._rate_cache, time)
        return self

    def reset(self) -> None:
        self.registers.clear()
        self._rate_cache = self._compute_rate()
        self._latched_accel = None
        self._latched_gyro = None
        self._last_index = None

    def _compute_rate(self) -> float:
        return self.profile.gyro_output_rate / (1 + self.divider)

    def effective_sample_rate(self) -> float:
        return self._rate_cache

    def response_rate(self) -> float:
        """Tasa a la que el chip entrega datos nuevos en su estado actual."""
        if self.is_suspended and self.profile.suspend_response_rate is not None:
            return self.profile.suspend_response_rate
        return self._rate_cache

    # ───────────────────────── lecturas ─────────────────────────
    def _suspended_channel(self, behavior: ChannelBehavior) -> np.ndarray | None:
        if behavior.kind == "absent":
            return None
        values = np.asarray(behavior.values, dtype=float)
        sigma = np.asarray(behavior.sigma, dtype=float)
        if np.any(sigma > 0):
            return values + self.rng.normal(0.0, 1.0, 3) * sigma
        return values.copy()

    def read_sample(self, true_sample: ImuSample, time: float) -> SensorResponse:
        rate = self.response_rate()
        index = math.floor(time * rate + 1e-9)
        fresh = self._last_index is None or index > self._last_index
        suspended = self.is_suspended

        if fresh:
            self._last_index = index
            if suspended:
                self._latched_accel = self._suspended_channel(self.profile.accel_suspend)
                self._latched_gyro = self._suspended_channel(self.profile.gyro_suspend)
            else:
                self._latched_accel = np.array(true_sample.accel, dtype=float)
                self._latched_gyro = np.array(true_sample.gyro, dtype=float)

        accel = None if self._latched_accel is None else self._latched_accel.copy()
        gyro = None if self._latched_gyro is None else self._latched_gyro.copy()
        return SensorResponse(
            time=time,
            accel=accel,
            gyro=gyro,
            fresh=fresh and not (accel is None and gyro is None),
            suspended=suspended,
        )


# ───────────────────────── API funcional ─────────────────────────
def write_register(chip: SensorChip, addr: int, value: int, time: float) -> SensorChip:
    return chip.write_register(addr, value, time)


def effective_sample_rate(chip: SensorChip) -> float:
    """gyro_output_rate / (1 + divisor)."""
    return chip.effective_sample_rate()


def read_sample(chip: SensorChip, true_sample: ImuSample, time: float) -> SensorResponse:
    return chip.read_sample(true_sample, time)


def divider_for_rate(profile: ChipProfile, rate: float) -> int:
    """Divisor entero más cercano para la tasa pedida, acotado a 0..255."""
    raw = round(profile.gyro_output_rate / rate - 1.0)
    return int(min(255, max(0, raw)))


# ───────────────────────── bus ─────────────────────────
def _offset_in_period(bus: BusModel, time: float) -> float:
    return math.fmod(time - bus.phase, bus.period) % bus.period


def is_idle(bus: BusModel, time: float) -> bool:
    offset = _offset_in_period(bus, time)
    return bus.transaction_duration < offset < bus.period


def next_idle_window(bus: BusModel, time: float) -> float:
    """Primer instante >= time en el que una inyección no colisiona."""
    if is_idle(bus, time):
        return time
    offset = _offset_in_period(bus, time)
    idle = bus.period - bus.transaction_duration
    return time - offset + bus.transaction_duration + 0.5 * idle


def inject_message(bus: BusModel, command: WriteCommand, time: float, *, chip: SensorChip) -> InjectionResult:
    if not is_idle(bus, time):
        logger.warning("Colisión en bus: inyección 0x%02X=0x%02X en t=%.6fs descartada",
                       command.register_addr, command.payload, time)
        return "collision"
    chip.write_register(command.register_addr, command.payload, time)
    logger.info("Inyección aceptada: reg 0x%02X=0x%02X en t=%.6fs",
                command.register_addr, command.payload, time)
    return "accepted"


def suspend_command(profile: ChipProfile, *, device_addr: int = 0x68, current: int | None = None) -> WriteCommand:
    base = profile.reset_value(profile.power_mgmt) if current is None else current
    payload = (base & ~profile.suspend_mask & 0xFF) | profile.suspend_value
    return WriteCommand(device_addr=device_addr, register_addr=profile.power_mgmt, payload=payload)


def resolve_profile(name: str, catalog: Mapping[str, ChipProfile]) -> ChipProfile:
    try:
        return catalog[name]
    except KeyError:
        raise UnknownProfileError(f"perfil de chip desconocido: {name!r}") from None
