# application/services/attack.py
# Modelos de observación bajo SDA: transformación pura sobre el flujo del sensor
from __future__ import annotations
import logging
from typing import Mapping

import numpy as np

from application.services.sensor_chip import SensorChip, resolve_profile
from domain.attack import (
    Absent,
    AttackedImuSample,
    AttackedReading,
    AttackPlan,
    Compound,
    DefaultValue,
    Erroneous,
    FrequencyReduction,
    SdaMode,
    Stale,
)
from domain.errors import ContractViolationError
from domain.models import ImuNoise
from domain.sensors import ChannelBehavior, ChipProfile, SensorResponse

logger = logging.getLogger(__name__)


def apply_sda(
    y: np.ndarray | None,
    mode: SdaMode,
    gamma: int,
    last_attacked: AttackedReading | None,
    rng: np.random.Generator,
) -> AttackedReading:
    """y^a_k = (1 - γ_k) y_k + γ_k s_k para un canal."""
    if not gamma:
        return AttackedReading(value=y, provenance="clean")

    if isinstance(mode, Absent):
        return AttackedReading(value=None, provenance="attacked")
    if isinstance(mode, DefaultValue):
        value = np.asarray(mode.value, dtype=float).copy()
        std = np.asarray(mode.noise_std, dtype=float)
        if np.any(std > 0):
            value = value + rng.normal(0.0, 1.0, 3) * std
        return AttackedReading(value=value, provenance="attacked")
    if isinstance(mode, Erroneous):
        value = rng.normal(np.asarray(mode.mu), np.asarray(mode.sigma))
        return AttackedReading(value=value, provenance="attacked")
    if isinstance(mode, Stale):
        if last_attacked is None or last_attacked.value is None:
            raise ContractViolationError("Stale requiere una lectura previa inicializada")
        return AttackedReading(value=last_attacked.value.copy(), provenance="attacked")
    if isinstance(mode, FrequencyReduction):
        # la reducción de frecuencia la realiza el divisor del chip
        return AttackedReading(value=y, provenance="attacked")
    raise ContractViolationError(f"modo no aplicable a un canal: {type(mode).__name__}")


def gamma_from_plan(plan: AttackPlan | None, k: int) -> int:
    if plan is None or not plan.windows:
        return 0
    t = k / plan.loop_rate
    if plan.persistent and t >= plan.windows[0][0]:
        return 1
    for start, stop in plan.windows:
        if start <= t < stop:
            return 1
    return 0


def _mode_from_behavior(b: ChannelBehavior) -> SdaMode:
    if b.kind == "absent":
        return Absent()
    if b.kind == "default":
        return DefaultValue(value=b.values, noise_std=b.sigma)
    return Erroneous(mu=b.values, sigma=b.sigma)


def mode_from_chip(
    chip: SensorChip | ChipProfile | str,
    suspended: bool,
    *,
    catalog: Mapping[str, ChipProfile] | None = None,
) -> SdaMode:
    """Traduce el comportamiento de un perfil al vocabulario SdaMode."""
    if isinstance(chip, str):
        profile = resolve_profile(chip, catalog or {})
        divider = profile.reset_value(profile.rate_divider)
    elif isinstance(chip, SensorChip):
        profile = chip.profile
        divider = chip.divider
    else:
        profile = chip
        divider = profile.reset_value(profile.rate_divider)

    if not suspended:
        return FrequencyReduction(divider=divider)

    accel = _mode_from_behavior(profile.accel_suspend)
    gyro = _mode_from_behavior(profile.gyro_suspend)
    if isinstance(accel, Absent) and isinstance(gyro, Absent):
        return Absent()
    return Compound(accel=accel, gyro=gyro)


def default_erroneous(noise: ImuNoise, *, factor: float = 10.0) -> Compound:
    return Compound(
        accel=Erroneous(mu=(0.0, 0.0, 0.0), sigma=(factor * noise.accel_sigma,) * 3),
        gyro=Erroneous(mu=(0.0, 0.0, 0.0), sigma=(factor * noise.gyro_sigma,) * 3),
    )


class AttackInjector:
    """Aplica el plan de ataque al flujo de la IMU, recordando la última salida por canal."""

    def __init__(self, plan: AttackPlan | None, *, rng: np.random.Generator) -> None:
        self.plan = plan
        self.rng = rng
        self._last: dict[str, AttackedReading | None] = {"accel": None, "gyro": None}
        self._latched: dict[str, AttackedReading | None] = {"accel": None, "gyro": None}
        self._prev_gamma = 0

    def _channel_mode(self, channel: str) -> SdaMode:
        mode = self.plan.mode
        if isinstance(mode, Compound):
            return mode.accel if channel == "accel" else mode.gyro
        return mode

    def _stale_base(self, channel: str, onset: bool) -> AttackedReading | None:
        if self.plan.stale_hold == "first_window":
            if self._latched[channel] is None and onset:
                self._latched[channel] = self._last[channel]
            return self._latched[channel]
        return self._last[channel]

    def process(self, response: SensorResponse, gamma: int) -> AttackedImuSample:
        gamma = int(bool(gamma)) if self.plan is not None and self.plan.injection == "stream" else 0
        onset = bool(gamma) and not self._prev_gamma
        if onset:
            logger.info("SDA activo (stream) en t=%.4fs", response.time)
        elif self._prev_gamma and not gamma:
            logger.info("SDA detenido (stream) en t=%.4fs", response.time)
        self._prev_gamma = gamma

        out: dict[str, AttackedReading] = {}
        for channel, y in (("accel", response.accel), ("gyro", response.gyro)):
            if not gamma:
                reading = AttackedReading(value=y, provenance="clean")
            else:
                mode = self._channel_mode(channel)
                base = self._stale_base(channel, onset) if isinstance(mode, Stale) else None
                if isinstance(mode, Stale) and (base is None or base.value is None):
                    # sin lectura previa del canal: se replica la actual
                    base = AttackedReading(value=y, provenance="clean")
                    if base.value is None:
                        out[channel] = AttackedReading(value=None, provenance="attacked")
                        self._last[channel] = out[channel]
                        continue
                reading = apply_sda(y, mode, gamma, base, self.rng)
            out[channel] = reading
            if reading.value is not None or gamma:
                self._last[channel] = reading
        return AttackedImuSample(time=response.time, accel=out["accel"], gyro=out["gyro"], gamma=gamma)
