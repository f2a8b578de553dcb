# application/use_cases/detector_eval_usecase.py
from __future__ import annotations
import logging
from typing import Any

import pandas as pd

from application.services.mmio_monitor import (
    accuracy,
    attack_detected,
    classify_windows,
    learn_bounds,
    simulate_access_trace,
)
from application.services.sensor_chip import resolve_profile
from application.services.simulator import rng_streams
from config.scenario import ScenarioConfig, config_hash
from domain.errors import ConfigError
from domain.sensors import ChipProfile
from infrastructure.filesystem.storage import ArtifactStorage

logger = logging.getLogger(__name__)


class DetectorEvalUseCase:
    """Aprende límites de acceso MMIO en vuelo limpio y puntúa trazas limpias y atacadas."""

    def __init__(
        self,
        *,
        config: ScenarioConfig,
        catalog: dict[str, ChipProfile],
        storage: ArtifactStorage,
    ) -> None:
        self.config = config
        self.catalog = catalog
        self.storage = storage

    def execute(self, *, seed: int, attack: str | None = None) -> dict[str, Any]:
        mon = self.config.monitor
        kind = attack or mon.attack
        if kind not in ("suspend", "frequency"):
            raise ConfigError(f"ataque de detector desconocido: {kind}", path="monitor.attack")
        profile = resolve_profile(mon.chip, self.catalog)
        nominal_rate = profile.gyro_output_rate / (1 + profile.reset_value(profile.rate_divider))
        poll_rate = self.config.bus.poll_rate
        rng = rng_streams(seed)["jitter"]

        common = dict(poll_rate=poll_rate, jitter=mon.jitter, burst_reads=mon.burst_reads, rng=rng)
        train = simulate_access_trace(duration=mon.train_duration, sample_rate=nominal_rate, start=0.0, **common)
        bounds = learn_bounds(train, mon.window, mon.train_duration, stride=mon.stride)

        t0 = mon.train_duration
        clean = simulate_access_trace(duration=mon.eval_duration, sample_rate=nominal_rate, start=t0, **common)
        t1 = t0 + mon.eval_duration
        # el chip suspendido deja de actualizar sus registros, pero el MCU sondea y lee
        # ráfagas al mismo ritmo: el patrón de accesos es el de vuelo limpio
        attacked_rate = nominal_rate if kind == "suspend" else mon.target_rate
        attacked = simulate_access_trace(duration=mon.eval_duration, sample_rate=attacked_rate, start=t1, **common)

        clean_v = classify_windows(clean, bounds, stride=mon.stride)
        attack_v = classify_windows(attacked, bounds, stride=mon.stride)
        report = {
            "chip": profile.name,
            "attack": kind,
            "poll_rate": poll_rate,
            "nominal_sample_rate": nominal_rate,
            "attacked_sample_rate": attacked_rate,
            "train_duration": mon.train_duration,
            "eval_duration": mon.eval_duration,
            "clean_windows": len(clean_v),
            "attack_windows": len(attack_v),
            "clean_accuracy": accuracy(clean_v, "normal"),
            "attack_accuracy": accuracy(attack_v, "anomalous"),
            "attack_detected": attack_detected(attack_v),
            "bounds": {f"0x{a:X}": [bounds.min_freq[a], bounds.max_freq[a]] for a in sorted(bounds.addresses)},
            "seed": seed,
            "config_hash": config_hash(self.config),
        }

        rows = [{"phase": "clean", "start": v.start, "verdict": v.verdict, "reasons": ";".join(v.reasons)}
                for v in clean_v]
        rows += [{"phase": "attack", "start": v.start, "verdict": v.verdict, "reasons": ";".join(v.reasons)}
                 for v in attack_v]
        self.storage.write_csv("windows.csv", pd.DataFrame(rows, columns=["phase", "start", "verdict", "reasons"]))
        self.storage.write_json("detector_report.json", report)
        logger.info("Detector MMIO (%s, %s): precisión limpia %.6f, precisión ataque %.4f",
                    profile.name, kind, report["clean_accuracy"], report["attack_accuracy"])
        return report
