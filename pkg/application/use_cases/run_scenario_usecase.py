# application/use_cases/run_scenario_usecase.py
from __future__ import annotations
import logging
from typing import Any

from application.services.simulator import MissionSimulation, SimulationResult
from config.scenario import (
    AttackConfig,
    ScenarioConfig,
    build_attack_plan,
    build_setup,
    config_hash,
)
from domain.sensors import ChipProfile
from infrastructure.filesystem.storage import ArtifactStorage

logger = logging.getLogger(__name__)


def simulate(
    cfg: ScenarioConfig,
    catalog: dict[str, ChipProfile],
    *,
    seed: int,
    attack: AttackConfig | None = None,
    chip_name: str | None = None,
) -> SimulationResult:
    """Una misión completa con el ataque indicado (por defecto, el del escenario)."""
    setup = build_setup(cfg, catalog, chip_name=chip_name)
    atk = attack if attack is not None else cfg.attack
    plan = build_attack_plan(atk, setup.noise, loop_rate=setup.loop.loop_rate, chip=setup.chip)
    logger.info("Simulación seed=%d chip=%s ataque=%s", seed, setup.chip.name, atk.name)
    return MissionSimulation(setup, plan, seed=seed).run()


def result_summary(result: SimulationResult, *, mode: str, seed: int) -> dict[str, Any]:
    return {
        "mode": mode,
        "seed": seed,
        "outcome": result.outcome,
        "end_time": result.end_time,
        "attack_start": result.attack_start,
        "detected": result.detected,
        "failsafe_time": result.failsafe_time,
        "ttd": result.ttd,
        "ttc": result.ttc,
        "ekf_runs_in_window": result.ekf_runs_in_window,
    }


class RunScenarioUseCase:
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

    def execute(self, *, seed: int, attack: AttackConfig | None = None) -> dict[str, Any]:
        atk = attack if attack is not None else self.config.attack
        result = simulate(self.config, self.catalog, seed=seed, attack=atk)
        summary = result_summary(result, mode=atk.name, seed=seed)

        self.storage.write_csv("trace.csv", result.trace)
        self.storage.write_csv("events.csv", result.events_frame())
        self.storage.write_json("result.json", summary)
        self.storage.write_json("metadata.json", {
            "verb": "run",
            "seed": seed,
            "config_hash": config_hash(self.config),
            "config": self.config.model_dump(mode="json"),
            "attack": atk.model_dump(mode="json"),
            "chip": self.config.chip.profile,
        })
        logger.info("Ejecución %s (seed=%d): %s en t=%.2fs, detectado=%s",
                    atk.name, seed, result.outcome, result.end_time, result.detected)
        return summary

