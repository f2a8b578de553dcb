# interface_adapters/controllers/scenario_controller.py
from __future__ import annotations
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from config.scenario import AttackConfig, ScenarioConfig, chip_catalog_for, load_scenario
from config.settings import Settings
from domain.errors import ConfigError
from domain.sensors import ChipProfile
from infrastructure.filesystem.storage import ArtifactStorage
from utils.log_capture import RunLogCapture

from application.use_cases.campaign_usecase import CampaignUseCase
from application.use_cases.detector_eval_usecase import DetectorEvalUseCase
from application.use_cases.frequency_sweep_usecase import FrequencySweepUseCase
from application.use_cases.run_scenario_usecase import RunScenarioUseCase

logger = logging.getLogger(__name__)

VERBS = ("run", "campaign", "freq-sweep", "detector-eval", "synth-train", "synth-rollout")


class ScenarioController:
    """Traduce cada verbo de la CLI a su caso de uso y guarda run.log junto a los artefactos."""

    def __init__(self, settings: Settings, *, config_path: str | Path | None = None) -> None:
        self.settings = settings
        self.config: ScenarioConfig = load_scenario(config_path or settings.config_path())
        self.catalog: dict[str, ChipProfile] = chip_catalog_for(self.config, default_file=settings.chips_path())
        logger.info("Perfiles de chip disponibles: %s", ", ".join(sorted(self.catalog)))

    def _seed(self, seed: int | None) -> int:
        if seed is not None:
            return seed
        env_seed = self.settings.master_seed()
        return env_seed if env_seed is not None else self.config.seeds.master

    def _storage(self, verb: str, out: str | Path | None, label: str = "") -> ArtifactStorage:
        if out:
            return ArtifactStorage(Path(out))
        root = Path(self.config.output.directory) if self.config.output.directory else self.settings.output_root()
        return ArtifactStorage.for_run(root, verb, label=label)

    # ───────────────────────── verbos ─────────────────────────
    def _run(self, storage: ArtifactStorage, seed: int, *, mode: str | None, **_: Any) -> dict[str, Any]:
        attack = self.config.attack
        if mode:
            try:
                attack = AttackConfig.model_validate({**attack.model_dump(), "mode": mode, "label": None})
            except ValidationError as exc:
                raise ConfigError(f"modo de ataque inválido: {mode}", path="attack.mode") from exc
        uc = RunScenarioUseCase(config=self.config, catalog=self.catalog, storage=storage)
        return uc.execute(seed=seed, attack=attack)

    def _campaign(self, storage: ArtifactStorage, seed: int, *, mode: str | None, runs: int | None,
                  **_: Any) -> dict[str, Any]:
        modes = [m.strip() for m in mode.split(",") if m.strip()] if mode else None
        uc = CampaignUseCase(config=self.config, catalog=self.catalog, storage=storage,
                             workers=self.settings.SDA_WORKERS)
        campaign = uc.execute(master_seed=seed, runs=runs, modes=modes)
        return {"runs": len(campaign.runs), "modes": [s.mode for s in campaign.summaries]}

    def _freq_sweep(self, storage: ArtifactStorage, seed: int, *, runs: int | None, **_: Any) -> dict[str, Any]:
        uc = FrequencySweepUseCase(config=self.config, catalog=self.catalog, storage=storage,
                                   workers=self.settings.SDA_WORKERS)
        return uc.execute(master_seed=seed, runs=runs)

    def _detector_eval(self, storage: ArtifactStorage, seed: int, *, mode: str | None, **_: Any) -> dict[str, Any]:
        uc = DetectorEvalUseCase(config=self.config, catalog=self.catalog, storage=storage)
        return uc.execute(seed=seed, attack=mode)

    def _synth_train(self, storage: ArtifactStorage, seed: int, *, mode: str | None, steps: int | None,
                     **_: Any) -> dict[str, Any]:
        from application.use_cases.synthesis_usecase import SynthesisTrainUseCase

        uc = SynthesisTrainUseCase(config=self.config, catalog=self.catalog, storage=storage)
        return uc.execute(seed=seed, mode=mode, total_steps=steps)

    def _synth_rollout(self, storage: ArtifactStorage, seed: int, *, mode: str | None, policy: str | None,
                       **_: Any) -> dict[str, Any]:
        from application.use_cases.synthesis_usecase import SynthesisRolloutUseCase

        uc = SynthesisRolloutUseCase(config=self.config, catalog=self.catalog, storage=storage)
        return uc.execute(seed=seed, policy=policy or "random", mode=mode)

    def dispatch(self, verb: str, *, seed: int | None = None, out: str | Path | None = None,
                 **options: Any) -> tuple[dict[str, Any], Path]:
        handlers = {
            "run": self._run,
            "campaign": self._campaign,
            "freq-sweep": self._freq_sweep,
            "detector-eval": self._detector_eval,
            "synth-train": self._synth_train,
            "synth-rollout": self._synth_rollout,
        }
        if verb not in handlers:
            raise ValueError(f"verbo desconocido: {verb}")
        run_seed = self._seed(seed)
        storage = self._storage(verb, out, label=options.get("mode") or "")
        with RunLogCapture(level=self.settings.log_level(), tag=f"{verb}:{run_seed}") as cap:
            try:
                logger.info("=== %s (seed=%d) -> %s ===", verb, run_seed, storage.base)
                result = handlers[verb](storage, run_seed, **options)
                logger.info("=== %s terminado: %d avisos, %d errores ===",
                            verb, cap.count("warning"), cap.count("error"))
            finally:
                storage.write_text("run.log", cap.text())
        return result, storage.base
