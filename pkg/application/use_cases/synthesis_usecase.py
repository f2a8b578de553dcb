# application/use_cases/synthesis_usecase.py
from __future__ import annotations
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from application.services.ppo_trainer import (
    ConstantPolicy,
    PpoConfig,
    RandomPolicy,
    evaluate_policy,
    load_checkpoint,
    rollout,
    save_checkpoint,
    train,
)
from application.services.synthesis_env import SdaSynthesisEnv
from config.scenario import AttackConfig, ScenarioConfig, build_sda_mode, build_setup, config_hash
from domain.errors import ConfigError
from domain.synthesis import EnvConfig, EvaluationSummary, Policy, RewardPredicates
from domain.sensors import ChipProfile
from infrastructure.filesystem.storage import ArtifactStorage

logger = logging.getLogger(__name__)

BASELINE_POLICIES = ("never", "always", "random")


def build_env(cfg: ScenarioConfig, catalog: dict[str, ChipProfile], *, mode: str | None = None,
              checkpoint_seed: int | None = None) -> SdaSynthesisEnv:
    syn = cfg.synthesis
    setup = build_setup(cfg, catalog)
    try:
        attack = AttackConfig(mode=mode or syn.mode)
    except ValidationError as exc:
        raise ConfigError(f"modo de ataque inválido: {mode}", path="synthesis.mode") from exc
    sda = build_sda_mode(attack, setup.noise, chip=setup.chip)
    env_cfg = EnvConfig(
        checkpoint_time=syn.checkpoint_time,
        agent_step=syn.agent_step,
        max_steps=syn.max_steps,
        goal_x=syn.goal_box.x,
        goal_y=syn.goal_box.y,
        goal_z=syn.goal_box.z,
        tube_radius=syn.tube_radius,
        predicates=RewardPredicates(up_limit_deg=syn.up_limit_deg, path_radius=syn.path_radius,
                                    goal_radius=syn.goal_radius),
        variant=syn.reward_variant,
    )
    seed = cfg.seeds.master if checkpoint_seed is None else checkpoint_seed
    return SdaSynthesisEnv(setup, env_cfg, mode=sda, checkpoint_seed=seed)


def ppo_config(cfg: ScenarioConfig) -> PpoConfig:
    return PpoConfig(**cfg.trainer.model_dump())


def baseline_policy(name: str) -> Policy:
    if name == "never":
        return ConstantPolicy(0)
    if name == "always":
        return ConstantPolicy(1)
    if name == "random":
        return RandomPolicy(0.5)
    raise ConfigError(f"política base desconocida: {name}", path="policy")


def _summary_dict(s: EvaluationSummary) -> dict[str, Any]:
    return {
        "mean_reward": s.mean_reward,
        "std_reward": s.std_reward,
        "ci95": list(s.ci95),
        "mean_final_distance": s.mean_final_distance,
        "returns": list(s.returns),
        "final_distances": list(s.final_distances),
    }


class SynthesisTrainUseCase:
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

    def execute(self, *, seed: int, mode: str | None = None, total_steps: int | None = None) -> dict[str, Any]:
        env = build_env(self.config, self.catalog, mode=mode)
        ppo = ppo_config(self.config)
        if total_steps is not None:
            ppo = replace(ppo, total_steps=total_steps)

        result = train(env, ppo, seed=seed)
        self.storage.write_csv("reward_curve.csv", result.curve)
        save_checkpoint(result.policy, self.storage.path("policy.pt"), trained_steps=result.trained_steps)

        eval_seeds = [ppo.eval_seed + i for i in range(ppo.eval_episodes)]
        baselines: dict[str, Any] = {
            "initial": _summary_dict(result.initial),
            "trained": _summary_dict(result.final),
        }
        for name in ("never", "random"):
            baselines[name] = _summary_dict(evaluate_policy(baseline_policy(name), env, eval_seeds))
        baselines["eval_seeds"] = eval_seeds
        self.storage.write_json("baselines.json", baselines)
        self.storage.write_json("metadata.json", {
            "verb": "synth-train",
            "seed": seed,
            "mode": mode or self.config.synthesis.mode,
            "trained_steps": result.trained_steps,
            "config_hash": config_hash(self.config),
            "config": self.config.model_dump(mode="json"),
        })
        logger.info("Entrenamiento terminado: recompensa %.2f -> %.2f; distancia final %.1f m (nunca %.1f, aleatorio %.1f)",
                    result.initial.mean_reward, result.final.mean_reward, result.final.mean_final_distance,
                    baselines["never"]["mean_final_distance"], baselines["random"]["mean_final_distance"])
        return baselines


class SynthesisRolloutUseCase:
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

    def execute(self, *, seed: int, policy: str, mode: str | None = None) -> dict[str, Any]:
        env = build_env(self.config, self.catalog, mode=mode)
        pol = baseline_policy(policy) if policy in BASELINE_POLICIES else load_checkpoint(Path(policy))
        frame, summary = rollout(pol, env, seed)
        self.storage.write_csv("rollout.csv", frame)
        self.storage.write_json("rollout.json", {**summary, "config_hash": config_hash(self.config)})
        logger.info("Rollout %s (seed=%d): %d/%d pasos con ataque, distancia final %.1f m",
                    pol.version, seed, summary["attacked_steps"], summary["steps"], summary["final_distance"])
        return summary
