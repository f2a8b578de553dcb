# application/services/synthesis_env.py
# Entorno episódico para sintetizar calendarios de SDA: acción binaria γ por paso del agente
from __future__ import annotations
import copy
import logging
import math
from typing import Any

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from application.services.reward import distance_to_path, goal_distance, reward
from application.services.simulator import MissionSimulation, SimulationSetup, rng_streams
from domain.attack import AttackPlan, SdaMode, Stale
from domain.errors import ContractViolationError
from domain.synthesis import (
    OBS_DIM,
    AdversarialObjective,
    EnvConfig,
    EpisodeObservation,
    RewardContext,
    RewardState,
)

logger = logging.getLogger(__name__)

_MAX_GOAL_TRIES = 10_000


def euler_rates(euler: np.ndarray, body_rates: np.ndarray) -> np.ndarray:
    """Derivadas de roll/pitch/yaw (ZYX) a partir de las velocidades angulares en cuerpo."""
    phi, theta, _ = euler
    p, q, r = body_rates
    cos_t = math.cos(theta)
    if abs(cos_t) < 1e-6:
        cos_t = math.copysign(1e-6, cos_t)
    tan_t = math.sin(theta) / cos_t
    return np.array([
        p + math.sin(phi) * tan_t * q + math.cos(phi) * tan_t * r,
        math.cos(phi) * q - math.sin(phi) * r,
        (math.sin(phi) * q + math.cos(phi) * r) / cos_t,
    ])


class SdaSynthesisEnv(gym.Env):
    metadata = {"render_modes": []}

    def __init__(
        self,
        setup: SimulationSetup,
        config: EnvConfig | None = None,
        *,
        mode: SdaMode | None = None,
        checkpoint_seed: int = 0,
    ) -> None:
        super().__init__()
        self.setup = setup
        self.config = config or EnvConfig()
        self.mode = mode if mode is not None else Stale()
        self.action_space = spaces.Discrete(2)
        self.observation_space = spaces.Box(-np.inf, np.inf, shape=(OBS_DIM,), dtype=np.float64)

        self.ticks_per_step = max(1, int(round(self.config.agent_step * setup.loop.loop_rate)))
        points = setup.mission.points()
        self.path_start, self.path_end = points[0], points[-1]

        self._checkpoint = self._build_checkpoint(checkpoint_seed)
        self.sim: MissionSimulation | None = None
        self.ctx: RewardContext | None = None
        self.objective = AdversarialObjective()
        self.last_observation: EpisodeObservation | None = None
        self.steps = 0
        self._prev_euler = np.zeros(3)
        self._done = True

    # ───────────────────────── punto de control ─────────────────────────
    def _build_checkpoint(self, seed: int) -> MissionSimulation:
        # plan sin ventanas: γ lo decide el agente a través de gamma_override
        plan = AttackPlan(mode=self.mode, windows=(), injection="stream",
                          loop_rate=self.setup.loop.loop_rate)
        sim = MissionSimulation(self.setup, plan, seed=seed)
        ticks = int(round(self.config.checkpoint_time * self.setup.loop.loop_rate))
        sim.gamma_override = 0
        if sim.advance(ticks):
            raise ContractViolationError(
                f"la misión terminó ({sim.outcome}) antes del punto de control t={self.config.checkpoint_time}s")
        logger.info("Punto de control creado en t=%.2fs, posición %s", sim.time, np.round(sim.truth.position, 2))
        return sim

    def fresh_simulation(self, seed: int) -> MissionSimulation:
        sim = copy.deepcopy(self._checkpoint)
        sim.reseed(seed)
        sim.gamma_override = 0
        return sim

    def sample_goal(self, rng: np.random.Generator) -> np.ndarray:
        base = self._checkpoint.truth.position
        cfg = self.config
        for _ in range(_MAX_GOAL_TRIES):
            goal = np.array([
                base[0] + rng.uniform(*cfg.goal_x),
                base[1] + rng.uniform(*cfg.goal_y),
                rng.uniform(*cfg.goal_z),
            ])
            if distance_to_path(goal, self.path_start, self.path_end) >= cfg.tube_radius:
                return goal
        raise ContractViolationError("no se encontró un objetivo fuera del tubo de la ruta")

    # ───────────────────────── observación ─────────────────────────
    def _observe(self) -> EpisodeObservation:
        sim = self.sim
        euler = sim.euler()
        return EpisodeObservation(
            position=sim.truth.position.copy(),
            quaternion=sim.truth.attitude.copy(),
            euler=euler,
            velocity=sim.truth.velocity.copy(),
            angular_velocity=sim.truth.angular_rate.copy(),
            motor_speeds=sim.last_command.as_array(),
            euler_rates=euler_rates(euler, sim.truth.angular_rate),
            goal=self.ctx.goal.copy(),
        )

    # ───────────────────────── API gymnasium ─────────────────────────
    def reset(self, *, seed: int | None = None, options: dict[str, Any] | None = None):
        super().reset(seed=seed)
        episode_seed = int(seed) if seed is not None else int(self.np_random.integers(0, 2**31 - 1))
        self.sim = self.fresh_simulation(episode_seed)
        goal = self.sample_goal(rng_streams(episode_seed)["env"])
        self.ctx = RewardContext(goal=goal, path_start=self.path_start, path_end=self.path_end,
                                 prev_dist=goal_distance(self.sim.truth.position, goal))
        self.objective = AdversarialObjective()
        self.steps = 0
        self._done = False
        self._prev_euler = self.sim.euler()
        self.last_observation = self._observe()
        return self.last_observation.as_array(), {"goal": goal, "seed": episode_seed}

    def step(self, action):
        if self._done:
            raise ContractViolationError("paso tras el fin del episodio")
        gamma = int(action)
        if gamma not in (0, 1):
            raise ContractViolationError(f"acción inválida: {action!r}")

        sim = self.sim
        sim.gamma_override = gamma
        sim.advance(self.ticks_per_step)
        self.steps += 1

        euler = sim.euler()
        failsafe = sim.failsafe.triggered
        state = RewardState(position=sim.truth.position.copy(), roll=float(euler[0]), pitch=float(euler[1]),
                            prev_roll=float(self._prev_euler[0]), prev_pitch=float(self._prev_euler[1]),
                            failsafe=failsafe)
        r = reward(state, self.ctx, predicates=self.config.predicates, variant=self.config.variant)
        self._prev_euler = euler
        dist = self.ctx.prev_dist
        self.objective.add(dist)

        terminated = bool(dist < self.config.predicates.goal_radius or failsafe or sim.done)
        truncated = bool(not terminated and self.steps >= self.config.max_steps)
        self._done = terminated or truncated
        self.last_observation = self._observe()
        info = {
            "gamma": gamma,
            "goal_distance": dist,
            "failsafe": failsafe,
            "outcome": sim.outcome,
            "time": sim.time,
            "flips": self.ctx.flips,
        }
        return self.last_observation.as_array(), float(r), terminated, truncated, info


def env_reset(env: SdaSynthesisEnv, seed: int) -> EpisodeObservation:
    env.reset(seed=seed)
    return env.last_observation


def env_step(env: SdaSynthesisEnv, action: int) -> tuple[EpisodeObservation, float, bool, dict[str, Any]]:
    _, r, terminated, truncated, info = env.step(action)
    return env.last_observation, r, terminated or truncated, info
