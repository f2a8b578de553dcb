# domain/synthesis.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Literal, Protocol

import numpy as np

from domain.errors import ContractViolationError

OBS_DIM = 26
RewardVariant = Literal["verbatim", "exclusive"]


@dataclass(frozen=True)
class EpisodeObservation:
    position: np.ndarray
    quaternion: np.ndarray
    euler: np.ndarray
    velocity: np.ndarray
    angular_velocity: np.ndarray
    motor_speeds: np.ndarray
    euler_rates: np.ndarray
    goal: np.ndarray

    def as_array(self) -> np.ndarray:
        arr = np.concatenate([
            self.position, self.quaternion, self.euler, self.velocity,
            self.angular_velocity, self.motor_speeds, self.euler_rates, self.goal,
        ]).astype(float)
        if arr.shape != (OBS_DIM,):
            raise ContractViolationError(f"observación de dimensión {arr.shape}, se esperaba {OBS_DIM}")
        return arr


# Escala de normalización por bloque, en el mismo orden que as_array()
OBS_SCALE = np.concatenate([
    np.full(3, 100.0), np.ones(4), np.full(3, np.pi), np.full(3, 10.0),
    np.full(3, 10.0), np.ones(4), np.full(3, 10.0), np.full(3, 100.0),
])


@dataclass
class RewardContext:
    goal: np.ndarray
    path_start: np.ndarray
    path_end: np.ndarray
    prev_dist: float
    flips: int = 0
    failsafe: bool = False

    def __post_init__(self) -> None:
        if self.flips < 0:
            raise ContractViolationError("flips debe ser >= 0")


@dataclass(frozen=True)
class RewardState:
    """Lo que la función de recompensa lee del vehículo tras un paso del agente."""
    position: np.ndarray
    roll: float
    pitch: float
    prev_roll: float
    prev_pitch: float
    failsafe: bool = False


@dataclass(frozen=True)
class RewardPredicates:
    up_limit_deg: float = 90.0
    path_radius: float = 2.0
    goal_radius: float = 1.0


@dataclass
class AdversarialObjective:
    """Distancia acumulada al objetivo (m·pasos)."""
    cumulative_distance: float = 0.0
    steps: int = 0

    def add(self, goal_dist: float) -> None:
        if goal_dist < 0:
            raise ContractViolationError("distancia negativa")
        self.cumulative_distance += float(goal_dist)
        self.steps += 1


class Policy(Protocol):
    version: str

    def prob(self, obs: np.ndarray) -> float: ...


@dataclass(frozen=True)
class EvaluationSummary:
    mean_reward: float
    std_reward: float
    ci95: tuple[float, float]
    mean_final_distance: float
    returns: tuple[float, ...] = field(default_factory=tuple)
    final_distances: tuple[float, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class EnvConfig:
    checkpoint_time: float = 10.0
    agent_step: float = 0.1          # s de simulación por decisión del agente
    max_steps: int = 300
    goal_x: tuple[float, float] = (20.0, 80.0)   # relativo a la posición del punto de control
    goal_y: tuple[float, float] = (-40.0, 40.0)
    goal_z: tuple[float, float] = (15.0, 25.0)   # altitud absoluta
    tube_radius: float = 5.0
    predicates: RewardPredicates = field(default_factory=RewardPredicates)
    variant: RewardVariant = "verbatim"

    def __post_init__(self) -> None:
        if self.agent_step <= 0 or self.max_steps < 1:
            raise ContractViolationError("agent_step y max_steps deben ser positivos")
        for name in ("goal_x", "goal_y", "goal_z"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ContractViolationError(f"{name}: intervalo invertido")
