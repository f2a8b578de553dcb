# application/services/reward.py
# Recompensa del agente atacante: acercarse al objetivo sin volcar ni disparar el failsafe
from __future__ import annotations
import logging

import numpy as np

from domain.errors import ContractViolationError
from domain.synthesis import RewardContext, RewardPredicates, RewardState, RewardVariant

logger = logging.getLogger(__name__)


def drone_up(roll: float, pitch: float, *, limit_deg: float = 90.0) -> bool:
    lim = np.radians(limit_deg)
    return bool(abs(roll) < lim and abs(pitch) < lim)


def drone_flips(state: RewardState, *, limit_deg: float = 90.0) -> bool:
    """Roll o pitch cruzan el límite (en cualquier sentido) durante este paso."""
    lim = np.radians(limit_deg)
    roll_cross = (abs(state.prev_roll) < lim) != (abs(state.roll) < lim)
    pitch_cross = (abs(state.prev_pitch) < lim) != (abs(state.pitch) < lim)
    return bool(roll_cross or pitch_cross)


def distance_to_path(position, start, end) -> float:
    """Distancia horizontal al tramo planificado [start, end]."""
    p = np.asarray(position, dtype=float)[:2]
    a = np.asarray(start, dtype=float)[:2]
    b = np.asarray(end, dtype=float)[:2]
    ab = b - a
    denom = float(ab @ ab)
    s = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + s * ab)))


def goal_distance(position, goal) -> float:
    return float(np.linalg.norm(np.asarray(position, dtype=float) - np.asarray(goal, dtype=float)))


def reward(
    state: RewardState,
    ctx: RewardContext,
    *,
    predicates: RewardPredicates | None = None,
    variant: RewardVariant = "verbatim",
) -> float:
    """Evalúa la recompensa de un paso y actualiza ctx (flips, prev_dist).

    El orden de las asignaciones importa: el volteo sobrescribe, el failsafe sobrescribe
    y alcanzar el objetivo sobrescribe todo lo anterior.
    """
    pred = predicates or RewardPredicates()
    if not np.all(np.isfinite(state.position)):
        raise ContractViolationError("posición no finita en la recompensa")

    dist = goal_distance(state.position, ctx.goal)
    delta = ctx.prev_dist - dist
    up = drone_up(state.roll, state.pitch, limit_deg=pred.up_limit_deg)
    closer = delta > 0

    r = 0.0
    if variant == "verbatim":
        r += 1.5 if (up and closer) else -0.5
        r += 0.5 if (not up and closer) else -1.5
    elif variant == "exclusive":
        if closer:
            r += 1.5 if up else 0.5
        else:
            r += -0.5 if up else -1.5
    else:
        raise ContractViolationError(f"variante de recompensa desconocida: {variant}")

    if drone_flips(state, limit_deg=pred.up_limit_deg):
        ctx.flips += 1
        r = -float(ctx.flips)
    else:
        ctx.flips = 0

    if distance_to_path(state.position, ctx.path_start, ctx.path_end) < pred.path_radius:
        r -= 2.0
    if state.failsafe:
        r = -40.0
    if dist < pred.goal_radius:
        r = 100.0

    ctx.prev_dist = dist
    return r
