# application/services/ppo_trainer.py
# Entrenador on-policy (PPO con recorte) para el agente atacante, políticas base y evaluación
from __future__ import annotations
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd
import torch
from torch import nn
from torch.distributions import Categorical

from application.services.metrics import confidence_interval_95
from application.services.synthesis_env import SdaSynthesisEnv
from domain.errors import ContractViolationError, TrainingDivergedError
from domain.synthesis import OBS_DIM, OBS_SCALE, EvaluationSummary, Policy

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "sda-policy"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PpoConfig:
    total_steps: int = 50_000
    rollout_steps: int = 2048
    epochs: int = 10
    minibatch: int = 256
    lr: float = 3e-4
    clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden: int = 64
    eval_interval: int = 10_000
    eval_episodes: int = 20
    eval_seed: int = 10_000


# ───────────────────────── políticas ─────────────────────────
class ActorCritic(nn.Module):
    def __init__(self, obs_dim: int = OBS_DIM, hidden: int = 64) -> None:
        super().__init__()
        self.actor = nn.Sequential(
            nn.Linear(obs_dim, hidden), nn.Tanh(),
            nn.Linear(hidden, hidden), nn.Tanh(),
            nn.Linear(hidden, 2),
        )
        self.critic = nn.Sequential(
            nn.Linear(obs_dim, hidden), nn.Tanh(),
            nn.Linear(hidden, hidden), nn.Tanh(),
            nn.Linear(hidden, 1),
        )

    def forward(self, obs: torch.Tensor) -> tuple[Categorical, torch.Tensor]:
        return Categorical(logits=self.actor(obs)), self.critic(obs).squeeze(-1)


class TorchPolicy:
    def __init__(self, model: ActorCritic, *, obs_scale: np.ndarray = OBS_SCALE, version: str = "ppo-0") -> None:
        self.model = model
        self.obs_scale = np.asarray(obs_scale, dtype=float)
        self.version = version

    def normalize(self, obs: np.ndarray) -> torch.Tensor:
        return torch.as_tensor(np.asarray(obs, dtype=float) / self.obs_scale, dtype=torch.float32)

    def prob(self, obs: np.ndarray) -> float:
        with torch.no_grad():
            dist, _ = self.model(self.normalize(obs))
        return float(dist.probs[1])


class ConstantPolicy:
    def __init__(self, action: int) -> None:
        if action not in (0, 1):
            raise ContractViolationError("la acción constante debe ser 0 o 1")
        self.action = action
        self.version = f"constant-{action}"

    def prob(self, obs: np.ndarray) -> float:
        return float(self.action)


class RandomPolicy:
    def __init__(self, p: float = 0.5) -> None:
        if not 0.0 <= p <= 1.0:
            raise ContractViolationError("p debe estar en [0, 1]")
        self.p = p
        self.version = f"random-{p:g}"

    def prob(self, obs: np.ndarray) -> float:
        return self.p


def select_action(policy: Policy, obs: np.ndarray, rng: np.random.Generator, *, greedy: bool = True) -> int:
    p = policy.prob(obs)
    if not 0.0 <= p <= 1.0:
        raise ContractViolationError(f"probabilidad fuera de [0,1]: {p}")
    if greedy and not isinstance(policy, RandomPolicy):
        return int(p >= 0.5)
    return int(rng.random() < p)


# ───────────────────────── evaluación y rollouts ─────────────────────────
def _episode(policy: Policy, env: SdaSynthesisEnv, seed: int, *, greedy: bool,
             on_step: Callable[[dict], None] | None = None) -> tuple[float, float]:
    obs, _ = env.reset(seed=seed)
    rng = np.random.default_rng(seed)
    total = 0.0
    done = False
    info: dict = {}
    while not done:
        action = select_action(policy, obs, rng, greedy=greedy)
        obs, r, terminated, truncated, info = env.step(action)
        total += r
        done = terminated or truncated
        if on_step is not None:
            on_step({"action": action, "reward": r, **info})
    return total, float(info.get("goal_distance", env.ctx.prev_dist))


def evaluate_policy(policy: Policy, env: SdaSynthesisEnv, seeds: Sequence[int], *, greedy: bool = True) -> EvaluationSummary:
    if not seeds:
        raise ContractViolationError("se necesita al menos una semilla de evaluación")
    returns, finals = [], []
    for seed in seeds:
        ret, final = _episode(policy, env, int(seed), greedy=greedy)
        returns.append(ret)
        finals.append(final)
    arr = np.asarray(returns, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return EvaluationSummary(
        mean_reward=float(arr.mean()),
        std_reward=std,
        ci95=confidence_interval_95(returns),
        mean_final_distance=float(np.mean(finals)),
        returns=tuple(returns),
        final_distances=tuple(finals),
    )


def rollout(policy: Policy, env: SdaSynthesisEnv, seed: int, *, greedy: bool = True) -> tuple[pd.DataFrame, dict]:
    """Trayectoria por paso del agente y línea temporal de γ."""
    rows: list[dict] = []

    def _collect(step: dict) -> None:
        pos = env.sim.truth.position
        rows.append({"t": round(step["time"], 6), "x": pos[0], "y": pos[1], "z": pos[2],
                     "gamma": step["gamma"], "reward": step["reward"]})

    total, final = _episode(policy, env, seed, greedy=greedy, on_step=_collect)
    frame = pd.DataFrame(rows, columns=["t", "x", "y", "z", "gamma", "reward"])
    summary = {
        "policy": policy.version,
        "seed": seed,
        "return": total,
        "final_distance": final,
        "goal": [float(v) for v in env.ctx.goal],
        "attacked_steps": int(frame["gamma"].sum()) if not frame.empty else 0,
        "steps": len(frame),
        "outcome": env.sim.outcome,
        "failsafe": bool(env.sim.failsafe.triggered),
    }
    return frame, summary


# ───────────────────────── entrenamiento ─────────────────────────
@dataclass
class TrainingResult:
    policy: TorchPolicy
    curve: pd.DataFrame
    trained_steps: int
    initial: EvaluationSummary
    final: EvaluationSummary


def _gae(rewards: np.ndarray, values: np.ndarray, next_values: np.ndarray, terminal: np.ndarray,
         episode_end: np.ndarray, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    adv = np.zeros_like(rewards)
    last = 0.0
    for i in reversed(range(len(rewards))):
        bootstrap = 0.0 if terminal[i] else next_values[i]
        delta = rewards[i] + gamma * bootstrap - values[i]
        carry = 0.0 if episode_end[i] else last
        last = delta + gamma * lam * carry
        adv[i] = last
    return adv, adv + values


def _check_finite(model: nn.Module) -> None:
    for name, param in model.named_parameters():
        if not torch.isfinite(param).all():
            raise TrainingDivergedError(f"parámetro no finito en {name}")


def train(env: SdaSynthesisEnv, config: PpoConfig | None = None, *, seed: int = 0) -> TrainingResult:
    cfg = config or PpoConfig()
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    model = ActorCritic(hidden=cfg.hidden)
    policy = TorchPolicy(model, version="ppo-0")
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    eval_seeds = [cfg.eval_seed + i for i in range(cfg.eval_episodes)]

    curve: list[dict] = []

    def _evaluate(step: int) -> EvaluationSummary:
        summary = evaluate_policy(policy, env, eval_seeds)
        curve.append({"iteration": step, "eval_mean": summary.mean_reward, "eval_std": summary.std_reward,
                      "final_distance": summary.mean_final_distance})
        logger.info("Evaluación en %d pasos: recompensa %.2f ± %.2f, distancia final %.1f m",
                    step, summary.mean_reward, summary.std_reward, summary.mean_final_distance)
        return summary

    initial = _evaluate(0)
    final = initial
    next_eval = cfg.eval_interval
    steps = 0
    obs, _ = env.reset(seed=int(rng.integers(0, 2**31 - 1)))

    while steps < cfg.total_steps:
        n = min(cfg.rollout_steps, cfg.total_steps - steps)
        buf_obs = np.zeros((n, OBS_DIM))
        buf_act = np.zeros(n, dtype=np.int64)
        buf_logp = np.zeros(n)
        buf_val = np.zeros(n)
        buf_next_val = np.zeros(n)
        buf_rew = np.zeros(n)
        buf_term = np.zeros(n, dtype=bool)
        buf_end = np.zeros(n, dtype=bool)

        for i in range(n):
            x = policy.normalize(obs)
            with torch.no_grad():
                dist, value = model(x)
                action = dist.sample()
            next_obs, r, terminated, truncated, _ = env.step(int(action))
            buf_obs[i] = obs
            buf_act[i] = int(action)
            buf_logp[i] = float(dist.log_prob(action))
            buf_val[i] = float(value)
            buf_rew[i] = r
            buf_term[i] = terminated
            buf_end[i] = terminated or truncated or i == n - 1
            if not terminated:
                with torch.no_grad():
                    _, nv = model(policy.normalize(next_obs))
                buf_next_val[i] = float(nv)
            if terminated or truncated:
                obs, _ = env.reset(seed=int(rng.integers(0, 2**31 - 1)))
            else:
                obs = next_obs
        steps += n

        adv, ret = _gae(buf_rew, buf_val, buf_next_val, buf_term, buf_end, cfg.gamma, cfg.gae_lambda)
        if not (np.all(np.isfinite(adv)) and np.all(np.isfinite(ret))):
            raise TrainingDivergedError(f"ventajas no finitas tras {steps} pasos")
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

        t_obs = torch.as_tensor(buf_obs / policy.obs_scale, dtype=torch.float32)
        t_act = torch.as_tensor(buf_act)
        t_logp = torch.as_tensor(buf_logp, dtype=torch.float32)
        t_adv = torch.as_tensor(adv, dtype=torch.float32)
        t_ret = torch.as_tensor(ret, dtype=torch.float32)

        for _ in range(cfg.epochs):
            order = rng.permutation(n)
            for lo in range(0, n, cfg.minibatch):
                idx = torch.as_tensor(order[lo:lo + cfg.minibatch])
                dist, value = model(t_obs[idx])
                logp = dist.log_prob(t_act[idx])
                ratio = torch.exp(logp - t_logp[idx])
                surr = torch.min(ratio * t_adv[idx],
                                 torch.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * t_adv[idx])
                loss = (-surr.mean()
                        + cfg.value_coef * (t_ret[idx] - value).pow(2).mean()
                        - cfg.entropy_coef * dist.entropy().mean())
                if not torch.isfinite(loss):
                    raise TrainingDivergedError(f"pérdida no finita tras {steps} pasos")
                optimizer.zero_grad()
                loss.backward()
                nn.utils.clip_grad_norm_(model.parameters(), cfg.max_grad_norm)
                optimizer.step()
        _check_finite(model)
        policy.version = f"ppo-{steps}"

        if steps >= next_eval or steps >= cfg.total_steps:
            final = _evaluate(steps)
            next_eval += cfg.eval_interval
            # la evaluación reinicia el entorno
            obs, _ = env.reset(seed=int(rng.integers(0, 2**31 - 1)))

    return TrainingResult(policy=policy, curve=pd.DataFrame(curve), trained_steps=steps,
                          initial=initial, final=final)


# ───────────────────────── checkpoints ─────────────────────────
def save_checkpoint(policy: TorchPolicy, path: str | Path, *, trained_steps: int) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    hidden = policy.model.actor[0].out_features
    torch.save({
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "obs_dim": OBS_DIM,
        "hidden": hidden,
        "state_dict": policy.model.state_dict(),
        "obs_scale": [float(v) for v in policy.obs_scale],
        "trained_steps": int(trained_steps),
    }, p)
    logger.info("Política guardada en %s (%d pasos)", p, trained_steps)
    return p


def load_checkpoint(path: str | Path) -> TorchPolicy:
    data = torch.load(Path(path), map_location="cpu", weights_only=True)
    if not isinstance(data, dict) or data.get("format") != CHECKPOINT_FORMAT:
        raise ContractViolationError(f"{path}: no es un checkpoint de política")
    if data.get("version") != CHECKPOINT_VERSION:
        raise ContractViolationError(f"{path}: versión de checkpoint no soportada {data.get('version')}")
    if data.get("obs_dim") != OBS_DIM:
        raise ContractViolationError(f"{path}: dimensión de observación {data.get('obs_dim')} != {OBS_DIM}")
    model = ActorCritic(obs_dim=OBS_DIM, hidden=int(data["hidden"]))
    model.load_state_dict(data["state_dict"])
    model.eval()
    return TorchPolicy(model, obs_scale=np.asarray(data["obs_scale"]), version=f"ppo-{data['trained_steps']}")
