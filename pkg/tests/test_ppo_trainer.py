# tests/test_ppo_trainer.py
from __future__ import annotations

import numpy as np
import pytest
import torch

from application.services.ppo_trainer import (
    ActorCritic,
    ConstantPolicy,
    PpoConfig,
    RandomPolicy,
    TorchPolicy,
    _gae,
    evaluate_policy,
    load_checkpoint,
    rollout,
    save_checkpoint,
    select_action,
    train,
)
from application.services.synthesis_env import SdaSynthesisEnv
from domain.errors import ContractViolationError
from domain.synthesis import OBS_DIM, EnvConfig


@pytest.fixture
def env(short_setup) -> SdaSynthesisEnv:
    return SdaSynthesisEnv(short_setup, EnvConfig(checkpoint_time=1.0, max_steps=3), checkpoint_seed=0)


def test_checkpoint_round_trip(tmp_path):
    torch.manual_seed(0)
    policy = TorchPolicy(ActorCritic(hidden=16))
    path = save_checkpoint(policy, tmp_path / "policy.pt", trained_steps=123)
    loaded = load_checkpoint(path)

    obs = np.linspace(-1.0, 1.0, OBS_DIM)
    assert loaded.prob(obs) == pytest.approx(policy.prob(obs))
    assert loaded.version == "ppo-123"


def test_foreign_checkpoint_is_rejected(tmp_path):
    path = tmp_path / "other.pt"
    torch.save({"format": "something-else"}, path)
    with pytest.raises(ContractViolationError):
        load_checkpoint(path)


def test_action_selection():
    rng = np.random.default_rng(0)
    obs = np.zeros(OBS_DIM)
    assert select_action(ConstantPolicy(1), obs, rng) == 1
    assert select_action(ConstantPolicy(0), obs, rng) == 0
    assert {select_action(RandomPolicy(1.0), obs, rng) for _ in range(5)} == {1}
    assert {select_action(RandomPolicy(0.0), obs, rng) for _ in range(5)} == {0}
    with pytest.raises(ContractViolationError):
        ConstantPolicy(2)


def test_gae_stops_at_terminal_steps():
    adv, ret = _gae(np.array([1.0, 1.0]), np.zeros(2), np.zeros(2), np.array([False, True]),
                    np.array([False, True]), gamma=0.5, lam=1.0)
    np.testing.assert_allclose(adv, [1.5, 1.0])
    np.testing.assert_allclose(ret, adv)


def test_evaluate_and_rollout(env):
    summary = evaluate_policy(ConstantPolicy(0), env, [1, 2])
    assert len(summary.returns) == 2
    assert summary.mean_final_distance > 0

    frame, info = rollout(ConstantPolicy(1), env, 5)
    assert list(frame.columns) == ["t", "x", "y", "z", "gamma", "reward"]
    assert (frame["gamma"] == 1).all()
    assert len(frame) == 3


def test_short_training_run(env):
    cfg = PpoConfig(total_steps=16, rollout_steps=8, epochs=1, minibatch=4, hidden=16,
                    eval_interval=8, eval_episodes=1)
    result = train(env, cfg, seed=0)

    assert result.trained_steps == 16
    assert result.curve["iteration"].tolist() == [0, 8, 16]
    assert result.policy.version == "ppo-16"
