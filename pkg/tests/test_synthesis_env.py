# tests/test_synthesis_env.py
from __future__ import annotations

import numpy as np
import pytest

from application.services.reward import distance_to_path
from application.services.synthesis_env import SdaSynthesisEnv, env_reset, env_step, euler_rates
from domain.errors import ContractViolationError
from domain.synthesis import OBS_DIM, EnvConfig, EpisodeObservation


@pytest.fixture
def env(short_setup) -> SdaSynthesisEnv:
    return SdaSynthesisEnv(short_setup, EnvConfig(checkpoint_time=1.0, max_steps=3), checkpoint_seed=0)


def test_reset_is_deterministic(env):
    obs_a, info_a = env.reset(seed=4)
    obs_b, info_b = env.reset(seed=4)

    assert obs_a.shape == (OBS_DIM,)
    np.testing.assert_array_equal(obs_a, obs_b)
    np.testing.assert_array_equal(info_a["goal"], info_b["goal"])
    assert env.observation_space.contains(obs_a)


def test_goals_lie_outside_the_route_tube(env):
    for seed in range(20):
        _, info = env.reset(seed=seed)
        assert distance_to_path(info["goal"], env.path_start, env.path_end) >= env.config.tube_radius
        assert 15.0 <= info["goal"][2] <= 25.0


def test_episode_truncates_and_then_refuses_steps(env):
    env.reset(seed=1)
    outcomes = [env.step(0) for _ in range(3)]

    assert [o[3] for o in outcomes] == [False, False, True]
    assert outcomes[-1][4]["time"] == pytest.approx(1.0 + 3 * 0.1)
    with pytest.raises(ContractViolationError):
        env.step(0)


def test_never_attacking_matches_the_unattacked_mission(env):
    env.reset(seed=8)
    for _ in range(3):
        env.step(0)
    reference = env.fresh_simulation(8)
    reference.advance(3 * env.ticks_per_step)

    np.testing.assert_array_equal(env.sim.truth.position, reference.truth.position)
    np.testing.assert_array_equal(env.sim.truth.attitude, reference.truth.attitude)


def test_attack_action_reaches_the_simulation(env):
    env.reset(seed=2)
    _, _, _, _, info = env.step(1)
    assert info["gamma"] == 1
    assert env.sim.trace()["gamma"].iloc[-1] == 1


def test_invalid_action(env):
    env.reset(seed=0)
    with pytest.raises(ContractViolationError):
        env.step(2)


def test_checkpoint_after_mission_end_is_rejected(short_setup):
    with pytest.raises(ContractViolationError):
        SdaSynthesisEnv(short_setup, EnvConfig(checkpoint_time=10.0))


def test_wrappers(env):
    obs = env_reset(env, 3)
    assert isinstance(obs, EpisodeObservation)
    nxt, r, done, info = env_step(env, 0)
    assert isinstance(r, float) and not done
    assert nxt.as_array().shape == (OBS_DIM,)
    assert env.objective.steps == 1


def test_euler_rates_at_level_attitude():
    np.testing.assert_allclose(euler_rates(np.zeros(3), np.array([0.1, 0.2, 0.3])), [0.1, 0.2, 0.3])
