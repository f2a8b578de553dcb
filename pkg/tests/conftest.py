# tests/conftest.py
from __future__ import annotations

import numpy as np
import pytest
import yaml

from application.services.simulator import SimulationSetup
from config.scenario import load_chip_catalog, parse_scenario
from domain.control import MissionPlan
from domain.sensors import ChipProfile


@pytest.fixture(scope="session")
def catalog() -> dict[str, ChipProfile]:
    return load_chip_catalog()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def short_setup(catalog) -> SimulationSetup:
    """Misión corta: 60 m a 20 m de altura con 6 s de presupuesto."""
    return SimulationSetup(
        chip=catalog["MPU6000"],
        mission=MissionPlan(waypoints=((0.0, 0.0), (60.0, 0.0)), altitude=20.0, cruise_speed=6.0),
        max_time=6.0,
    )


SMALL_SCENARIO = {
    "mission": {"waypoints": [[0.0, 0.0], [60.0, 0.0]], "max_time": 5.0},
    "attack": {"mode": "stale", "start": 2.0, "duration": 1.0},
    "monitor": {"train_duration": 30.0, "eval_duration": 5.0},
    "synthesis": {"checkpoint_time": 1.0, "max_steps": 2},
    "trainer": {"total_steps": 8, "rollout_steps": 8, "epochs": 1, "minibatch": 4, "hidden": 8,
                "eval_interval": 8, "eval_episodes": 1},
    "campaign": {
        "runs": 2,
        "baseline_runs": 2,
        "attacks": [{"mode": "absent", "persistent": True, "start": 2.0}, {"mode": "stale", "start": 2.0}],
    },
    "sweep": {"rates": [400.0, 100.0, 5.0], "runs": 1},
}


@pytest.fixture
def small_config():
    return parse_scenario(SMALL_SCENARIO)


@pytest.fixture
def small_config_file(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL_SCENARIO), encoding="utf-8")
    return path
