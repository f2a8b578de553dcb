# tests/test_scenario_config.py
from __future__ import annotations

import json

import pytest

from config.scenario import (
    AttackConfig,
    build_attack_plan,
    build_setup,
    chip_catalog_for,
    config_hash,
    load_chip_catalog,
    load_scenario,
    parse_scenario,
)
from domain.attack import Compound, FrequencyReduction, Stale
from domain.errors import ConfigError, UnknownProfileError
from domain.models import ImuNoise

CUSTOM_CHIP = {
    "name": "BENCH-1",
    "gyro_output_rate": 1000.0,
    "power_mgmt": 0x10,
    "suspend_mask": 0x01,
    "suspend_value": 0x01,
    "rate_divider": 0x11,
    "accel_suspend": {"kind": "absent"},
    "gyro_suspend": {"kind": "default", "values": [0.1, 0.1, 0.1]},
    "min_gyro_rate": [20.0, 10.0],
}


def test_default_scenario():
    cfg = load_scenario()
    assert cfg.chip.profile == "MPU6000"
    assert cfg.attack.mode == "stale"
    assert [a.name for a in cfg.campaign.attacks] == ["absent", "default", "erroneous", "stale"]
    assert cfg.seeds.master == 7


def test_unknown_key_reports_its_path():
    with pytest.raises(ConfigError) as exc:
        parse_scenario({"plant": {"mas": 1.0}})
    assert exc.value.path == "plant.mas"


def test_invalid_value_is_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_scenario({"mission": {"altitude": -5.0}})
    assert exc.value.path == "mission.altitude"


def test_frequency_mode_needs_a_rate():
    with pytest.raises(ConfigError) as exc:
        parse_scenario({"attack": {"mode": "frequency"}})
    assert exc.value.path.startswith("attack")


def test_root_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "nope.yaml")


def test_json_scenario(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"seeds": {"master": 3}}), encoding="utf-8")
    assert load_scenario(path).seeds.master == 3


def test_config_hash_is_canonical():
    a = parse_scenario({"seeds": {"master": 3}})
    b = parse_scenario({"seeds": {"master": 3}})
    c = parse_scenario({"seeds": {"master": 4}})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_builtin_catalog():
    catalog = load_chip_catalog()
    assert set(catalog) == {"MPU6050", "MPU6000", "BMI055", "BMI270", "ICM-42688-P"}
    assert catalog["BMI270"].reset_value(0x7D) == 0x0E
    assert catalog["MPU6000"].suspend_response_rate == pytest.approx(100.0)


def test_scenario_can_add_chip_profiles():
    cfg = parse_scenario({"chip": {"profile": "BENCH-1", "profiles": [CUSTOM_CHIP]}})
    catalog = chip_catalog_for(cfg)
    assert catalog["BENCH-1"].min_rate == pytest.approx(10.0)
    assert build_setup(cfg, catalog).chip.name == "BENCH-1"


def test_unknown_chip_in_setup(catalog):
    cfg = parse_scenario({"chip": {"profile": "NOPE"}})
    with pytest.raises(UnknownProfileError):
        build_setup(cfg, catalog)


def test_attack_plans(catalog):
    noise = ImuNoise()
    stale = build_attack_plan(AttackConfig(mode="stale"), noise, loop_rate=400.0)
    assert isinstance(stale.mode, Stale)
    assert stale.windows == ((8.0, 9.0),)
    assert stale.injection == "stream"

    freq = build_attack_plan(AttackConfig(mode="frequency", target_rate=100.0), noise, loop_rate=400.0,
                             chip=catalog["MPU6000"])
    assert freq.mode == FrequencyReduction(divider=79)
    assert freq.injection == "register"

    chip = build_attack_plan(AttackConfig(mode="chip"), noise, loop_rate=400.0, chip=catalog["BMI055"])
    assert isinstance(chip.mode, Compound)

    erroneous = build_attack_plan(AttackConfig(mode="erroneous"), noise, loop_rate=400.0)
    assert erroneous.mode.accel.sigma == pytest.approx((0.5, 0.5, 0.5))

    assert build_attack_plan(AttackConfig(mode="none"), noise, loop_rate=400.0) is None


def test_setup_from_default(catalog):
    setup = build_setup(load_scenario(), catalog)
    assert setup.dt == pytest.approx(1.0 / 400.0)
    assert setup.estimator.gate == pytest.approx(5.0)
    assert setup.mission.points()[-1].tolist() == [150.0, 0.0, 20.0]
    assert setup.max_time == pytest.approx(60.0)
