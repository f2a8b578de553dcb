# tests/test_sensor_chip.py
from __future__ import annotations

import numpy as np
import pytest

from application.services.sensor_chip import (
    SensorChip,
    divider_for_rate,
    effective_sample_rate,
    inject_message,
    is_idle,
    next_idle_window,
    resolve_profile,
    suspend_command,
)
from domain.errors import UnknownProfileError
from domain.models import ImuSample
from domain.sensors import BusModel, WriteCommand


def _sample(t: float = 0.0) -> ImuSample:
    return ImuSample(time=t, accel=np.array([0.0, 0.0, 9.81]), gyro=np.array([0.01, 0.02, 0.03]))


def test_reset_rate_follows_output_rate_and_divider(catalog):
    chip = SensorChip(catalog["MPU6000"])
    assert effective_sample_rate(chip) == pytest.approx(8000.0)

    chip.write_register(0x19, 79, time=0.0)
    assert effective_sample_rate(chip) == pytest.approx(100.0)
    assert divider_for_rate(catalog["MPU6000"], 100.0) == 79


def test_divider_for_rate_is_clamped(catalog):
    profile = catalog["ICM-42688-P"]
    assert divider_for_rate(profile, 1.0) == 255
    assert divider_for_rate(profile, 10_000.0) == 0


def test_fresh_only_when_a_new_sample_is_ready(catalog):
    chip = SensorChip(catalog["MPU6000"])
    chip.write_register(0x19, 79, time=0.0)

    first = chip.read_sample(_sample(0.0), 0.0)
    second = chip.read_sample(_sample(0.0025), 0.0025)
    later = chip.read_sample(_sample(0.01), 0.01)

    assert first.fresh and not second.fresh and later.fresh
    np.testing.assert_allclose(second.accel, first.accel)


def test_suspend_keeps_reset_bits_and_sets_sleep(catalog):
    profile = catalog["MPU6000"]
    cmd = suspend_command(profile)
    assert cmd.register_addr == 0x6B
    assert cmd.payload == 0x41


def test_suspended_mpu6000_returns_bench_defaults(catalog):
    chip = SensorChip(catalog["MPU6000"], rng=np.random.default_rng(3))
    cmd = suspend_command(chip.profile)
    chip.write_register(cmd.register_addr, cmd.payload, time=0.0)

    resp = chip.read_sample(_sample(), 0.0)
    assert chip.is_suspended and resp.suspended
    np.testing.assert_allclose(resp.gyro, [0.0254, -0.0346, 0.1211])
    bench = np.array([0.2477, 68.9905, -0.3031])
    assert np.all(np.abs(resp.accel - bench) < 6 * np.array([1.058, 14.563, 1.295]))
    assert chip.response_rate() == pytest.approx(100.0)


def test_suspended_mpu6050_has_no_data(catalog):
    chip = SensorChip(catalog["MPU6050"])
    chip.write_register(0x6B, suspend_command(chip.profile).payload, time=0.0)

    resp = chip.read_sample(_sample(), 0.0)
    assert resp.fully_absent
    assert not resp.fresh


def test_restoring_power_register_resumes_true_samples(catalog):
    chip = SensorChip(catalog["BMI055"])
    chip.write_register(0x11, suspend_command(chip.profile).payload, time=0.0)
    assert chip.read_sample(_sample(0.0), 0.0).accel is None

    chip.write_register(0x11, chip.profile.reset_value(0x11), time=0.01)
    resp = chip.read_sample(_sample(0.01), 0.01)
    assert not chip.is_suspended
    np.testing.assert_allclose(resp.gyro, [0.01, 0.02, 0.03])


def test_bus_idle_window_and_collision(catalog):
    bus = BusModel(poll_rate=400.0, transaction_duration=0.0005)
    chip = SensorChip(catalog["MPU6000"])
    cmd = WriteCommand(device_addr=0x68, register_addr=0x19, payload=9)

    assert not is_idle(bus, 0.0002)
    assert inject_message(bus, cmd, 0.0002, chip=chip) == "collision"
    assert chip.divider == 0

    when = next_idle_window(bus, 0.0002)
    assert when == pytest.approx(0.0015)
    assert inject_message(bus, cmd, when, chip=chip) == "accepted"
    assert chip.divider == 9


def test_next_idle_window_keeps_idle_instants():
    bus = BusModel()
    assert next_idle_window(bus, 0.00125) == pytest.approx(0.00125)


def test_unknown_profile(catalog):
    with pytest.raises(UnknownProfileError):
        resolve_profile("LSM6DS3", catalog)


def test_catalog_minimum_rates(catalog):
    assert catalog["MPU6000"].min_rate == pytest.approx(50.0)
    assert catalog["ICM-42688-P"].min_rate == pytest.approx(12.5)
    assert catalog["MPU6050"].min_rate == pytest.approx(8000.0 / 256.0)
