# tests/test_attack.py
from __future__ import annotations

import numpy as np
import pytest

from application.services.attack import (
    AttackInjector,
    apply_sda,
    default_erroneous,
    gamma_from_plan,
    mode_from_chip,
)
from application.services.sensor_chip import SensorChip
from domain.attack import (
    Absent,
    AttackedReading,
    AttackPlan,
    Compound,
    DefaultValue,
    Erroneous,
    FrequencyReduction,
    Stale,
)
from domain.errors import ContractViolationError
from domain.models import ImuNoise
from domain.sensors import SensorResponse

Y = np.array([1.0, 2.0, 3.0])


def test_gamma_zero_is_transparent(rng):
    for mode in (Absent(), Stale(), DefaultValue(value=(9.0, 9.0, 9.0)), Erroneous()):
        out = apply_sda(Y, mode, 0, None, rng)
        assert out.provenance == "clean"
        np.testing.assert_array_equal(out.value, Y)


def test_observation_modes(rng):
    assert apply_sda(Y, Absent(), 1, None, rng).absent

    default = apply_sda(Y, DefaultValue(value=(141.53, 141.53, 141.53)), 1, None, rng)
    np.testing.assert_allclose(default.value, [141.53] * 3)

    last = AttackedReading(value=np.array([7.0, 8.0, 9.0]))
    stale = apply_sda(Y, Stale(), 1, last, rng)
    np.testing.assert_array_equal(stale.value, last.value)
    assert stale.provenance == "attacked"


def test_stale_without_previous_reading_is_rejected(rng):
    with pytest.raises(ContractViolationError):
        apply_sda(Y, Stale(), 1, None, rng)


def test_erroneous_is_seeded():
    mode = Erroneous(mu=(0.0, 0.0, 0.0), sigma=(0.5, 0.5, 0.5))
    a = apply_sda(Y, mode, 1, None, np.random.default_rng(9)).value
    b = apply_sda(Y, mode, 1, None, np.random.default_rng(9)).value
    np.testing.assert_array_equal(a, b)


def test_gamma_from_plan_windows_are_half_open():
    plan = AttackPlan.single(Stale(), start=1.0, duration=0.5, loop_rate=400.0)
    assert gamma_from_plan(plan, 399) == 0
    assert gamma_from_plan(plan, 400) == 1
    assert gamma_from_plan(plan, 599) == 1
    assert gamma_from_plan(plan, 600) == 0
    assert gamma_from_plan(None, 400) == 0


def test_persistent_plan_never_releases():
    plan = AttackPlan.single(Absent(), start=1.0, duration=0.5, persistent=True)
    assert gamma_from_plan(plan, 100_000) == 1


def test_empty_window_rejected():
    with pytest.raises(ContractViolationError):
        AttackPlan(mode=Stale(), windows=((2.0, 2.0),))


def test_mode_from_chip_per_profile(catalog):
    assert isinstance(mode_from_chip("MPU6050", True, catalog=catalog), Absent)

    mpu = mode_from_chip(catalog["MPU6000"], True)
    assert isinstance(mpu, Compound)
    assert isinstance(mpu.accel, DefaultValue) and isinstance(mpu.gyro, DefaultValue)

    bmi = mode_from_chip(catalog["BMI055"], True)
    assert isinstance(bmi.accel, Absent) and isinstance(bmi.gyro, DefaultValue)


def test_mode_from_chip_not_suspended_reports_divider(catalog):
    chip = SensorChip(catalog["MPU6000"])
    chip.write_register(0x19, 39, time=0.0)
    mode = mode_from_chip(chip, False)
    assert mode == FrequencyReduction(divider=39)


def test_default_erroneous_scales_noise():
    mode = default_erroneous(ImuNoise(accel_sigma=0.05, gyro_sigma=0.005), factor=10.0)
    assert mode.accel.sigma == pytest.approx((0.5, 0.5, 0.5))
    assert mode.gyro.sigma == pytest.approx((0.05, 0.05, 0.05))


def _response(t: float, value: float) -> SensorResponse:
    v = np.full(3, value)
    return SensorResponse(time=t, accel=v, gyro=v * 0.1, fresh=True)


def test_injector_stale_replays_last_clean_reading():
    plan = AttackPlan.single(Stale(), start=0.01, duration=1.0)
    inj = AttackInjector(plan, rng=np.random.default_rng(0))

    clean = inj.process(_response(0.0, 1.0), gamma=0)
    held = inj.process(_response(0.0025, 2.0), gamma=1)
    still = inj.process(_response(0.005, 3.0), gamma=1)
    released = inj.process(_response(0.0075, 4.0), gamma=0)

    np.testing.assert_array_equal(held.accel.value, clean.accel.value)
    np.testing.assert_array_equal(still.gyro.value, clean.gyro.value)
    np.testing.assert_allclose(released.accel.value, [4.0] * 3)
    assert held.gamma == 1 and released.gamma == 0


def test_injector_compound_attacks_channels_separately():
    plan = AttackPlan.single(Compound(accel=Absent(), gyro=DefaultValue(value=(0.0, 0.0, 0.0))),
                             start=0.0, duration=1.0)
    out = AttackInjector(plan, rng=np.random.default_rng(0)).process(_response(0.0, 1.0), gamma=1)
    assert out.accel.absent
    np.testing.assert_array_equal(out.gyro.value, np.zeros(3))
    assert not out.fully_absent


def test_register_plans_leave_the_stream_untouched():
    plan = AttackPlan.single(FrequencyReduction(divider=79), start=0.0, duration=1.0, injection="register")
    out = AttackInjector(plan, rng=np.random.default_rng(0)).process(_response(0.0, 5.0), gamma=1)
    assert out.gamma == 0
    np.testing.assert_allclose(out.accel.value, [5.0] * 3)
