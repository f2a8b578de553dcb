# tests/test_dynamics.py
from __future__ import annotations

import numpy as np
import pytest

from application.services.dynamics import (
    euler_to_quat,
    ground_contact,
    hover_command,
    imu_measure,
    motor_wrench,
    quat_to_euler,
    step_linear,
    step_quadrotor,
)
from domain.errors import ContractViolationError
from domain.models import ImuNoise, LinearModel, LinearState, MotorCommand, QuadrotorParams, VehicleState


def test_step_linear_double_integrator():
    model = LinearModel(A=[[1.0, 1.0], [0.0, 1.0]], B=[[0.0], [1.0]], C=[[1.0, 0.0]])
    s1, y0 = step_linear(LinearState(x=[0.0, 0.0]), 1.0, model)
    s2, y1 = step_linear(s1, 1.0, model)

    np.testing.assert_allclose(s1.x, [0.0, 1.0])
    np.testing.assert_allclose(s2.x, [1.0, 2.0])
    np.testing.assert_allclose(y0, [0.0])
    np.testing.assert_allclose(y1, [0.0])
    assert s2.k == 2


def test_step_linear_rejects_wrong_input_dimension():
    model = LinearModel(A=np.eye(2), B=np.eye(2), C=np.eye(2))
    with pytest.raises(ContractViolationError):
        step_linear(LinearState(x=[0.0, 0.0]), [1.0, 2.0, 3.0], model)


def test_hover_command_holds_position():
    params = QuadrotorParams()
    state = VehicleState.at_rest((0.0, 0.0, 20.0))
    cmd = hover_command(params)
    for _ in range(400):
        state = step_quadrotor(state, cmd, 1.0 / 400.0, params)

    np.testing.assert_allclose(state.position, [0.0, 0.0, 20.0], atol=1e-9)
    np.testing.assert_allclose(state.velocity, np.zeros(3), atol=1e-9)
    assert state.time == pytest.approx(1.0)


@pytest.mark.parametrize("dt", [0.0, -0.001, 0.02])
def test_step_quadrotor_rejects_dt_out_of_range(dt):
    params = QuadrotorParams()
    with pytest.raises(ContractViolationError):
        step_quadrotor(VehicleState.at_rest((0.0, 0.0, 5.0)), hover_command(params), dt, params)


def test_x_mixer_torque_signs():
    params = QuadrotorParams()
    # motores 0 y 3 en el lado izquierdo (+y): alabeo positivo
    _, roll = motor_wrench(MotorCommand((0.6, 0.5, 0.5, 0.6)), params)
    # motores traseros (2, 3) más fuertes: morro abajo es cabeceo positivo en FLU
    _, pitch = motor_wrench(MotorCommand((0.5, 0.5, 0.6, 0.6)), params)

    assert roll[0] > 0 and roll[1] == pytest.approx(0.0)
    assert pitch[1] > 0 and pitch[0] == pytest.approx(0.0)


def test_ground_contact_classification():
    airborne = VehicleState.at_rest((0.0, 0.0, 1.0))
    soft = VehicleState(position=np.array([0.0, 0.0, -0.01]), velocity=np.array([0.0, 0.0, -0.5]),
                        attitude=np.array([1.0, 0.0, 0.0, 0.0]), angular_rate=np.zeros(3))
    fast = VehicleState(position=np.array([0.0, 0.0, -0.01]), velocity=np.array([0.0, 0.0, -6.0]),
                        attitude=np.array([1.0, 0.0, 0.0, 0.0]), angular_rate=np.zeros(3))
    tilted = VehicleState(position=np.array([0.0, 0.0, -0.01]), velocity=np.zeros(3),
                          attitude=euler_to_quat(np.radians(80.0), 0.0, 0.0), angular_rate=np.zeros(3))

    assert ground_contact(airborne) == "airborne"
    assert ground_contact(soft) == "landed"
    assert ground_contact(fast) == "crash"
    assert ground_contact(tilted) == "crash"


def test_euler_quaternion_round_trip():
    q = euler_to_quat(0.1, -0.2, 0.3)
    np.testing.assert_allclose(quat_to_euler(q), [0.1, -0.2, 0.3], atol=1e-12)


def test_imu_at_rest_measures_gravity_only():
    state = VehicleState.at_rest((0.0, 0.0, 10.0))
    sample = imu_measure(state, ImuNoise(accel_sigma=0.0, gyro_sigma=0.0), np.random.default_rng(0))

    np.testing.assert_allclose(sample.accel, [0.0, 0.0, 9.81])
    np.testing.assert_allclose(sample.gyro, np.zeros(3))
