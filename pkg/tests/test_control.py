# tests/test_control.py
from __future__ import annotations

import numpy as np
import pytest

from application.services.control import (
    compute_control,
    cross_track_error,
    final_waypoint_reached,
    hold_last_control,
    land_setpoint,
    linear_feedback,
    mission_setpoint,
)
from application.services.dynamics import hover_command
from domain.control import ControllerGains, MissionPlan, Setpoint
from domain.errors import ContractViolationError
from domain.estimation import EkfEstimate
from domain.models import QuadrotorParams

PLAN = MissionPlan(waypoints=((0.0, 0.0), (100.0, 0.0), (100.0, 50.0)), altitude=20.0, cruise_speed=5.0)


def test_zero_error_commands_hover():
    params = QuadrotorParams()
    est = EkfEstimate.initial(position=(10.0, 0.0, 20.0))
    cmd, state, err = compute_control(est, Setpoint(position=np.array([10.0, 0.0, 20.0])),
                                      ControllerGains(), 0.0025, params=params)

    np.testing.assert_allclose(cmd.as_array(), hover_command(params).as_array(), atol=1e-9)
    np.testing.assert_allclose(err.position, np.zeros(3))
    np.testing.assert_allclose(state.velocity_integral, np.zeros(3))


def test_climb_request_raises_collective_thrust():
    params = QuadrotorParams()
    est = EkfEstimate.initial(position=(0.0, 0.0, 10.0))
    cmd, _, _ = compute_control(est, Setpoint(position=np.array([0.0, 0.0, 20.0])),
                                ControllerGains(), 0.0025, params=params)
    assert cmd.as_array().sum() > hover_command(params).as_array().sum()


def test_control_rejects_non_positive_dt():
    est = EkfEstimate.initial(position=(0.0, 0.0, 10.0))
    with pytest.raises(ContractViolationError):
        compute_control(est, Setpoint(position=np.zeros(3)), ControllerGains(), 0.0, params=QuadrotorParams())


def test_linear_feedback():
    np.testing.assert_allclose(linear_feedback([[1.0, 2.0]], [1.0, 1.0]), [3.0])
    with pytest.raises(ContractViolationError):
        linear_feedback([[1.0, 2.0]], [1.0, 1.0, 1.0])


def test_hold_last_control():
    cmd = hover_command(QuadrotorParams())
    assert hold_last_control(cmd) is cmd
    with pytest.raises(ContractViolationError):
        hold_last_control(None)


def test_mission_setpoint_leads_along_the_leg():
    sp = mission_setpoint(PLAN, [10.0, 1.0, 20.0])
    np.testing.assert_allclose(sp.position, [15.0, 0.0, 20.0])
    assert sp.yaw == pytest.approx(0.0)


def test_mission_setpoint_wraps_onto_the_next_leg():
    sp = mission_setpoint(PLAN, [98.0, 0.0, 20.0])
    np.testing.assert_allclose(sp.position, [100.0, 3.0, 20.0])


def test_final_waypoint_and_cross_track():
    assert final_waypoint_reached(PLAN, [100.5, 49.0, 20.0])
    assert not final_waypoint_reached(PLAN, [100.0, 40.0, 20.0])
    assert cross_track_error(PLAN, [50.0, 4.0, 20.0]) == pytest.approx(4.0)


def test_land_setpoint_descends():
    sp = land_setpoint([3.0, 4.0], descent_rate=1.5)
    assert sp.vertical_velocity == pytest.approx(-1.5)
    np.testing.assert_allclose(sp.position[:2], [3.0, 4.0])
