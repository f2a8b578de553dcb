# application/services/control.py
# Consignas de misión y cascada PID posición -> velocidad -> actitud -> velocidad angular -> mezclador
from __future__ import annotations
import logging
import math
from dataclasses import replace

import numpy as np

from application.services.dynamics import quat_to_rotation
from domain.control import ControlError, ControllerGains, ControllerState, MissionPlan, Setpoint
from domain.errors import ContractViolationError
from domain.estimation import EkfEstimate
from domain.models import MotorCommand, QuadrotorParams

logger = logging.getLogger(__name__)


# ───────────────────────── misión ─────────────────────────
def _closest_on_path(points: np.ndarray, position: np.ndarray) -> tuple[int, float, np.ndarray]:
    """(tramo, parámetro s en metros, punto proyectado) del punto más cercano en planta."""
    best = (0, 0.0, points[0])
    best_d = math.inf
    for i in range(len(points) - 1):
        a, b = points[i, :2], points[i + 1, :2]
        seg = b - a
        length = float(np.linalg.norm(seg))
        s = 0.0 if length == 0.0 else float(np.clip(np.dot(position[:2] - a, seg) / length, 0.0, length))
        proj = a + (seg / length if length else 0.0) * s
        d = float(np.linalg.norm(position[:2] - proj))
        if d < best_d - 1e-12:
            best_d = d
            best = (i, s, proj)
    return best


def cross_track_error(plan: MissionPlan, position) -> float:
    points = plan.points()
    _, _, proj = _closest_on_path(points, np.asarray(position, dtype=float))
    return float(np.linalg.norm(np.asarray(position, dtype=float)[:2] - proj))


def mission_setpoint(plan: MissionPlan, est_position) -> Setpoint:
    """Punto "zanahoria" a cruise_speed * lookahead por delante de la proyección sobre el tramo."""
    points = plan.points()
    pos = np.asarray(est_position, dtype=float)
    leg, s, _ = _closest_on_path(points, pos)

    remaining = plan.cruise_speed * plan.lookahead
    i = leg
    while True:
        a, b = points[i, :2], points[i + 1, :2]
        length = float(np.linalg.norm(b - a))
        if s + remaining <= length or i == len(points) - 2:
            s_target = min(s + remaining, length)
            direction = (b - a) / length if length else np.zeros(2)
            xy = a + direction * s_target
            break
        remaining -= length - s
        s = 0.0
        i += 1

    yaw = 0.0
    seg = points[leg + 1, :2] - points[leg, :2]
    if np.linalg.norm(seg) > 0:
        yaw = math.atan2(seg[1], seg[0])
    return Setpoint(position=np.array([xy[0], xy[1], plan.altitude]), yaw=yaw, max_speed=plan.cruise_speed)


def final_waypoint_reached(plan: MissionPlan, est_position) -> bool:
    final = plan.points()[-1]
    return float(np.linalg.norm(np.asarray(est_position, dtype=float)[:2] - final[:2])) < plan.acceptance_radius


def land_setpoint(hold_xy, *, descent_rate: float, yaw: float = 0.0) -> Setpoint:
    return Setpoint(
        position=np.array([hold_xy[0], hold_xy[1], 0.0]),
        yaw=yaw,
        vertical_velocity=-abs(descent_rate),
    )


# ───────────────────────── lazo ─────────────────────────
def linear_feedback(L, e) -> np.ndarray:
    """u = L e."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if L.shape[1] != e.shape[0]:
        raise ContractViolationError(f"L {L.shape} incompatible con e {e.shape}")
    return L @ e


def _vee(M: np.ndarray) -> np.ndarray:
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def _pid(
    error: np.ndarray,
    integral: np.ndarray,
    prev_error: np.ndarray | None,
    gains,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    kp, ki, kd = gains.arrays()
    new_integral = integral + error * dt
    if gains.integral_limit > 0:
        # el límite aplica al término integral ya escalado por ki
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = np.where(ki > 0, gains.integral_limit / np.where(ki > 0, ki, 1.0), 0.0)
        new_integral = np.clip(new_integral, -cap, cap)
    else:
        new_integral = np.where(ki > 0, new_integral, 0.0)
    out = kp * error + ki * new_integral
    if prev_error is not None and np.any(kd != 0):
        out = out + kd * (error - prev_error) / dt
    return out, new_integral


def _desired_velocity(est: EkfEstimate, sp: Setpoint, gains: ControllerGains) -> np.ndarray:
    kp, _, _ = gains.position.arrays()
    v = kp * (sp.position - est.position)
    limit = sp.max_speed
    if limit is not None:
        h = float(np.hypot(v[0], v[1]))
        if h > limit:
            v[:2] *= limit / h
    v[2] = float(np.clip(v[2], -gains.max_climb_rate, gains.max_climb_rate))
    if sp.vertical_velocity is not None:
        v[2] = sp.vertical_velocity
    return v


def _desired_rotation(force: np.ndarray, yaw: float) -> np.ndarray:
    b3 = force / np.linalg.norm(force)
    b1c = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    b2 = np.cross(b3, b1c)
    b2 = b2 / np.linalg.norm(b2)
    b1 = np.cross(b2, b3)
    return np.column_stack([b1, b2, b3])


def mix(thrust: float, torque: np.ndarray, params: QuadrotorParams) -> MotorCommand:
    """Inversa del mezclador X de la planta."""
    d = params.arm_length / math.sqrt(2.0)
    km = params.yaw_moment_coeff
    tx, ty, tz = (float(v) for v in torque)
    base = thrust / 4.0
    per_motor = np.array([
        base + tx / (4.0 * d) - ty / (4.0 * d) + tz / (4.0 * km),
        base - tx / (4.0 * d) - ty / (4.0 * d) - tz / (4.0 * km),
        base - tx / (4.0 * d) + ty / (4.0 * d) + tz / (4.0 * km),
        base + tx / (4.0 * d) + ty / (4.0 * d) - tz / (4.0 * km),
    ])
    return MotorCommand.saturated(per_motor / params.max_thrust)


def compute_control(
    est: EkfEstimate,
    setpoint: Setpoint,
    gains: ControllerGains,
    dt: float,
    *,
    params: QuadrotorParams,
    state: ControllerState | None = None,
) -> tuple[MotorCommand, ControllerState, ControlError]:
    if dt <= 0:
        raise ContractViolationError(f"dt de control debe ser > 0: {dt}")
    st = state or ControllerState()

    # posición -> velocidad
    v_des = _desired_velocity(est, setpoint, gains)
    e_p = setpoint.position - est.position
    if setpoint.vertical_velocity is not None:
        e_p = e_p.copy()
        e_p[2] = 0.0

    # velocidad -> aceleración deseada
    e_v = v_des - est.velocity
    a_des, v_int = _pid(e_v, st.velocity_integral, st.prev_velocity_error, gains.velocity, dt)

    # aceleración -> vector de empuje con límite de inclinación
    force = params.mass * (a_des + np.array([0.0, 0.0, params.gravity]))
    force[2] = max(force[2], 0.1 * params.mass * params.gravity)
    max_h = force[2] * math.tan(math.radians(gains.max_tilt_deg))
    h = float(np.hypot(force[0], force[1]))
    if h > max_h:
        force[:2] *= max_h / h

    R = quat_to_rotation(est.attitude)
    thrust = float(np.dot(force, R[:, 2]))
    thrust = max(thrust, 0.0)

    # actitud -> velocidad angular deseada
    Rd = _desired_rotation(force, setpoint.yaw)
    e_R = 0.5 * _vee(Rd.T @ R - R.T @ Rd)
    kp_att, _, _ = gains.attitude.arrays()
    w_des = np.clip(-kp_att * e_R, -gains.max_body_rate, gains.max_body_rate)

    # velocidad angular -> par
    w = est.angular_rate
    e_w = w_des - w
    alpha, w_int = _pid(e_w, st.rate_integral, st.prev_rate_error, gains.rate, dt)
    J = params.inertia_matrix
    torque = J @ alpha + np.cross(w, J @ w)

    cmd = mix(thrust, torque, params)
    new_state = replace(st, velocity_integral=v_int, rate_integral=w_int,
                        prev_velocity_error=e_v, prev_rate_error=e_w)
    return cmd, new_state, ControlError(position=e_p, velocity=e_v, attitude=e_R, rate=e_w)


def hold_last_control(prev: MotorCommand | None) -> MotorCommand:
    if prev is None:
        raise ContractViolationError("no hay comando previo que mantener")
    return prev
