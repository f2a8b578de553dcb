# application/services/dynamics.py
# Modelos físicos de verdad-terreno: sistema lineal discreto y cuadricóptero X
from __future__ import annotations
import logging
import math
from dataclasses import replace
from typing import Literal

import numpy as np

from domain.errors import ContractViolationError
from domain.models import (
    ImuNoise,
    ImuSample,
    LinearModel,
    LinearState,
    MotorCommand,
    QuadrotorParams,
    VehicleState,
)

logger = logging.getLogger(__name__)

GroundContact = Literal["airborne", "landed", "crash"]


# ───────────────────────── cuaterniones ─────────────────────────
def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_exp(rotvec: np.ndarray) -> np.ndarray:
    """Cuaternión de la rotación `rotvec` (eje * ángulo)."""
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-12:
        half = 0.5 * np.asarray(rotvec, dtype=float)
        return np.array([1.0, half[0], half[1], half[2]])
    axis = np.asarray(rotvec, dtype=float) / angle
    s = math.sin(0.5 * angle)
    return np.array([math.cos(0.5 * angle), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q)


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_to_euler(q: np.ndarray) -> np.ndarray:
    """(roll, pitch, yaw) ZYX en radianes."""
    R = quat_to_rotation(q)
    roll = math.atan2(R[2, 1], R[2, 2])
    pitch = -math.asin(max(-1.0, min(1.0, R[2, 0])))
    yaw = math.atan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def euler_to_quat(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def skew(v: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def tilt_angle(q: np.ndarray) -> float:
    """Ángulo entre el eje z del cuerpo y la vertical."""
    return math.acos(max(-1.0, min(1.0, quat_to_rotation(q)[2, 2])))


# ───────────────────────── sistema lineal ─────────────────────────
def step_linear(state: LinearState, u, model: LinearModel) -> tuple[LinearState, np.ndarray]:
    """x_{k+1} = A x_k + B u_k ; y_k = C x_k (salida con el estado previo al paso)."""
    u = np.atleast_1d(np.asarray(u, dtype=float)).reshape(-1)
    if state.x.shape[0] != model.n:
        raise ContractViolationError(f"estado de dimensión {state.x.shape[0]}, el modelo espera {model.n}")
    if u.shape[0] != model.m:
        raise ContractViolationError(f"entrada de dimensión {u.shape[0]}, el modelo espera {model.m}")
    y = model.C @ state.x
    x_next = model.A @ state.x + model.B @ u
    return LinearState(x=x_next, k=state.k + 1), y


# ───────────────────────── cuadricóptero ─────────────────────────
def hover_command(params: QuadrotorParams) -> MotorCommand:
    thrust = params.mass * params.gravity / 4.0
    return MotorCommand.saturated([thrust / params.max_thrust] * 4)


def motor_wrench(cmd: MotorCommand, params: QuadrotorParams) -> tuple[float, np.ndarray]:
    """Empuje total (N, eje z cuerpo) y par (N·m) del mezclador X.

    Motores: 0 delante-izq, 1 delante-der, 2 detrás-der, 3 detrás-izq (x adelante, y izquierda, z arriba).
    """
    T = np.clip(cmd.as_array(), 0.0, 1.0) * params.max_thrust
    d = params.arm_length / math.sqrt(2.0)
    km = params.yaw_moment_coeff
    torque = np.array([
        d * (T[0] - T[1] - T[2] + T[3]),
        d * (-T[0] - T[1] + T[2] + T[3]),
        km * (T[0] - T[1] + T[2] - T[3]),
    ])
    return float(T.sum()), torque


def linear_acceleration(state: VehicleState, cmd: MotorCommand, params: QuadrotorParams) -> np.ndarray:
    thrust, _ = motor_wrench(cmd, params)
    R = quat_to_rotation(state.attitude)
    a = R[:, 2] * (thrust / params.mass)
    a = a - params.linear_damping / params.mass * state.velocity
    a[2] -= params.gravity
    return a


def step_quadrotor(state: VehicleState, cmd: MotorCommand, dt: float, params: QuadrotorParams) -> VehicleState:
    """Euler semi-implícito: primero velocidades, luego posiciones/actitud con las nuevas."""
    if not 0.0 < dt <= 0.01:
        raise ContractViolationError(f"dt fuera de (0, 0.01]: {dt}")
    _, torque = motor_wrench(cmd, params)
    J = params.inertia_matrix
    w = state.angular_rate
    w_dot = np.linalg.solve(J, torque - np.cross(w, J @ w)) - params.angular_damping * w
    w_next = w + w_dot * dt
    q_next = quat_normalize(quat_multiply(state.attitude, quat_exp(w_next * dt)))

    a = linear_acceleration(state, cmd, params)
    v_next = state.velocity + a * dt
    p_next = state.position + v_next * dt
    return VehicleState(
        position=p_next,
        velocity=v_next,
        attitude=q_next,
        angular_rate=w_next,
        time=state.time + dt,
    )


def ground_contact(state: VehicleState, *, crash_speed: float = 2.0, crash_tilt_deg: float = 60.0) -> GroundContact:
    if state.position[2] > 0.0:
        return "airborne"
    speed = float(np.linalg.norm(state.velocity))
    tilt = math.degrees(tilt_angle(state.attitude))
    if speed > crash_speed or tilt > crash_tilt_deg:
        return "crash"
    return "landed"


def rest_on_ground(state: VehicleState) -> VehicleState:
    """Apoya el vehículo en z=0 tras un contacto suave."""
    pos = state.position.copy()
    pos[2] = 0.0
    return replace(state, position=pos, velocity=np.zeros(3), angular_rate=np.zeros(3))


# ───────────────────────── IMU ─────────────────────────
def imu_measure(
    state: VehicleState,
    noise: ImuNoise,
    rng: np.random.Generator | int | None,
    *,
    accel_world: np.ndarray | None = None,
    gravity: float = 9.81,
) -> ImuSample:
    """Fuerza específica y velocidad angular en ejes cuerpo con ruido gaussiano del stream dado."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    a = np.zeros(3) if accel_world is None else np.asarray(accel_world, dtype=float)
    R = quat_to_rotation(state.attitude)
    specific = R.T @ (a + np.array([0.0, 0.0, gravity]))
    accel = specific + gen.normal(0.0, noise.accel_sigma, 3) if noise.accel_sigma > 0 else specific
    gyro = state.angular_rate + gen.normal(0.0, noise.gyro_sigma, 3) if noise.gyro_sigma > 0 else state.angular_rate.copy()
    return ImuSample(time=state.time, accel=accel, gyro=gyro)
