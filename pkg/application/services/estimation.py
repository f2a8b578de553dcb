# application/services/estimation.py
# EKF de estado de error (actitud, velocidad, posición): predicción con IMU, corrección con GPS/baro
from __future__ import annotations
import logging
from dataclasses import replace

import numpy as np

from application.services.dynamics import quat_exp, quat_multiply, quat_normalize, quat_to_rotation, skew
from domain.attack import AttackedImuSample
from domain.errors import ContractViolationError
from domain.estimation import ERR_DIM, EkfEstimate, EstimatorConfig, FusionSource

logger = logging.getLogger(__name__)

_I3 = np.eye(3)


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def ekf_predict(
    est: EkfEstimate,
    imu: AttackedImuSample,
    dt: float,
    *,
    config: EstimatorConfig | None = None,
) -> EkfEstimate:
    cfg = config or EstimatorConfig()
    if dt <= 0:
        raise ContractViolationError(f"dt de predicción debe ser > 0: {dt}")
    if imu.accel.value is None or imu.gyro.value is None:
        raise ContractViolationError("predicción con IMU ausente: el planificador debe omitirla")

    f = np.asarray(imu.accel.value, dtype=float)
    w = np.asarray(imu.gyro.value, dtype=float)
    R = quat_to_rotation(est.attitude)
    a = R @ f
    a[2] -= cfg.gravity

    position = est.position + est.velocity * dt + 0.5 * a * dt * dt
    velocity = est.velocity + a * dt
    attitude = quat_normalize(quat_multiply(est.attitude, quat_exp(w * dt)))

    F = np.eye(ERR_DIM)
    F[0:3, 0:3] = _I3 - skew(w) * dt
    F[3:6, 0:3] = -R @ skew(f) * dt
    F[6:9, 3:6] = _I3 * dt
    Q = np.diag(
        [cfg.gyro_process_sigma**2 * dt] * 3
        + [cfg.accel_process_sigma**2 * dt] * 3
        + [cfg.position_process_sigma**2 * dt] * 3
    )
    P = _symmetrize(F @ est.covariance @ F.T + Q)
    return replace(
        est,
        position=position,
        velocity=velocity,
        attitude=attitude,
        covariance=P,
        last_predict_time=imu.time,
        angular_rate=w.copy(),
    )


def _measurement_matrix(source: FusionSource) -> np.ndarray:
    H = np.zeros((source.dim, ERR_DIM))
    if source.kind == "position_fix":
        H[:, 6:9] = _I3
    else:
        H[0, 8] = 1.0
    return H


def ekf_update(
    est: EkfEstimate,
    source: FusionSource,
    *,
    config: EstimatorConfig | None = None,
) -> EkfEstimate:
    cfg = config or EstimatorConfig()
    if not np.all(np.isfinite(source.reading)):
        raise ContractViolationError(f"lectura no finita en {source.kind}")

    H = _measurement_matrix(source)
    predicted = est.position if source.kind == "position_fix" else est.position[2:3]
    y = source.reading - predicted

    if np.any(np.isinf(source.variance)):
        # varianza infinita: la medida no aporta información
        return replace(est, innovation=y, innovation_variance_ratio=0.0, innovation_test_ratio=0.0,
                       source_ratios=_merge_ratio(est.source_ratios, source.kind, 0.0))

    P = est.covariance
    S = H @ P @ H.T + np.diag(source.variance)
    try:
        S_inv = np.linalg.inv(S)
    except np.linalg.LinAlgError as exc:
        raise ContractViolationError(f"covarianza de innovación singular ({source.kind})") from exc

    nis = float(y @ S_inv @ y)
    ratio = nis / source.dim
    test_ratio = ratio / (cfg.gate**2)

    K = P @ H.T @ S_inv
    dx = K @ y
    IKH = np.eye(ERR_DIM) - K @ H
    P_new = _symmetrize(IKH @ P @ IKH.T + K @ np.diag(source.variance) @ K.T)

    attitude = quat_normalize(quat_multiply(est.attitude, quat_exp(dx[0:3])))
    return replace(
        est,
        attitude=attitude,
        velocity=est.velocity + dx[3:6],
        position=est.position + dx[6:9],
        covariance=P_new,
        innovation=y,
        innovation_variance_ratio=ratio,
        innovation_test_ratio=test_ratio,
        source_ratios=_merge_ratio(est.source_ratios, source.kind, test_ratio),
    )


def _merge_ratio(current: tuple[tuple[str, float], ...], kind: str, value: float) -> tuple[tuple[str, float], ...]:
    merged = dict(current)
    merged[kind] = value
    return tuple(sorted(merged.items()))


def covariance_is_psd(P: np.ndarray, *, tol: float = 1e-9) -> bool:
    if not np.allclose(P, P.T, atol=tol):
        return False
    return bool(np.min(np.linalg.eigvalsh(P)) >= -tol)
