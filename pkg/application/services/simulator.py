# application/services/simulator.py
# Simulación de misión a 400 Hz: planta + chip + ataque + planificador + EKF + failsafe + control
from __future__ import annotations
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
import pandas as pd

from application.services.attack import AttackInjector, gamma_from_plan
from application.services.control import (
    compute_control,
    final_waypoint_reached,
    hold_last_control,
    land_setpoint,
    mission_setpoint,
)
from application.services.detection import failsafe_step
from application.services.dynamics import (
    ground_contact,
    hover_command,
    imu_measure,
    quat_to_euler,
    rest_on_ground,
    step_quadrotor,
)
from application.services.estimation import ekf_predict, ekf_update
from application.services.scheduler import LoopScheduler
from application.services.sensor_chip import SensorChip, inject_message, next_idle_window, suspend_command
from domain.attack import AttackedImuSample, AttackedReading, AttackPlan, FrequencyReduction
from domain.control import ControllerGains, ControllerState, MissionPlan
from domain.detection import FailsafeState
from domain.errors import ContractViolationError, SimulationDivergedError
from domain.estimation import EkfEstimate, EstimatorConfig, FusionSource
from domain.metrics import Trajectory
from domain.models import ImuNoise, MotorCommand, QuadrotorParams, VehicleState
from domain.scheduler import CHECK_TASK, CONTROL_TASK, EKF_TASK, FUSION_TASK, LoopConfig
from domain.sensors import BusModel, ChipProfile, WriteCommand

logger = logging.getLogger(__name__)

FlightMode = Literal["mission", "land"]
SimOutcome = Literal["crash", "complete", "land", "timeout"]

STREAMS = ("imu", "fusion", "attack", "chip", "env", "jitter")

TRACE_COLUMNS = [
    "t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "p", "q", "r",
    "est_x", "est_y", "est_z", "est_vx", "est_vy", "est_vz",
    "innov_ratio", "test_ratio", "gamma", "m0", "m1", "m2", "m3",
    "ekf_rate", "imu_fresh", "mode", "event",
]


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Un generador independiente por fuente de aleatoriedad, derivados de la semilla."""
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


@dataclass(frozen=True)
class SimulationSetup:
    params: QuadrotorParams = field(default_factory=QuadrotorParams)
    noise: ImuNoise = field(default_factory=ImuNoise)
    chip: ChipProfile | None = None
    device_addr: int = 0x68
    bus: BusModel = field(default_factory=BusModel)
    injection_offset: float = 0.00125
    mission: MissionPlan = field(default_factory=lambda: MissionPlan(
        waypoints=((0.0, 0.0), (150.0, 0.0)), altitude=20.0, cruise_speed=6.0))
    gains: ControllerGains = field(default_factory=ControllerGains)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    initial_sigmas: tuple[float, float, float] = (0.02, 0.1, 0.3)
    position_sigma: float = 0.3
    altitude_sigma: float = 0.2
    use_altitude: bool = True
    loop: LoopConfig = field(default_factory=LoopConfig)
    failsafe_threshold: float = 1.0
    failsafe_window: float = 1.0
    descent_rate: float = 1.5
    crash_speed: float = 2.0
    crash_tilt_deg: float = 60.0
    max_time: float = 60.0
    trace_rate: float = 50.0

    def __post_init__(self) -> None:
        if self.chip is None:
            raise ContractViolationError("la simulación necesita un perfil de chip")
        if self.trace_rate > self.loop.loop_rate:
            raise ContractViolationError("trace_rate no puede superar la tasa del lazo")

    @property
    def dt(self) -> float:
        return 1.0 / self.loop.loop_rate


@dataclass(frozen=True)
class SimulationResult:
    outcome: SimOutcome
    end_time: float
    trace: pd.DataFrame
    events: list[dict[str, Any]]
    attack_start: float | None
    failsafe_time: float | None
    ekf_runs_in_window: int

    @property
    def detected(self) -> bool:
        return self.failsafe_time is not None

    @property
    def ttd(self) -> float | None:
        if self.failsafe_time is None or self.attack_start is None:
            return None
        return self.failsafe_time - self.attack_start

    @property
    def ttc(self) -> float | None:
        if self.outcome != "crash" or self.attack_start is None:
            return None
        return self.end_time - self.attack_start

    def trajectory(self, *, role: str = "attacked") -> Trajectory:
        return Trajectory.from_frame(self.trace, role=role)

    def events_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.events, columns=["t", "event", "detail"])


class MissionSimulation:
    """Una misión completa. Copiable con deepcopy para usarla como punto de control."""

    def __init__(self, setup: SimulationSetup, plan: AttackPlan | None, *, seed: int) -> None:
        self.setup = setup
        self.plan = plan
        self.seed = int(seed)
        self.gamma_override: int | None = None
        self._rngs = rng_streams(self.seed)

        start = setup.mission.points()[0]
        self.truth = VehicleState.at_rest(start)
        self.estimate = EkfEstimate.initial(position=start, sigmas=setup.initial_sigmas)
        self.chip = SensorChip(setup.chip, rng=self._rngs["chip"])
        self.injector = AttackInjector(plan, rng=self._rngs["attack"])
        self.scheduler = LoopScheduler(setup.loop)
        self.failsafe = FailsafeState(threshold=setup.failsafe_threshold, window=setup.failsafe_window)
        self.controller_state = ControllerState()
        self.last_command: MotorCommand = hover_command(setup.params)

        self.k = 0
        self.mode: FlightMode = "mission"
        self.outcome: SimOutcome | None = None
        self.end_time: float | None = None
        self.ekf_runs_in_window = 0
        self.events: list[dict[str, Any]] = []
        self._rows: list[list[Any]] = []
        self._pending: list[str] = []
        self._accel_world = np.zeros(3)
        self._held: dict[str, np.ndarray | None] = {"accel": None, "gyro": None}
        self._prev_gamma = 0
        self._stalled = False
        self._last_control_t: float | None = None
        self._hold_xy = start[:2].copy()
        self._trace_every = max(1, int(round(setup.loop.loop_rate / setup.trace_rate)))

    # ───────────────────────── control de ejecución ─────────────────────────
    @property
    def time(self) -> float:
        return self.k * self.setup.dt

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def reseed(self, seed: int) -> None:
        """Reasigna los streams aleatorios (p.ej. al reutilizar un punto de control)."""
        self.seed = int(seed)
        self._rngs = rng_streams(self.seed)
        self.chip.rng = self._rngs["chip"]
        self.injector.rng = self._rngs["attack"]

    def advance(self, ticks: int) -> bool:
        if ticks < 0:
            raise ContractViolationError("ticks debe ser >= 0")
        for _ in range(ticks):
            if self.done:
                break
            self.step()
        return self.done

    def run(self) -> SimulationResult:
        while not self.done:
            self.step()
        return self.result()

    def result(self) -> SimulationResult:
        if not self.done:
            raise ContractViolationError("la simulación no ha terminado")
        return SimulationResult(
            outcome=self.outcome,
            end_time=float(self.end_time),
            trace=self.trace(),
            events=list(self.events),
            attack_start=self.plan.start if self.plan is not None else None,
            failsafe_time=self.failsafe.trigger_time,
            ekf_runs_in_window=self.ekf_runs_in_window,
        )

    def trace(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows, columns=TRACE_COLUMNS)

    def _event(self, t: float, name: str, detail: str = "") -> None:
        self.events.append({"t": round(t, 6), "event": name, "detail": detail})
        self._pending.append(name)

    # ───────────────────────── ataque por registros ─────────────────────────
    def _register_command(self, *, restore: bool) -> WriteCommand:
        profile = self.chip.profile
        if isinstance(self.plan.mode, FrequencyReduction):
            value = profile.reset_value(profile.rate_divider) if restore else self.plan.mode.divider
            return WriteCommand(self.setup.device_addr, profile.rate_divider, value)
        if restore:
            return WriteCommand(self.setup.device_addr, profile.power_mgmt, profile.reset_value(profile.power_mgmt))
        current = self.chip.read_register(profile.power_mgmt)
        return suspend_command(profile, device_addr=self.setup.device_addr, current=current)

    def _inject(self, t: float, *, restore: bool) -> None:
        cmd = self._register_command(restore=restore)
        when = next_idle_window(self.setup.bus, t + self.setup.injection_offset)
        result = inject_message(self.setup.bus, cmd, when, chip=self.chip)
        self._event(when, "injection", f"0x{cmd.register_addr:02X}=0x{cmd.payload:02X} {result}")

    def _gamma(self) -> int:
        if self.gamma_override is not None:
            return int(bool(self.gamma_override))
        return gamma_from_plan(self.plan, self.k)

    # ───────────────────────── lazo ─────────────────────────
    def _fill_partial(self, sample: AttackedImuSample) -> AttackedImuSample:
        if sample.fully_absent:
            return sample
        readings = {}
        for channel in ("accel", "gyro"):
            r: AttackedReading = getattr(sample, channel)
            if r.value is None and self._held[channel] is not None:
                r = AttackedReading(value=self._held[channel].copy(), provenance=r.provenance)
            elif r.value is not None:
                self._held[channel] = np.asarray(r.value, dtype=float).copy()
            readings[channel] = r
        return replace(sample, accel=readings["accel"], gyro=readings["gyro"])

    def _fuse(self) -> None:
        rng = self._rngs["fusion"]
        s = self.setup
        gps = self.truth.position + rng.normal(0.0, s.position_sigma, 3)
        self.estimate = ekf_update(self.estimate, FusionSource("position_fix", gps, s.position_sigma**2),
                                   config=s.estimator)
        if s.use_altitude:
            baro = self.truth.position[2:3] + rng.normal(0.0, s.altitude_sigma, 1)
            self.estimate = ekf_update(self.estimate, FusionSource("altitude", baro, s.altitude_sigma**2),
                                       config=s.estimator)

    def _finish(self, outcome: SimOutcome, t: float, detail: str = "") -> None:
        self.outcome = outcome
        self.end_time = t
        self._event(t, outcome, detail)
        logger.info("Misión terminada (seed=%d): %s en t=%.3fs", self.seed, outcome, t)

    def step(self) -> None:
        if self.done:
            raise ContractViolationError("paso tras el fin de la misión")
        s = self.setup
        dt = s.dt
        t = self.k * dt
        truth = replace(self.truth, time=t)

        clean = imu_measure(truth, s.noise, self._rngs["imu"], accel_world=self._accel_world,
                            gravity=s.params.gravity)
        response = self.chip.read_sample(clean, t)

        gamma = self._gamma()
        if gamma and not self._prev_gamma:
            self._event(t, "attack_onset", type(self.plan.mode).__name__ if self.plan else "override")
            if self.plan is not None and self.plan.injection == "register":
                self._inject(t, restore=False)
        elif self._prev_gamma and not gamma:
            self._event(t, "attack_stop")
            if self.plan is not None and self.plan.injection == "register" and not self.plan.persistent:
                self._inject(t, restore=True)
        self._prev_gamma = gamma

        attacked = self._fill_partial(self.injector.process(response, gamma))
        absent = attacked.fully_absent
        record = self.scheduler.tick(t, response.fresh, absent=absent)
        if absent and not self._stalled:
            self._stalled = True
            self._event(t, "loop_stall")
        elif self._stalled and record.imu_fresh:
            self._stalled = False
            self._event(t, "loop_resume")

        tasks = record.tasks_run
        if EKF_TASK in tasks:
            pred_dt = t - self.estimate.last_predict_time
            if pred_dt <= 0:
                pred_dt = dt
            pred_dt = min(pred_dt, s.estimator.max_predict_dt)
            self.estimate = ekf_predict(self.estimate, attacked, pred_dt, config=s.estimator)
            if gamma:
                self.ekf_runs_in_window += 1
        if FUSION_TASK in tasks:
            self._fuse()
        if CHECK_TASK in tasks:
            check_dt = 1.0 / next(task.rate for task in s.loop.tasks if task.name == CHECK_TASK)
            was = self.failsafe.triggered
            self.failsafe = failsafe_step(self.failsafe, self.estimate.max_test_ratio(), check_dt, t=t)
            if self.failsafe.triggered and not was:
                self._event(t, "failsafe", f"ratio={self.estimate.max_test_ratio():.3f}")
                if self.mode == "mission":
                    self.mode = "land"
                    self._hold_xy = self.estimate.position[:2].copy()
        if CONTROL_TASK in tasks:
            if self.mode == "mission":
                sp = mission_setpoint(s.mission, self.estimate.position)
            else:
                sp = land_setpoint(self._hold_xy, descent_rate=s.descent_rate)
            ctrl_dt = dt if self._last_control_t is None else t - self._last_control_t
            self._last_control_t = t
            self.last_command, self.controller_state, _ = compute_control(
                self.estimate, sp, s.gains, ctrl_dt, params=s.params, state=self.controller_state)
        else:
            self.last_command = hold_last_control(self.last_command)

        if self.k % self._trace_every == 0:
            self._record(t, gamma, record.effective_ekf_rate, record.imu_fresh)

        prev_v = self.truth.velocity
        nxt = step_quadrotor(truth, self.last_command, dt, s.params)
        self.k += 1
        t_next = self.k * dt
        self.truth = replace(nxt, time=t_next)
        self._accel_world = (self.truth.velocity - prev_v) / dt

        if not self.truth.is_finite() or not np.all(np.isfinite(self.estimate.position)):
            raise SimulationDivergedError("estado no finito", time=t_next)

        contact = ground_contact(self.truth, crash_speed=s.crash_speed, crash_tilt_deg=s.crash_tilt_deg)
        if contact == "crash":
            self._finish("crash", t_next, f"v={np.linalg.norm(self.truth.velocity):.2f}m/s")
        elif contact == "landed":
            self.truth = rest_on_ground(self.truth)
            self._finish("land", t_next)
        elif self.mode == "mission" and final_waypoint_reached(s.mission, self.estimate.position):
            self._finish("complete", t_next)
        elif t_next >= s.max_time - 1e-9:
            # ni misión completada ni vehículo en tierra
            self._finish("timeout", t_next, f"modo {self.mode}, z={self.truth.position[2]:.1f}m")
        if self.done:
            self._record(t_next, gamma, record.effective_ekf_rate, record.imu_fresh)

    def _record(self, t: float, gamma: int, ekf_rate: float, fresh: bool) -> None:
        v, e = self.truth, self.estimate
        self._rows.append([
            round(t, 6), *v.position, *v.velocity, *v.attitude, *v.angular_rate,
            *e.position, *e.velocity,
            e.innovation_variance_ratio, e.max_test_ratio(), gamma, *self.last_command.speeds,
            ekf_rate, fresh, self.mode, ";".join(self._pending),
        ])
        self._pending = []

    # ───────────────────────── lecturas para el agente ─────────────────────────
    def euler(self) -> np.ndarray:
        return quat_to_euler(self.truth.attitude)
