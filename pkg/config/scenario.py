# config/scenario.py
# Esquema del escenario (YAML/JSON), validado con pydantic; claves desconocidas rechazadas
from __future__ import annotations
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from application.services.attack import mode_from_chip
from application.services.sensor_chip import divider_for_rate, resolve_profile
from application.services.simulator import SimulationSetup
from domain.attack import (
    Absent,
    AttackPlan,
    Compound,
    DefaultValue,
    Erroneous,
    FrequencyReduction,
    SdaMode,
    Stale,
)
from domain.control import ControllerGains, MissionPlan, PidGains
from domain.errors import ConfigError
from domain.estimation import EstimatorConfig
from domain.models import ImuNoise, QuadrotorParams
from domain.scheduler import LoopConfig
from domain.sensors import BusModel, ChannelBehavior, ChipProfile

logger = logging.getLogger(__name__)

CHIPS_FILE = Path(__file__).with_name("chips.yaml")
DEFAULT_SCENARIO = Path(__file__).with_name("default.yaml")

Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ───────────────────────── chips ─────────────────────────
class ChannelBehaviorModel(_Strict):
    kind: Literal["absent", "default", "erroneous"]
    values: Vec3 = (0.0, 0.0, 0.0)
    sigma: Vec3 = (0.0, 0.0, 0.0)

    def to_domain(self) -> ChannelBehavior:
        return ChannelBehavior(kind=self.kind, values=self.values, sigma=self.sigma)


class ChipProfileModel(_Strict):
    name: str
    gyro_output_rate: float = Field(gt=0)
    power_mgmt: int = Field(ge=0, le=0xFF)
    suspend_mask: int = Field(ge=0, le=0xFF)
    suspend_value: int = Field(ge=0, le=0xFF)
    rate_divider: int = Field(ge=0, le=0xFF)
    reset_values: dict[int, int] = Field(default_factory=dict)
    accel_suspend: ChannelBehaviorModel
    gyro_suspend: ChannelBehaviorModel
    suspend_response_rate: float | None = Field(default=None, gt=0)
    max_rate: float | None = Field(default=None, gt=0)
    min_accel_rate: tuple[float, float] | None = None  # [probada, permitida]
    min_gyro_rate: tuple[float, float] | None = None

    def to_domain(self) -> ChipProfile:
        acc = self.min_accel_rate or (None, None)
        gyr = self.min_gyro_rate or (None, None)
        return ChipProfile(
            name=self.name,
            gyro_output_rate=self.gyro_output_rate,
            power_mgmt=self.power_mgmt,
            suspend_mask=self.suspend_mask,
            suspend_value=self.suspend_value,
            rate_divider=self.rate_divider,
            reset_values=dict(self.reset_values),
            accel_suspend=self.accel_suspend.to_domain(),
            gyro_suspend=self.gyro_suspend.to_domain(),
            suspend_response_rate=self.suspend_response_rate,
            max_rate=self.max_rate,
            min_accel_rate_tested=acc[0],
            min_accel_rate_allowed=acc[1],
            min_gyro_rate_tested=gyr[0],
            min_gyro_rate_allowed=gyr[1],
        )


class ChipCatalogModel(_Strict):
    profiles: list[ChipProfileModel]


# ───────────────────────── secciones del escenario ─────────────────────────
class PlantConfig(_Strict):
    mass: float = Field(1.5, gt=0)
    inertia: Vec3 = (0.02, 0.02, 0.04)
    arm_length: float = Field(0.25, gt=0)
    max_thrust: float = Field(8.0, gt=0)
    yaw_moment_coeff: float = Field(0.016, gt=0)
    linear_damping: float = Field(0.25, ge=0)
    angular_damping: float = Field(0.0, ge=0)
    gravity: float = Field(9.81, gt=0)

    def to_domain(self) -> QuadrotorParams:
        return QuadrotorParams(
            mass=self.mass, inertia=self.inertia, arm_length=self.arm_length,
            max_thrust=self.max_thrust, yaw_moment_coeff=self.yaw_moment_coeff,
            linear_damping=self.linear_damping, angular_damping=self.angular_damping,
            gravity=self.gravity,
        )


class ImuConfig(_Strict):
    accel_sigma: float = Field(0.05, ge=0)
    gyro_sigma: float = Field(0.005, ge=0)

    def to_domain(self) -> ImuNoise:
        return ImuNoise(accel_sigma=self.accel_sigma, gyro_sigma=self.gyro_sigma)


class ChipConfig(_Strict):
    profile: str = "MPU6000"
    profiles_file: str | None = None
    profiles: list[ChipProfileModel] = Field(default_factory=list)
    device_addr: int = Field(0x68, ge=0, le=0x7F)


class BusConfig(_Strict):
    poll_rate: float = Field(400.0, gt=0)
    transaction_duration: float = Field(0.0005, ge=0)
    injection_offset: float = Field(0.00125, ge=0)

    def to_domain(self) -> BusModel:
        return BusModel(poll_rate=self.poll_rate, transaction_duration=self.transaction_duration)


class MissionConfig(_Strict):
    waypoints: list[tuple[float, float]] = Field(default_factory=lambda: [(0.0, 0.0), (150.0, 0.0)])
    altitude: float = Field(20.0, gt=0)
    cruise_speed: float = Field(6.0, gt=0)
    lookahead: float = Field(1.0, gt=0)
    acceptance_radius: float = Field(2.0, gt=0)
    max_time: float = Field(60.0, gt=0)

    @field_validator("waypoints")
    @classmethod
    def _two_waypoints(cls, v: list) -> list:
        if len(v) < 2:
            raise ValueError("se necesitan al menos 2 waypoints")
        return v

    def to_domain(self) -> MissionPlan:
        return MissionPlan(waypoints=tuple(self.waypoints), altitude=self.altitude,
                           cruise_speed=self.cruise_speed, lookahead=self.lookahead,
                           acceptance_radius=self.acceptance_radius)


class PidConfig(_Strict):
    p: Vec3 = (0.0, 0.0, 0.0)
    i: Vec3 = (0.0, 0.0, 0.0)
    d: Vec3 = (0.0, 0.0, 0.0)
    integral_limit: float = Field(0.0, ge=0)

    def to_domain(self) -> PidGains:
        return PidGains(p=self.p, i=self.i, d=self.d, integral_limit=self.integral_limit)


class GainsConfig(_Strict):
    position: PidConfig = PidConfig(p=(1.0, 1.0, 1.0))
    velocity: PidConfig = PidConfig(p=(2.0, 2.0, 3.0), i=(0.5, 0.5, 1.0), integral_limit=3.0)
    attitude: PidConfig = PidConfig(p=(6.0, 6.0, 3.0))
    rate: PidConfig = PidConfig(p=(20.0, 20.0, 10.0), i=(5.0, 5.0, 2.0), integral_limit=20.0)
    max_tilt_deg: float = Field(35.0, gt=0, lt=90)
    max_climb_rate: float = Field(2.0, gt=0)
    max_body_rate: float = Field(4.0, gt=0)

    def to_domain(self) -> ControllerGains:
        return ControllerGains(
            position=self.position.to_domain(), velocity=self.velocity.to_domain(),
            attitude=self.attitude.to_domain(), rate=self.rate.to_domain(),
            max_tilt_deg=self.max_tilt_deg, max_climb_rate=self.max_climb_rate,
            max_body_rate=self.max_body_rate,
        )


class EstimatorSection(_Strict):
    accel_process_sigma: float = Field(0.5, gt=0)
    gyro_process_sigma: float = Field(0.02, gt=0)
    position_process_sigma: float = Field(0.05, gt=0)
    initial_sigmas: Vec3 = (0.02, 0.1, 0.3)
    gate: float = Field(5.0, gt=0)
    max_predict_dt: float = Field(0.1, gt=0)

    def to_domain(self, gravity: float) -> EstimatorConfig:
        return EstimatorConfig(
            accel_process_sigma=self.accel_process_sigma,
            gyro_process_sigma=self.gyro_process_sigma,
            position_process_sigma=self.position_process_sigma,
            gravity=gravity, gate=self.gate, max_predict_dt=self.max_predict_dt,
        )


class FusionConfig(_Strict):
    position_sigma: float = Field(0.3, gt=0)
    altitude_sigma: float = Field(0.2, gt=0)
    use_altitude: bool = True


class LoopSection(_Strict):
    rate: float = Field(400.0, gt=0)
    fusion_rate: float = Field(10.0, gt=0)
    check_rate: float = Field(10.0, gt=0)
    telemetry_rate: float = Field(4.0, gt=0)
    rate_window: float = Field(1.0, gt=0)

    def to_domain(self) -> LoopConfig:
        return LoopConfig.with_rates(loop_rate=self.rate, fusion_rate=self.fusion_rate,
                                     check_rate=self.check_rate, telemetry_rate=self.telemetry_rate,
                                     rate_window=self.rate_window)


AttackModeName = Literal["none", "absent", "default", "erroneous", "stale", "frequency", "chip"]


class AttackConfig(_Strict):
    mode: AttackModeName = "none"
    label: str | None = None
    start: float = Field(8.0, ge=0)
    duration: float = Field(1.0, gt=0)
    windows: list[tuple[float, float]] | None = None
    injection: Literal["stream", "register"] = "stream"
    persistent: bool = False
    stale_hold: Literal["recursive", "first_window"] = "recursive"
    default_accel: Vec3 = (141.53, 141.53, 141.53)
    default_gyro: Vec3 = (31.48, 31.49, 31.49)
    mu: Vec3 | None = None
    sigma: Vec3 | None = None
    gyro_mu: Vec3 | None = None
    gyro_sigma: Vec3 | None = None
    erroneous_factor: float = Field(10.0, gt=0)
    divider: int | None = Field(default=None, ge=0, le=255)
    target_rate: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "AttackConfig":
        if self.mode == "frequency" and self.divider is None and self.target_rate is None:
            raise ValueError("el modo frequency requiere divider o target_rate")
        return self

    @property
    def name(self) -> str:
        return self.label or self.mode


class FailsafeConfig(_Strict):
    threshold: float = Field(1.0, gt=0)
    window: float = Field(1.0, gt=0)


class LandingConfig(_Strict):
    descent_rate: float = Field(1.5, gt=0)
    crash_speed: float = Field(2.0, gt=0)
    crash_tilt_deg: float = Field(60.0, gt=0)


class MonitorConfig(_Strict):
    train_duration: float = Field(300.0, gt=0)
    eval_duration: float = Field(60.0, gt=0)
    window: float = Field(1.0, gt=0)
    stride: float = Field(0.1, gt=0)
    jitter: float = Field(0.05, ge=0, lt=0.5)
    burst_reads: int = Field(6, ge=1)
    chip: str = "BMI270"
    attack: Literal["suspend", "frequency"] = "suspend"
    target_rate: float = Field(100.0, gt=0)


class GoalBox(_Strict):
    x: tuple[float, float] = (20.0, 80.0)
    y: tuple[float, float] = (-40.0, 40.0)
    z: tuple[float, float] = (15.0, 25.0)


class SynthesisConfig(_Strict):
    mode: Literal["absent", "default", "erroneous", "stale"] = "stale"
    checkpoint_time: float = Field(10.0, gt=0)
    agent_step: float = Field(0.1, gt=0)
    max_steps: int = Field(300, ge=1)
    goal_box: GoalBox = GoalBox()
    tube_radius: float = Field(5.0, ge=0)
    goal_radius: float = Field(1.0, gt=0)
    path_radius: float = Field(2.0, ge=0)
    up_limit_deg: float = Field(90.0, gt=0)
    reward_variant: Literal["verbatim", "exclusive"] = "verbatim"


class TrainerConfig(_Strict):
    total_steps: int = Field(50_000, ge=1)
    rollout_steps: int = Field(2048, ge=8)
    epochs: int = Field(10, ge=1)
    minibatch: int = Field(256, ge=1)
    lr: float = Field(3e-4, gt=0)
    clip: float = Field(0.2, gt=0)
    gamma: float = Field(0.99, gt=0, le=1)
    gae_lambda: float = Field(0.95, ge=0, le=1)
    entropy_coef: float = Field(0.01, ge=0)
    value_coef: float = Field(0.5, ge=0)
    hidden: int = Field(64, ge=1)
    eval_interval: int = Field(10_000, ge=1)
    eval_episodes: int = Field(20, ge=1)
    eval_seed: int = 10_000


class CampaignConfig(_Strict):
    runs: int = Field(11, ge=1)
    baseline_runs: int = Field(11, ge=1)
    reference_rate: float = Field(10.0, gt=0)
    attacks: list[AttackConfig] = Field(default_factory=lambda: [
        AttackConfig(mode="absent", persistent=True),
        AttackConfig(mode="default"),
        AttackConfig(mode="erroneous"),
        AttackConfig(mode="stale"),
    ])


class SweepConfig(_Strict):
    rates: list[float] = Field(default_factory=lambda: [400.0, 200.0, 150.0, 100.0, 50.0, 31.25, 12.5])
    runs: int = Field(3, ge=1)
    chip: str = "ICM-42688-P"


class SeedsConfig(_Strict):
    master: int = Field(7, ge=0)


class OutputConfig(_Strict):
    directory: str | None = None
    trace_rate: float = Field(50.0, gt=0)


class ScenarioConfig(_Strict):
    plant: PlantConfig = PlantConfig()
    imu: ImuConfig = ImuConfig()
    chip: ChipConfig = ChipConfig()
    bus: BusConfig = BusConfig()
    mission: MissionConfig = MissionConfig()
    gains: GainsConfig = GainsConfig()
    estimator: EstimatorSection = EstimatorSection()
    fusion: FusionConfig = FusionConfig()
    loop: LoopSection = LoopSection()
    attack: AttackConfig = AttackConfig()
    failsafe: FailsafeConfig = FailsafeConfig()
    landing: LandingConfig = LandingConfig()
    monitor: MonitorConfig = MonitorConfig()
    synthesis: SynthesisConfig = SynthesisConfig()
    trainer: TrainerConfig = TrainerConfig()
    campaign: CampaignConfig = CampaignConfig()
    sweep: SweepConfig = SweepConfig()
    seeds: SeedsConfig = SeedsConfig()
    output: OutputConfig = OutputConfig()

    def with_attack(self, attack: AttackConfig) -> "ScenarioConfig":
        return self.model_copy(update={"attack": attack})


# ───────────────────────── carga ─────────────────────────
def _error_path(exc: ValidationError) -> tuple[str, str]:
    err = exc.errors()[0]
    path = ".".join(str(p) for p in err.get("loc", ()))
    return path, err.get("msg", "valor inválido")


def _read_structured(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"no se puede leer {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"formato inválido en {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: el documento raíz debe ser un mapa")
    return data


def parse_scenario(data: dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        path, msg = _error_path(exc)
        raise ConfigError(msg, path=path) from exc


def load_scenario(path: str | Path | None = None) -> ScenarioConfig:
    p = Path(path) if path else DEFAULT_SCENARIO
    cfg = parse_scenario(_read_structured(p))
    logger.info("Escenario cargado: %s (hash=%s)", p, config_hash(cfg)[:12])
    return cfg


def load_chip_catalog(path: str | Path | None = None, *, extra: list[ChipProfileModel] | None = None) -> dict[str, ChipProfile]:
    p = Path(path) if path else CHIPS_FILE
    data = _read_structured(p)
    try:
        catalog = ChipCatalogModel.model_validate(data)
    except ValidationError as exc:
        path_str, msg = _error_path(exc)
        raise ConfigError(msg, path=f"chips.{path_str}") from exc
    profiles = {m.name: m.to_domain() for m in catalog.profiles}
    for m in extra or []:
        profiles[m.name] = m.to_domain()
    return profiles


def chip_catalog_for(cfg: ScenarioConfig, *, default_file: str | Path | None = None) -> dict[str, ChipProfile]:
    return load_chip_catalog(cfg.chip.profiles_file or default_file, extra=cfg.chip.profiles)


def config_hash(cfg: ScenarioConfig) -> str:
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ───────────────────────── plan de ataque ─────────────────────────
def build_sda_mode(attack: AttackConfig, noise: ImuNoise, *, chip: ChipProfile | None = None) -> SdaMode | None:
    if attack.mode == "none":
        return None
    if attack.mode == "absent":
        return Absent()
    if attack.mode == "stale":
        return Stale()
    if attack.mode == "default":
        return Compound(accel=DefaultValue(value=attack.default_accel), gyro=DefaultValue(value=attack.default_gyro))
    if attack.mode == "erroneous":
        f = attack.erroneous_factor
        return Compound(
            accel=Erroneous(mu=attack.mu or (0.0, 0.0, 0.0),
                            sigma=attack.sigma or (f * noise.accel_sigma,) * 3),
            gyro=Erroneous(mu=attack.gyro_mu or (0.0, 0.0, 0.0),
                           sigma=attack.gyro_sigma or (f * noise.gyro_sigma,) * 3),
        )
    if attack.mode == "frequency":
        if attack.divider is not None:
            return FrequencyReduction(divider=attack.divider)
        if chip is None:
            raise ConfigError("target_rate requiere un perfil de chip", path="attack.target_rate")
        return FrequencyReduction(divider=divider_for_rate(chip, attack.target_rate))
    if attack.mode == "chip":
        if chip is None:
            raise ConfigError("el modo chip requiere un perfil", path="chip.profile")
        return mode_from_chip(chip, True)
    raise ConfigError(f"modo desconocido {attack.mode}", path="attack.mode")


def build_attack_plan(attack: AttackConfig, noise: ImuNoise, *, loop_rate: float,
                      chip: ChipProfile | None = None) -> AttackPlan | None:
    mode = build_sda_mode(attack, noise, chip=chip)
    if mode is None:
        return None
    windows = attack.windows or [(attack.start, attack.start + attack.duration)]
    injection = "register" if attack.mode in ("chip", "frequency") else attack.injection
    return AttackPlan(mode=mode, windows=tuple(windows), injection=injection,
                      persistent=attack.persistent, stale_hold=attack.stale_hold, loop_rate=loop_rate)


# ───────────────────────── montaje de la simulación ─────────────────────────
def build_setup(cfg: ScenarioConfig, catalog: dict[str, ChipProfile], *, chip_name: str | None = None) -> SimulationSetup:
    params = cfg.plant.to_domain()
    return SimulationSetup(
        params=params,
        noise=cfg.imu.to_domain(),
        chip=resolve_profile(chip_name or cfg.chip.profile, catalog),
        device_addr=cfg.chip.device_addr,
        bus=cfg.bus.to_domain(),
        injection_offset=cfg.bus.injection_offset,
        mission=cfg.mission.to_domain(),
        gains=cfg.gains.to_domain(),
        estimator=cfg.estimator.to_domain(params.gravity),
        initial_sigmas=cfg.estimator.initial_sigmas,
        position_sigma=cfg.fusion.position_sigma,
        altitude_sigma=cfg.fusion.altitude_sigma,
        use_altitude=cfg.fusion.use_altitude,
        loop=cfg.loop.to_domain(),
        failsafe_threshold=cfg.failsafe.threshold,
        failsafe_window=cfg.failsafe.window,
        descent_rate=cfg.landing.descent_rate,
        crash_speed=cfg.landing.crash_speed,
        crash_tilt_deg=cfg.landing.crash_tilt_deg,
        max_time=cfg.mission.max_time,
        trace_rate=cfg.output.trace_rate,
    )
