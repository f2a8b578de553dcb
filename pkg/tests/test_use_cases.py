# tests/test_use_cases.py
from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

from application.use_cases.campaign_usecase import CampaignUseCase, JobOutput, _attack_window, derive_seeds
from application.use_cases.detector_eval_usecase import DetectorEvalUseCase
from application.use_cases.frequency_sweep_usecase import FrequencySweepUseCase
from application.use_cases.run_scenario_usecase import RunScenarioUseCase
from application.use_cases.synthesis_usecase import (
    SynthesisRolloutUseCase,
    SynthesisTrainUseCase,
    baseline_policy,
    build_env,
)
from domain.errors import ConfigError
from domain.metrics import Trajectory
from infrastructure.filesystem.storage import ArtifactStorage


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_derive_seeds_is_deterministic():
    assert derive_seeds(7, 4) == derive_seeds(7, 4)
    assert len(set(derive_seeds(7, 11))) == 11
    assert derive_seeds(7, 3) == derive_seeds(7, 5)[:3]


def _drifting_output(*, detected: bool, ttd: float | None, end_time: float, outcome: str) -> JobOutput:
    # ataque 8-9 s; la deriva en x empieza después de que el ataque haya parado
    t = np.linspace(0.0, end_time, int(round(end_time * 10)) + 1)
    xyz = np.zeros((t.size, 3))
    xyz[:, 2] = 20.0
    xyz[:, 0] = np.where(t > 9.5, 2.0 * (t - 9.5), 0.0)
    summary = {"outcome": outcome, "detected": detected, "attack_start": 8.0, "ttd": ttd,
               "ttc": None if outcome != "crash" else end_time - 8.0, "end_time": end_time,
               "ekf_runs_in_window": 40}
    return JobOutput("stale-00", "stale", 1, summary, t=t, xyz=xyz)


def _flat_reference(end_time: float) -> Trajectory:
    t = np.linspace(0.0, end_time, int(round(end_time * 10)) + 1)
    xyz = np.column_stack([np.zeros_like(t), np.zeros_like(t), np.full_like(t, 20.0)])
    return Trajectory(t=t, xyz=xyz, role="reference")


def test_deviation_window_ends_at_the_failsafe(small_config, catalog, tmp_path):
    out = _drifting_output(detected=True, ttd=4.0, end_time=15.0, outcome="land")
    assert _attack_window(out) == pytest.approx((8.0, 12.0))

    uc = CampaignUseCase(config=small_config, catalog=catalog, storage=ArtifactStorage(tmp_path))
    result = uc._to_result(out, _flat_reference(15.0))
    assert result.max_deviation == pytest.approx((5.0, 0.0, 0.0), abs=1e-6)


def test_deviation_window_ends_at_the_crash_when_undetected(small_config, catalog, tmp_path):
    out = _drifting_output(detected=False, ttd=None, end_time=11.0, outcome="crash")
    assert _attack_window(out) == pytest.approx((8.0, 11.0))

    uc = CampaignUseCase(config=small_config, catalog=catalog, storage=ArtifactStorage(tmp_path))
    result = uc._to_result(out, _flat_reference(15.0))
    assert result.max_deviation == pytest.approx((3.0, 0.0, 0.0), abs=1e-6)


def test_runs_without_attack_have_no_deviation_window():
    out = _drifting_output(detected=False, ttd=None, end_time=15.0, outcome="timeout")
    out.summary["attack_start"] = None
    assert _attack_window(out) is None


def test_run_scenario_writes_artifacts(small_config, catalog, tmp_path):
    summary = RunScenarioUseCase(config=small_config, catalog=catalog,
                                 storage=ArtifactStorage(tmp_path)).execute(seed=3)

    assert summary["mode"] == "stale"
    assert summary["attack_start"] == pytest.approx(2.0)
    for name in ("trace.csv", "events.csv", "result.json", "metadata.json"):
        assert (tmp_path / name).exists()
    trace = pd.read_csv(tmp_path / "trace.csv")
    assert trace["gamma"].max() == 1
    assert _json(tmp_path / "metadata.json")["seed"] == 3


def test_detector_eval(small_config, catalog, tmp_path):
    uc = DetectorEvalUseCase(config=small_config, catalog=catalog, storage=ArtifactStorage(tmp_path))
    suspend = uc.execute(seed=1, attack="suspend")
    frequency = uc.execute(seed=1, attack="frequency")

    assert suspend["clean_accuracy"] >= 0.9
    assert suspend["attack_accuracy"] <= 0.1
    assert frequency["attack_detected"]
    assert frequency["attack_accuracy"] >= 0.95
    assert suspend["nominal_sample_rate"] == pytest.approx(1600.0)
    windows = pd.read_csv(tmp_path / "windows.csv")
    assert set(windows["phase"]) == {"clean", "attack"}


def test_detector_eval_rejects_unknown_attack(small_config, catalog, tmp_path):
    uc = DetectorEvalUseCase(config=small_config, catalog=catalog, storage=ArtifactStorage(tmp_path))
    with pytest.raises(ConfigError):
        uc.execute(seed=1, attack="absent")


def test_frequency_sweep_skips_rates_below_the_chip_minimum(small_config, catalog, tmp_path):
    report = FrequencySweepUseCase(config=small_config, catalog=catalog,
                                   storage=ArtifactStorage(tmp_path)).execute(master_seed=1)

    assert report["skipped_rates"] == [5.0]
    table = pd.read_csv(tmp_path / "sweep.csv")
    assert table["rate"].tolist() == [400.0, 100.0]
    assert table["divider"].tolist() == [7, 31]
    assert table.loc[1, "ekf_rate"] == pytest.approx(100.0, abs=5.0)


@pytest.mark.slow
def test_campaign_tables(small_config, catalog, tmp_path):
    campaign = CampaignUseCase(config=small_config, catalog=catalog,
                               storage=ArtifactStorage(tmp_path)).execute(master_seed=5)

    modes = [s.mode for s in campaign.summaries]
    assert modes == ["absent", "baseline", "stale"]
    absent = next(r for r in campaign.runs if r.mode == "absent")
    assert absent.ekf_runs_in_window == 0 and not absent.detected
    detected = [r for r in campaign.runs if r.detected and r.ttd is not None]
    assert all(r.ttd >= small_config.failsafe.window - 1e-9 for r in detected)
    assert all(r.max_deviation is not None for r in campaign.runs if r.outcome != "error")
    for name in ("runs.csv", "table_outcomes.csv", "table_deviation.csv", "ttd_samples.csv", "reference.csv"):
        assert (tmp_path / name).exists()
    baseline = next(s for s in campaign.summaries if s.mode == "baseline")
    # 60 m en 5 s: sin ataque ninguna réplica cae ni aterriza
    assert baseline.pct["timeout"] == 100.0


def test_campaign_rejects_unknown_modes(small_config, catalog, tmp_path):
    from domain.errors import ContractViolationError

    uc = CampaignUseCase(config=small_config, catalog=catalog, storage=ArtifactStorage(tmp_path))
    with pytest.raises(ContractViolationError):
        uc.execute(master_seed=1, modes=["erroneous"])


def test_baseline_policies():
    assert baseline_policy("never").version == "constant-0"
    assert baseline_policy("always").version == "constant-1"
    with pytest.raises(ConfigError):
        baseline_policy("sometimes")


def test_build_env_rejects_unknown_mode(small_config, catalog):
    with pytest.raises(ConfigError):
        build_env(small_config, catalog, mode="teleport")


def test_synthesis_train_and_rollout(small_config, catalog, tmp_path):
    train_dir = tmp_path / "train"
    baselines = SynthesisTrainUseCase(config=small_config, catalog=catalog,
                                      storage=ArtifactStorage(train_dir)).execute(seed=0)
    assert set(baselines) == {"initial", "trained", "never", "random", "eval_seeds"}
    assert (train_dir / "policy.pt").exists()
    assert pd.read_csv(train_dir / "reward_curve.csv")["iteration"].tolist() == [0, 8]

    out_dir = tmp_path / "rollout"
    summary = SynthesisRolloutUseCase(config=small_config, catalog=catalog,
                                      storage=ArtifactStorage(out_dir)).execute(
        seed=2, policy=str(train_dir / "policy.pt"))
    assert summary["policy"] == "ppo-8"
    assert summary["steps"] == len(pd.read_csv(out_dir / "rollout.csv"))
