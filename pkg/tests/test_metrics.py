# tests/test_metrics.py
from __future__ import annotations

import random

import numpy as np
import pytest

from application.services.metrics import (
    aggregate_campaign,
    confidence_interval_95,
    deviation,
    largest_remainder_pct,
    max_deviation,
    reference_trajectory,
)
from domain.errors import ContractViolationError
from domain.metrics import NA, RunResult, Trajectory

T = np.linspace(0.0, 10.0, 101)


def _line(slope: float, *, offset: float = 0.0) -> Trajectory:
    return Trajectory(t=T, xyz=np.column_stack([slope * T + offset, np.zeros_like(T), np.full_like(T, 20.0)]))


def test_deviation_is_per_axis_absolute_difference():
    d = deviation(_line(2.0), _line(1.0), 4.0)
    np.testing.assert_allclose(d, [4.0, 0.0, 0.0])


def test_deviation_outside_coverage():
    with pytest.raises(ContractViolationError):
        deviation(_line(1.0), _line(1.0), 11.0)


def test_max_deviation_over_window():
    d = max_deviation(_line(2.0), _line(1.0), (2.0, 5.0))
    np.testing.assert_allclose(d, [5.0, 0.0, 0.0])


def test_max_deviation_rejects_inverted_window():
    with pytest.raises(ContractViolationError):
        max_deviation(_line(2.0), _line(1.0), (5.0, 2.0))


def test_reference_is_the_mean_of_baselines():
    ref = reference_trajectory([_line(1.0), _line(1.0, offset=2.0)], rate_hz=10.0)
    assert ref.role == "reference"
    np.testing.assert_allclose(ref.xyz[:, 0], ref.t + 1.0)
    assert ref.t[-1] == pytest.approx(10.0)


@pytest.mark.parametrize(
    "counts,expected",
    [
        ([5, 3, 3], [45.46, 27.27, 27.27]),
        ([1, 1, 1], [33.34, 33.33, 33.33]),
        ([11, 0, 0], [100.0, 0.0, 0.0]),
        ([0, 0, 0], [0.0, 0.0, 0.0]),
    ],
)
def test_largest_remainder(counts, expected):
    pct = largest_remainder_pct(counts)
    assert pct == pytest.approx(expected)
    if sum(counts):
        assert sum(pct) == pytest.approx(100.0)


def _runs() -> list[RunResult]:
    runs = []
    for seed in range(5):
        runs.append(RunResult(run_id=f"absent-{seed}", mode="absent", seed=seed, outcome="crash",
                              detected=False, attack_start=8.0, ttc=2.0 + seed, end_time=10.0 + seed,
                              max_deviation=(float(seed), 0.0, 20.0)))
        runs.append(RunResult(run_id=f"stale-{seed}", mode="stale", seed=seed,
                              outcome="land" if seed < 3 else "complete", detected=seed < 3,
                              attack_start=8.0, ttd=1.0 + 0.1 * seed if seed < 3 else None,
                              end_time=40.0, max_deviation=(0.5, 0.5, 0.5)))
    runs.append(RunResult(run_id="stale-9", mode="stale", seed=9, outcome="error", detected=False,
                          error="SimulationDivergedError"))
    return runs


def test_aggregate_campaign_summaries():
    campaign = aggregate_campaign(_runs())
    by_mode = {s.mode: s for s in campaign.summaries}

    absent = by_mode["absent"]
    assert absent.pct == {"crash": 100.0, "complete": 0.0, "land": 0.0, "timeout": 0.0}
    assert absent.detected_pct == 0.0
    assert absent.ttd_mean == NA and absent.ttd_std == NA
    assert absent.ttc_mean == pytest.approx(4.0)

    stale = by_mode["stale"]
    assert stale.runs == 6
    assert stale.pct == {"crash": 0.0, "complete": 40.0, "land": 60.0, "timeout": 0.0}
    assert stale.ttd_mean == pytest.approx(1.1)
    assert stale.ttc_mean == NA
    assert len(campaign.ttd_samples) == 3


def test_aggregate_is_independent_of_completion_order():
    runs = _runs()
    shuffled = list(runs)
    random.Random(3).shuffle(shuffled)

    a = aggregate_campaign(runs)
    b = aggregate_campaign(shuffled)
    assert a.summaries == b.summaries
    assert a.outcome_table().equals(b.outcome_table())


def test_tables_have_stable_columns():
    campaign = aggregate_campaign(_runs())
    assert list(campaign.deviation_table().columns) == ["mode", "x_mean", "x_std", "y_mean", "y_std",
                                                        "z_mean", "z_std"]
    assert campaign.runs_table().shape[0] == 11


def test_empty_campaign_is_rejected():
    with pytest.raises(ContractViolationError):
        aggregate_campaign([])


def test_confidence_interval():
    low, high = confidence_interval_95([1.0, 2.0, 3.0, 4.0])
    assert low < 2.5 < high
    assert confidence_interval_95([3.0]) == (3.0, 3.0)
