# application/use_cases/campaign_usecase.py
from __future__ import annotations
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd

from application.services.metrics import aggregate_campaign, max_deviation, reference_trajectory
from application.use_cases.run_scenario_usecase import simulate
from config.scenario import AttackConfig, ScenarioConfig, config_hash
from domain.errors import ContractViolationError
from domain.metrics import CampaignResult, RunResult, Trajectory
from domain.sensors import ChipProfile
from infrastructure.filesystem.storage import ArtifactStorage

logger = logging.getLogger(__name__)

BASELINE = "baseline"


def derive_seeds(master: int, count: int) -> list[int]:
    """Semillas por repetición, derivadas de la semilla maestra (compartidas entre modos)."""
    state = np.random.SeedSequence(int(master)).generate_state(count, dtype=np.uint32)
    return [int(s) for s in state]


@dataclass(frozen=True)
class CampaignJob:
    run_id: str
    mode: str
    seed: int
    attack: AttackConfig
    config: ScenarioConfig
    catalog: dict[str, ChipProfile]
    chip_name: str | None = None


@dataclass(frozen=True)
class JobOutput:
    run_id: str
    mode: str
    seed: int
    summary: dict[str, Any] | None
    t: np.ndarray | None = None
    xyz: np.ndarray | None = None
    ekf_rate: np.ndarray | None = None
    error: str | None = None


def run_job(job: CampaignJob) -> JobOutput:
    # Nivel de módulo para que ProcessPoolExecutor pueda serializarlo
    try:
        res = simulate(job.config, job.catalog, seed=job.seed, attack=job.attack, chip_name=job.chip_name)
    except Exception as exc:
        logger.exception("Fallo en la ejecución %s (seed=%d)", job.run_id, job.seed)
        detail = f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}"
        return JobOutput(job.run_id, job.mode, job.seed, None, error=detail)
    summary = {
        "outcome": res.outcome,
        "detected": res.detected,
        "attack_start": res.attack_start,
        "ttd": res.ttd,
        "ttc": res.ttc,
        "end_time": res.end_time,
        "ekf_runs_in_window": res.ekf_runs_in_window,
    }
    return JobOutput(job.run_id, job.mode, job.seed, summary,
                     t=res.trace["t"].to_numpy(), xyz=res.trace[["x", "y", "z"]].to_numpy(),
                     ekf_rate=res.trace["ekf_rate"].to_numpy())


def run_jobs(jobs: list[CampaignJob], *, workers: int) -> list[JobOutput]:
    if workers <= 0 or len(jobs) <= 1:
        return [run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_job, jobs))


def _attack_window(out: JobOutput) -> tuple[float, float] | None:
    """Del inicio del ataque al failsafe si hubo detección; si no, al final del vuelo (caída o aterrizaje)."""
    s = out.summary
    start = s["attack_start"]
    if start is None:
        return None
    stop = start + s["ttd"] if s["detected"] and s["ttd"] is not None else s["end_time"]
    stop = min(stop, s["end_time"])
    return (start, stop) if stop >= start else None


class CampaignUseCase:
    def __init__(
        self,
        *,
        config: ScenarioConfig,
        catalog: dict[str, ChipProfile],
        storage: ArtifactStorage,
        workers: int = 0,
    ) -> None:
        self.config = config
        self.catalog = catalog
        self.storage = storage
        self.workers = workers

    def _jobs(self, mode: str, attack: AttackConfig, seeds: list[int]) -> list[CampaignJob]:
        return [CampaignJob(run_id=f"{mode}-{i:02d}", mode=mode, seed=s, attack=attack,
                            config=self.config, catalog=self.catalog) for i, s in enumerate(seeds)]

    def _to_result(self, out: JobOutput, reference: Trajectory | None) -> RunResult:
        if out.summary is None:
            self.storage.child("errors").write_json(f"{out.run_id}.json",
                                                    {"run_id": out.run_id, "seed": out.seed, "error": out.error})
            first_line = (out.error or "").splitlines()[0] if out.error else "error"
            return RunResult(run_id=out.run_id, mode=out.mode, seed=out.seed, outcome="error",
                             detected=False, error=first_line)
        s = out.summary
        dev = None
        window = _attack_window(out)
        if reference is not None and window is not None:
            attacked = Trajectory(t=out.t, xyz=out.xyz, role="attacked")
            lo, hi = max(window[0], reference.t[0]), min(window[1], reference.t[-1])
            if hi >= lo and attacked.covers(lo) and attacked.covers(hi):
                dev = tuple(float(v) for v in max_deviation(attacked, reference, (lo, hi)))
        return RunResult(
            run_id=out.run_id, mode=out.mode, seed=out.seed, outcome=s["outcome"], detected=s["detected"],
            attack_start=s["attack_start"], ttd=s["ttd"], ttc=s["ttc"], end_time=s["end_time"],
            max_deviation=dev, ekf_runs_in_window=s["ekf_runs_in_window"],
        )

    def execute(self, *, master_seed: int, runs: int | None = None, modes: list[str] | None = None) -> CampaignResult:
        camp = self.config.campaign
        n = runs or camp.runs
        attacks = [a for a in camp.attacks if not modes or a.name in modes]
        if not attacks:
            raise ContractViolationError(f"ningún ataque de la campaña coincide con {modes}")
        seeds = derive_seeds(master_seed, max(n, camp.baseline_runs))

        baseline_jobs = self._jobs(BASELINE, AttackConfig(mode="none"), seeds[:camp.baseline_runs])
        baseline_out = run_jobs(baseline_jobs, workers=self.workers)
        clean = [Trajectory(t=o.t, xyz=o.xyz, role="reference") for o in baseline_out if o.summary is not None]
        reference = reference_trajectory(clean, rate_hz=camp.reference_rate) if clean else None
        if reference is None:
            logger.error("Sin trayectorias base válidas: no se calcularán desviaciones")

        attack_jobs: list[CampaignJob] = []
        for atk in attacks:
            attack_jobs.extend(self._jobs(atk.name, atk, seeds[:n]))
        logger.info("Campaña: %d ejecuciones base + %d con ataque (%s), workers=%d",
                    len(baseline_jobs), len(attack_jobs), ", ".join(a.name for a in attacks), self.workers)
        attack_out = run_jobs(attack_jobs, workers=self.workers)

        # la base no detecta: su ventana va del inicio del primer ataque al final del vuelo
        ref_start = attacks[0].start
        results = []
        for o in baseline_out:
            if o.summary is not None:
                o.summary["attack_start"] = ref_start
            results.append(self._to_result(o, reference))
        results.extend(self._to_result(o, reference) for o in attack_out)
        campaign = aggregate_campaign(results)

        st = self.storage
        st.write_csv("runs.csv", campaign.runs_table())
        st.write_csv("table_outcomes.csv", campaign.outcome_table())
        st.write_csv("table_deviation.csv", campaign.deviation_table())
        st.write_csv("ttd_samples.csv", campaign.ttd_distribution())
        if reference is not None:
            st.write_csv("reference.csv", pd.DataFrame({"t": reference.t, "x": reference.xyz[:, 0],
                                                       "y": reference.xyz[:, 1], "z": reference.xyz[:, 2]}))
        st.write_json("metadata.json", {
            "verb": "campaign",
            "master_seed": master_seed,
            "seeds": seeds,
            "runs": n,
            "modes": [a.name for a in attacks],
            "config_hash": config_hash(self.config),
            "config": self.config.model_dump(mode="json"),
        })
        failed = sum(1 for r in campaign.runs if r.outcome == "error")
        logger.info("Campaña terminada: %d ejecuciones, %d con error", len(campaign.runs), failed)
        return campaign
