# application/use_cases/frequency_sweep_usecase.py
from __future__ import annotations
import logging
from typing import Any

import pandas as pd

from application.services.metrics import largest_remainder_pct
from application.services.sensor_chip import divider_for_rate, resolve_profile
from application.use_cases.campaign_usecase import CampaignJob, derive_seeds, run_jobs
from config.scenario import AttackConfig, ScenarioConfig, config_hash
from domain.metrics import OUTCOMES
from domain.sensors import ChipProfile
from infrastructure.filesystem.storage import ArtifactStorage

logger = logging.getLogger(__name__)


def _achieved_ekf_rate(t, ekf_rate, start: float, settle: float = 1.0) -> float | None:
    # media de la tasa efectiva una vez llena la ventana deslizante tras el ataque
    frame = pd.DataFrame({"t": t, "ekf_rate": ekf_rate})
    sel = frame[frame["t"] >= start + settle]
    return float(sel["ekf_rate"].mean()) if not sel.empty else None


class FrequencySweepUseCase:
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

    def execute(self, *, master_seed: int, runs: int | None = None) -> dict[str, Any]:
        sweep = self.config.sweep
        profile = resolve_profile(sweep.chip, self.catalog)
        n = runs or sweep.runs
        seeds = derive_seeds(master_seed, n)
        start = self.config.attack.start

        jobs: list[CampaignJob] = []
        skipped: list[float] = []
        for rate in sorted(sweep.rates, reverse=True):
            if rate < profile.min_rate - 1e-9:
                logger.warning("%s: tasa %.4g Hz por debajo del mínimo admitido (%.4g Hz), se omite",
                               profile.name, rate, profile.min_rate)
                skipped.append(rate)
                continue
            atk = AttackConfig(mode="frequency", label=f"{rate:g}Hz", start=start,
                               divider=divider_for_rate(profile, rate), persistent=True)
            jobs.extend(CampaignJob(run_id=f"{rate:g}Hz-{i:02d}", mode=atk.name, seed=s, attack=atk,
                                    config=self.config, catalog=self.catalog, chip_name=profile.name)
                        for i, s in enumerate(seeds))
        outputs = run_jobs(jobs, workers=self.workers)

        rows = []
        for rate in sorted(sweep.rates, reverse=True):
            if rate in skipped:
                continue
            mine = [(j, o) for j, o in zip(jobs, outputs) if j.mode == f"{rate:g}Hz"]
            ok = [o for _, o in mine if o.summary is not None]
            counts = [sum(1 for o in ok if o.summary["outcome"] == oc) for oc in OUTCOMES]
            pct = dict(zip(OUTCOMES, largest_remainder_pct(counts)))
            divider = mine[0][0].attack.divider
            achieved = []
            for _, o in mine:
                if o.summary is None:
                    continue
                ekf = _achieved_ekf_rate(o.t, o.ekf_rate, start)
                if ekf is not None:
                    achieved.append(ekf)
            rows.append({
                "rate": rate,
                "divider": divider,
                "chip_rate": profile.gyro_output_rate / (1 + divider),
                "ekf_rate": sum(achieved) / len(achieved) if achieved else None,
                "runs": len(mine),
                "errors": len(mine) - len(ok),
                "pct_crash": pct["crash"],
                "pct_complete": pct["complete"],
                "pct_land": pct["land"],
                "pct_timeout": pct["timeout"],
            })
        table = pd.DataFrame(rows, columns=["rate", "divider", "chip_rate", "ekf_rate", "runs", "errors",
                                            "pct_crash", "pct_complete", "pct_land", "pct_timeout"])

        unstable = [r["rate"] for r in rows if r["pct_complete"] < 100.0]
        stable = [r["rate"] for r in rows if r["pct_complete"] >= 100.0]
        report = {
            "chip": profile.name,
            "min_rate": profile.min_rate,
            "skipped_rates": skipped,
            "instability_threshold": max(unstable) if unstable else None,
            "lowest_stable_rate": min(stable) if stable else None,
            "master_seed": master_seed,
            "seeds": seeds,
            "config_hash": config_hash(self.config),
        }
        self.storage.write_csv("sweep.csv", table)
        self.storage.write_json("sweep.json", report)
        logger.info("Barrido %s: umbral de inestabilidad %s Hz", profile.name, report["instability_threshold"])
        return report
