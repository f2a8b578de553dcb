# tests/test_storage.py
from __future__ import annotations

import json
import logging

import numpy as np
import pandas as pd

from infrastructure.filesystem.storage import ArtifactStorage
from utils.log_capture import RunLogCapture


def test_run_directory_name(tmp_path):
    storage = ArtifactStorage.for_run(tmp_path, "campaign", label="stale")
    name = storage.base.name
    assert name.startswith("campaign-") and name.endswith("-stale")
    assert storage.base.is_dir()


def test_json_and_csv_artifacts(tmp_path):
    storage = ArtifactStorage(tmp_path)
    storage.write_json("result.json", {"b": np.float64(1.5), "a": np.arange(3), "n": None})
    storage.child("errors").write_json("run-00.json", {"error": "boom"})
    storage.write_csv("table.csv", pd.DataFrame({"mode": ["absent"], "pct_crash": [100.0]}))

    data = json.loads((tmp_path / "result.json").read_text(encoding="utf-8"))
    assert data == {"a": [0, 1, 2], "b": 1.5, "n": None}
    assert (tmp_path / "errors" / "run-00.json").exists()
    assert (tmp_path / "table.csv").read_text(encoding="utf-8").splitlines()[0] == "mode,pct_crash"
    assert not list(tmp_path.glob(".*.tmp"))


def test_log_capture_collects_records_and_restores_level():
    root = logging.getLogger()
    before = root.level
    with RunLogCapture(level=logging.INFO) as cap:
        logging.getLogger("application.services.simulator").info("misión terminada")
    assert "misión terminada" in cap.text()
    assert root.level == before
    assert cap.handler not in root.handlers


def test_log_capture_tags_records_with_the_run():
    with RunLogCapture(level=logging.INFO, tag="campaign:7") as cap:
        log = logging.getLogger("application.use_cases.campaign_usecase")
        log.info("campaña iniciada")
        log.warning("sin trayectorias base")
        log.debug("no capturado")

    lines = cap.text().splitlines()
    assert len(lines) == 2
    assert all("[campaign:7] application.use_cases.campaign_usecase:" in line for line in lines)
    assert cap.count("warning") == 1 and cap.count("error") == 0
