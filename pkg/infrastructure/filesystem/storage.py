# infrastructure/filesystem/storage.py
# Directorio de artefactos de una ejecución; escrituras atómicas (temporal + os.replace)
from __future__ import annotations
from datetime import datetime, timezone
from pathlib import Path
from typing import Any
import json
import logging
import os
import uuid

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"no serializable: {type(value).__name__}")


class ArtifactStorage:
    def __init__(self, base: Path) -> None:
        self.base = base.resolve()
        self.base.mkdir(parents=True, exist_ok=True)

    @classmethod
    def for_run(cls, root: Path, verb: str, *, label: str = "") -> "ArtifactStorage":
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
        name = f"{verb}-{stamp}-{uuid.uuid4().hex[:6]}"
        if label:
            name = f"{name}-{label}"
        return cls(root / name)

    def child(self, name: str) -> "ArtifactStorage":
        return ArtifactStorage(self.base / name)

    def path(self, name: str) -> Path:
        return self.base / name

    def _write_atomic(self, name: str, data: bytes) -> Path:
        fp = self.base / name
        fp.parent.mkdir(parents=True, exist_ok=True)
        tmp = fp.with_name(f".{uuid.uuid4().hex}.tmp")
        try:
            tmp.write_bytes(data)
            os.replace(tmp, fp)
        finally:
            if tmp.exists():
                tmp.unlink()
        logger.debug("Artefacto escrito: %s", fp)
        return fp

    def write_text(self, name: str, text: str) -> Path:
        return self._write_atomic(name, text.encode("utf-8"))

    def write_json(self, name: str, payload: Any) -> Path:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default, ensure_ascii=False)
        return self.write_text(name, text + "\n")

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        return self.write_text(name, frame.to_csv(index=False, lineterminator="\n"))
