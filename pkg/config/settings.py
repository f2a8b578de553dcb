# config/settings.py
from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
import logging
import os
from dotenv import load_dotenv

load_dotenv()

@dataclass(frozen=True)
class Settings:
    # Salidas
    SDA_OUTPUT_ROOT: str = os.getenv("SDA_OUTPUT_ROOT", "./_runs")

    # Configuración
    SDA_CONFIG: str = os.getenv("SDA_CONFIG", "")   # vacío -> config/default.yaml
    SDA_CHIPS: str = os.getenv("SDA_CHIPS", "")     # vacío -> config/chips.yaml

    # Ejecución
    SDA_LOG_LEVEL: str = os.getenv("SDA_LOG_LEVEL", "INFO").upper()
    SDA_WORKERS: int = int(os.getenv("SDA_WORKERS", 0))      # 0 = secuencial
    SDA_MASTER_SEED: str = os.getenv("SDA_MASTER_SEED", "")  # vacío -> seeds.master del escenario

    # Helpers
    def output_root(self) -> Path:
        return Path(self.SDA_OUTPUT_ROOT).resolve()

    def config_path(self) -> Path | None:
        return Path(self.SDA_CONFIG).resolve() if self.SDA_CONFIG.strip() else None

    def chips_path(self) -> Path | None:
        return Path(self.SDA_CHIPS).resolve() if self.SDA_CHIPS.strip() else None

    def log_level(self) -> int:
        return getattr(logging, self.SDA_LOG_LEVEL, logging.INFO)

    def master_seed(self) -> int | None:
        raw = self.SDA_MASTER_SEED.strip()
        return int(raw) if raw else None
