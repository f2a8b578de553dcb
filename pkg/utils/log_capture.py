# utils/log_capture.py

from __future__ import annotations
import io
import logging
from collections import Counter

LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(run_tag)s] %(name)s: %(message)s"


class _RunTagFilter(logging.Filter):
    """Etiqueta cada registro con el verbo y la semilla de la ejecución, y cuenta niveles."""

    def __init__(self, tag: str) -> None:
        super().__init__()
        self.tag = tag
        self.counts: Counter[str] = Counter()

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_tag = self.tag
        self.counts[record.levelname] += 1
        return True


class RunLogCapture:
    """
    Captura el log (root) de una ejecución a un buffer en memoria para guardarlo como run.log.
    Cada línea lleva la etiqueta de la ejecución (p.ej. "campaign:7"), de modo que los run.log
    de una campaña o de varias semillas se pueden concatenar y filtrar.
    Uso:
        with RunLogCapture(tag=f"run:{seed}") as cap:
            ... # ejecutar simulación / campaña
            storage.write_text("run.log", cap.text())
    """
    def __init__(self, level=logging.INFO, *, tag: str = "-") -> None:
        self.level = level
        self.tag = tag
        self.buffer = io.StringIO()
        self._filter = _RunTagFilter(tag)
        self.handler = logging.StreamHandler(self.buffer)
        self.handler.setLevel(level)
        self.handler.addFilter(self._filter)
        self.handler.setFormatter(logging.Formatter(LOG_FORMAT))

    def __enter__(self):
        root = logging.getLogger()
        self._prev_level = root.level
        root.setLevel(min(self._prev_level, self.level) if self._prev_level else self.level)
        root.addHandler(self.handler)
        return self

    def __exit__(self, exc_type, exc, tb):
        root = logging.getLogger()
        try:
            root.removeHandler(self.handler)
            root.setLevel(self._prev_level)
        finally:
            self.handler.close()

    def count(self, levelname: str) -> int:
        return self._filter.counts[levelname.upper()]

    def text(self) -> str:
        return self.buffer.getvalue()
