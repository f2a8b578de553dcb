# domain/errors.py
from __future__ import annotations


class SdaSimError(Exception):
    """Base de todos los errores del simulador."""


class ConfigError(SdaSimError):
    def __init__(self, message: str, *, path: str = "") -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ContractViolationError(SdaSimError):
    """Precondición de una operación incumplida (dimensiones, entrada ausente, paso tras fin...)."""


class UnknownProfileError(SdaSimError):
    pass


class SimulationDivergedError(SdaSimError):
    def __init__(self, message: str, *, time: float | None = None) -> None:
        self.time = time
        super().__init__(message if time is None else f"{message} (t={time:.4f}s)")


class TrainingDivergedError(SdaSimError):
    pass
