# domain/detection.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from domain.errors import ContractViolationError

READ = 0
WRITE = 1
# Analogías de I2C TXDR / RXDR (STM32)
TXDR_ADDR = 0x40013420
RXDR_ADDR = 0x40013430

Verdict = Literal["normal", "anomalous"]


@dataclass(frozen=True)
class FailsafeState:
    threshold: float = 1.0
    window: float = 1.0
    accumulator: float = 0.0
    triggered: bool = False
    trigger_time: float | None = None
    time: float = 0.0
    above_since: float | None = None


@dataclass(frozen=True)
class AccessTrace:
    times: np.ndarray
    addresses: np.ndarray
    directions: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.addresses, dtype=np.int64)
        d = np.asarray(self.directions, dtype=np.int8)
        if not (t.shape == a.shape == d.shape) or t.ndim != 1:
            raise ContractViolationError("AccessTrace: columnas de distinta longitud")
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise ContractViolationError("AccessTrace: tiempos no monótonos")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "addresses", a)
        object.__setattr__(self, "directions", d)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def slice(self, t0: float, t1: float) -> "AccessTrace":
        lo, hi = np.searchsorted(self.times, [t0, t1], side="left")
        return AccessTrace(self.times[lo:hi], self.addresses[lo:hi], self.directions[lo:hi])


@dataclass(frozen=True)
class AccessBounds:
    min_freq: dict[int, float]
    max_freq: dict[int, float]
    duration: float
    window: float
    addresses: frozenset[int] = field(default_factory=frozenset)
    chains: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for addr, lo in self.min_freq.items():
            if lo > self.max_freq[addr]:
                raise ContractViolationError(f"límites invertidos para 0x{addr:X}")


@dataclass(frozen=True)
class WindowVerdict:
    start: float
    verdict: Verdict
    reasons: tuple[str, ...] = ()
