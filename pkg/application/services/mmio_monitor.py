# application/services/mmio_monitor.py
# Monitor de accesos MMIO: lista de direcciones, cadena (bigramas) y frecuencia por ventana
from __future__ import annotations
import logging
from typing import Iterable, Sequence

import numpy as np

from domain.detection import (
    READ,
    RXDR_ADDR,
    TXDR_ADDR,
    WRITE,
    AccessBounds,
    AccessTrace,
    Verdict,
    WindowVerdict,
)
from domain.errors import ContractViolationError

logger = logging.getLogger(__name__)

_ACCESS_GAP = 1e-5  # s entre accesos consecutivos de una misma transacción


def simulate_access_trace(
    *,
    duration: float,
    poll_rate: float = 400.0,
    sample_rate: float = 1600.0,
    jitter: float = 0.05,
    burst_reads: int = 6,
    rng: np.random.Generator,
    start: float = 0.0,
) -> AccessTrace:
    """Accesos del MCU al periférico SPI durante `duration` segundos.

    Cada sondeo: escritura TXDR (registro de estado) + lectura RXDR. Si hay muestra nueva
    según `sample_rate`, ráfaga de datos: escritura TXDR + `burst_reads` lecturas RXDR.
    El jitter es acotado (+-jitter * periodo) y no acumulativo.
    """
    n = int(round(duration * poll_rate))
    if n <= 0:
        raise ContractViolationError("duración insuficiente para generar sondeos")
    period = 1.0 / poll_rate
    nominal = start + np.arange(n) * period
    poll_t = nominal + rng.uniform(-jitter, jitter, n) * period

    sample_idx = np.floor(poll_t * sample_rate + 1e-9)
    ready = np.empty(n, dtype=bool)
    ready[0] = True
    ready[1:] = np.diff(sample_idx) > 0

    times = [poll_t, poll_t + _ACCESS_GAP]
    addrs = [np.full(n, TXDR_ADDR), np.full(n, RXDR_ADDR)]
    dirs = [np.full(n, WRITE), np.full(n, READ)]
    burst_t = poll_t[ready]
    m = burst_t.size
    times.append(burst_t + 2 * _ACCESS_GAP)
    addrs.append(np.full(m, TXDR_ADDR))
    dirs.append(np.full(m, WRITE))
    for j in range(burst_reads):
        times.append(burst_t + (3 + j) * _ACCESS_GAP)
        addrs.append(np.full(m, RXDR_ADDR))
        dirs.append(np.full(m, READ))

    t_all = np.concatenate(times)
    order = np.argsort(t_all, kind="stable")
    return AccessTrace(
        times=t_all[order],
        addresses=np.concatenate(addrs)[order],
        directions=np.concatenate(dirs)[order],
    )


def window_starts(trace: AccessTrace, *, window: float, stride: float, t0: float | None = None,
                  t1: float | None = None) -> np.ndarray:
    # ventanas alineadas a múltiplos del paso
    lo = float(np.ceil(trace.start / stride - 1e-9) * stride) if t0 is None else t0
    hi = trace.end if t1 is None else t1
    count = int(np.floor((hi - lo - window) / stride + 1e-9)) + 1
    if count <= 0:
        return np.zeros(0)
    return lo + np.arange(count) * stride


def window_frequencies(trace: AccessTrace, *, window: float = 1.0, stride: float = 0.1,
                       addresses: Iterable[int] | None = None,
                       starts: np.ndarray | None = None) -> dict[int, np.ndarray]:
    """Frecuencia (Hz) por dirección en ventanas [s, s+window)."""
    ws = window_starts(trace, window=window, stride=stride) if starts is None else starts
    addrs = sorted(set(int(a) for a in np.unique(trace.addresses))) if addresses is None else list(addresses)
    out: dict[int, np.ndarray] = {}
    for addr in addrs:
        t = trace.times[trace.addresses == addr]
        lo = np.searchsorted(t, ws, side="left")
        hi = np.searchsorted(t, ws + window, side="left")
        out[addr] = (hi - lo) / window
    return out


def _bigrams(addresses: np.ndarray) -> set[tuple[int, int]]:
    if addresses.size < 2:
        return set()
    pairs = np.unique(np.column_stack([addresses[:-1], addresses[1:]]), axis=0)
    return {(int(a), int(b)) for a, b in pairs}


def learn_bounds(trace: AccessTrace, window: float = 1.0, duration: float | None = None, *,
                 stride: float = 0.1) -> AccessBounds:
    if len(trace) == 0:
        raise ContractViolationError("rastro de accesos vacío")
    span = trace.end - trace.start
    dur = span if duration is None else duration
    if dur + window < span - 1e-6:
        raise ContractViolationError(f"la duración {dur}s no cubre el rastro ({span:.3f}s)")
    freqs = window_frequencies(trace, window=window, stride=stride)
    if not freqs or next(iter(freqs.values())).size == 0:
        raise ContractViolationError("rastro más corto que una ventana")
    bounds = AccessBounds(
        min_freq={a: float(f.min()) for a, f in freqs.items()},
        max_freq={a: float(f.max()) for a, f in freqs.items()},
        duration=float(dur),
        window=window,
        addresses=frozenset(freqs.keys()),
        chains=frozenset(_bigrams(trace.addresses)),
    )
    logger.info("Límites aprendidos en %.1fs: %s", dur,
                {f"0x{a:X}": (bounds.min_freq[a], bounds.max_freq[a]) for a in sorted(bounds.addresses)})
    return bounds


def classify(window_trace: AccessTrace, bounds: AccessBounds) -> WindowVerdict:
    """Veredicto para una única ventana de accesos."""
    reasons: list[str] = []
    seen = set(int(a) for a in np.unique(window_trace.addresses))
    if seen - bounds.addresses:
        reasons.append("access_list")
    if _bigrams(window_trace.addresses) - bounds.chains:
        reasons.append("access_chain")
    for addr in sorted(bounds.addresses):
        freq = np.count_nonzero(window_trace.addresses == addr) / bounds.window
        if not bounds.min_freq[addr] <= freq <= bounds.max_freq[addr]:
            reasons.append("frequency")
            break
    start = window_trace.start if len(window_trace) else 0.0
    verdict: Verdict = "anomalous" if reasons else "normal"
    return WindowVerdict(start=start, verdict=verdict, reasons=tuple(reasons))


def classify_windows(trace: AccessTrace, bounds: AccessBounds, *, stride: float = 0.1) -> list[WindowVerdict]:
    window = bounds.window
    starts = window_starts(trace, window=window, stride=stride)
    freqs = window_frequencies(trace, window=window, stride=stride, starts=starts,
                               addresses=sorted(bounds.addresses))
    unknown_addr = set(int(a) for a in np.unique(trace.addresses)) - bounds.addresses
    structural = bool(unknown_addr) or bool(_bigrams(trace.addresses) - bounds.chains)
    verdicts: list[WindowVerdict] = []
    for i, s in enumerate(starts):
        reasons: list[str] = []
        if structural:
            sub = trace.slice(s, s + window)
            if set(int(a) for a in np.unique(sub.addresses)) - bounds.addresses:
                reasons.append("access_list")
            if _bigrams(sub.addresses) - bounds.chains:
                reasons.append("access_chain")
        for addr in sorted(bounds.addresses):
            f = freqs[addr][i]
            if not bounds.min_freq[addr] <= f <= bounds.max_freq[addr]:
                reasons.append("frequency")
                break
        verdicts.append(WindowVerdict(start=float(s), verdict="anomalous" if reasons else "normal",
                                      reasons=tuple(reasons)))
    return verdicts


def accuracy(verdicts: Sequence[WindowVerdict], labels: Sequence[Verdict] | Verdict) -> float:
    """Ventanas correctamente clasificadas / total."""
    if not verdicts:
        raise ContractViolationError("no hay ventanas que puntuar")
    if isinstance(labels, str):
        labels = [labels] * len(verdicts)
    if len(labels) != len(verdicts):
        raise ContractViolationError("etiquetas y veredictos de distinta longitud")
    correct = sum(1 for v, lab in zip(verdicts, labels) if v.verdict == lab)
    return correct / len(verdicts)


def attack_detected(verdicts: Sequence[WindowVerdict]) -> bool:
    return any(v.verdict == "anomalous" for v in verdicts)
