"""Sustained receive-chain throughput on one thread."""

from __future__ import annotations

import os
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelProfile, apply_profile
from ..fft64 import Format
from ..receiver import receive
from ..txref import GuardInterval, PacketConfig, build_packet

REQUIRED_MSPS = 17.8
DEFAULT_PACKET = PacketConfig(format=Format.HT, gi=GuardInterval.SHORT, mcs=7, nof_ofdm_sym=1000)


@contextmanager
def single_core():
    """Pin the process to one core for the duration (kernels are serial already)."""
    if not hasattr(os, "sched_setaffinity"):
        yield
        return
    before = os.sched_getaffinity(0)
    try:
        os.sched_setaffinity(0, {min(before)})
    except OSError:
        pass
    try:
        yield
    finally:
        os.sched_setaffinity(0, before)


@dataclass
class BenchResult:
    throughput_msps: float
    runs_msps: list[float]
    samples: int
    packets: int
    stage_seconds: dict[str, float] = field(default_factory=dict)
    total_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.throughput_msps >= REQUIRED_MSPS

    def lines(self) -> list[str]:
        out = [
            f"corpus: {self.packets} packets, {self.samples} samples",
            f"runs (Msps): {', '.join(f'{r:.2f}' for r in self.runs_msps)}",
            f"throughput (median): {self.throughput_msps:.2f} Msps "
            f"(required {REQUIRED_MSPS}): {'PASS' if self.passed else 'FAIL'}",
        ]
        for k, v in self.stage_seconds.items():
            out.append(f"  {k:12s} {v * 1e3:9.1f} ms  {100 * v / self.total_seconds:5.1f}%")
        return out


def make_corpus(min_samples: int = 10_000_000, cfg: PacketConfig = DEFAULT_PACKET,
                snr_db: float = 30.0, gap: int = 100, seed: int = 0) -> list[tuple[np.ndarray, PacketConfig]]:
    """Independent packet streams totalling at least ``min_samples`` samples."""
    corpus = []
    total = 0
    i = 0
    pad = np.zeros((gap, 2), dtype=np.int16)
    while total < min_samples:
        s = np.concatenate([pad, build_packet(cfg, seed=seed + i), pad])
        prof = ChannelProfile(snr_db=snr_db, cfo_hz=37e3, sfo_ppm=0.0, seed=seed + i)
        corpus.append((apply_profile(s, prof), cfg))
        total += len(s)
        i += 1
    return corpus


def _run(corpus, timings=None) -> float:
    t = time.perf_counter()
    for stream, cfg in corpus:
        res = receive(stream, cfg, timings=timings)
        if not res.ok:
            raise RuntimeError(f"bench packet failed: {res.error}")
    return time.perf_counter() - t


def bench(corpus=None, runs: int = 5, min_samples: int = 10_000_000) -> BenchResult:
    """Median throughput over ``runs`` passes, then one timed pass per stage."""
    corpus = corpus if corpus is not None else make_corpus(min_samples)
    samples = sum(len(s) for s, _ in corpus)
    with single_core():
        _run(corpus[:1])  # compile and warm caches
        rates = [samples / _run(corpus) / 1e6 for _ in range(runs)]
        timings: dict[str, float] = {}
        total = _run(corpus, timings)
    return BenchResult(statistics.median(rates), rates, samples, len(corpus), timings, total)
