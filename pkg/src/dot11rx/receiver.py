"""Full fixed-point receive chain.

detect -> coarse CFO -> L-LTF alignment -> fine CFO -> CFO correction
-> per-symbol FFT -> channel estimation -> pilot tracking + equalization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import chanest, sync
from .chanest import Csi
from .equalizer import EqualizedBlock, Equalizer
from .fft64 import N_FFT, Format, fft64_at
from .txref import PacketConfig

LTF_EXPECTED = 192  # first L-LTF period relative to the L-STF start
COARSE_REGION = 400

STAGES = (
    "detect", "cfo_coarse", "timing", "cfo_fine", "cfo_correct",
    "fft", "chanest", "cpe", "peg", "lvpe", "equalize",
)


@dataclass
class RxResult:
    cfg: PacketConfig
    detection: sync.DetectionResult
    cfo_coarse: sync.CfoEstimate | None = None
    cfo_fine: sync.CfoEstimate | None = None
    ltf_peak: int = -1  # relative to detection.start_index
    corrected: np.ndarray | None = None
    freq: np.ndarray | None = None  # every FFT'd symbol, in arrival order
    csi_legacy: Csi | None = None
    csi_ht: Csi | None = None
    sig: EqualizedBlock | None = None
    data: EqualizedBlock | None = None
    error: str | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.data is not None

    @property
    def residual_cfo_hz(self) -> float | None:
        if self.cfo_coarse is None or self.cfo_fine is None:
            return None
        return self.cfo_coarse.freq_hz + self.cfo_fine.freq_hz

    def trace(self) -> dict[str, np.ndarray]:
        """Stage outputs as integer arrays, keyed by :data:`STAGES`."""
        t: dict[str, np.ndarray] = {
            "detect": np.array([int(self.detection.detected), self.detection.start_index]),
        }
        if self.cfo_coarse is not None:
            t["cfo_coarse"] = np.array([self.cfo_coarse.phase_units, int(self.cfo_coarse.undefined)])
        if self.ltf_peak >= 0:
            t["timing"] = np.array([self.ltf_peak])
        if self.cfo_fine is not None:
            t["cfo_fine"] = np.array([self.cfo_fine.phase_units, int(self.cfo_fine.undefined)])
        if self.corrected is not None:
            t["cfo_correct"] = self.corrected
        if self.freq is not None:
            t["fft"] = self.freq
        if self.csi_legacy is not None:
            hs = [self.csi_legacy.h] + ([self.csi_ht.h] if self.csi_ht is not None else [])
            t["chanest"] = np.stack(hs)
        blocks = [b for b in (self.sig, self.data) if b is not None]
        if blocks:
            t["cpe"] = np.concatenate([b.cpe for b in blocks])
            t["peg"] = np.concatenate([b.sxy for b in blocks])
            t["lvpe"] = np.concatenate([b.acc_peg for b in blocks])
            # points of every symbol, then the flag bits, flattened
            t["equalize"] = np.concatenate(
                [b.points.reshape(-1).astype(np.int32) for b in blocks]
                + [b.flags.reshape(-1).astype(np.int32) for b in blocks]
            )
        return t


def symbol_offsets(cfg: PacketConfig, t0: int) -> dict[str, np.ndarray]:
    """FFT-window starts for every symbol, given the first L-LTF window ``t0``."""
    sig = t0 + 128 + 80 * np.arange(cfg.n_sig) + 16
    cursor = t0 + 128 + 80 * cfg.n_sig
    ht_ltf = None
    if cfg.format is Format.HT:
        ht_ltf = np.array([cursor + 16])
        cursor += 80
    data = cursor + cfg.symbol_len * np.arange(cfg.nof_ofdm_sym) + cfg.gi.length
    out = {"ltf": np.array([t0, t0 + 64]), "sig": sig, "data": data}
    if ht_ltf is not None:
        out["ht_ltf"] = ht_ltf
    return out


class _Clock:
    def __init__(self, timings: dict[str, float] | None):
        self.timings = timings
        self.t = time.perf_counter()

    def lap(self, name: str) -> None:
        if self.timings is not None:
            now = time.perf_counter()
            self.timings[name] = self.timings.get(name, 0.0) + now - self.t
            self.t = now


def receive(stream, cfg: PacketConfig, smooth_legacy: bool = False, track: bool = True,
            timings: dict[str, float] | None = None, search_limit: int | None = None) -> RxResult:
    """Run the receive chain on one packet stream.

    The packet configuration is known out of band.  ``timings``, when given,
    accumulates wall time per stage.
    """
    x = np.asarray(stream)
    clock = _Clock(timings)
    det = sync.detect_packet(x, search_limit=search_limit)
    res = RxResult(cfg, det)
    clock.lap("detect")
    if not det.detected:
        res.error = "no packet detected"
        return res
    start = det.start_index
    try:
        raw = x[start:]
        res.cfo_coarse = coarse = sync.estimate_cfo_coarse(raw[: sync.STF_LEN])
        region, _ = sync.correct_cfo(raw[:COARSE_REGION], coarse.freq_hz)
        res.ltf_peak = peak = sync.align_ltf(region, LTF_EXPECTED)
        res.cfo_fine = fine = sync.estimate_cfo_fine(region[peak - 32 : peak + 128])
        clock.lap("sync")

        offs = symbol_offsets(cfg, peak - sync.TIMING_BACKOFF)
        end = int(offs["data"][-1]) + N_FFT
        if end > len(raw):
            raise sync.SyncError(f"packet truncated: need {end} samples after detection, have {len(raw)}")
        res.corrected, _ = sync.correct_cfo(raw[:end], coarse.freq_hz + fine.freq_hz)
        clock.lap("cfo_correct")

        order = ["ltf", "sig"] + (["ht_ltf"] if "ht_ltf" in offs else []) + ["data"]
        starts = np.concatenate([offs[k] for k in order])
        res.freq = freq = fft64_at(res.corrected, starts)
        clock.lap("fft")

        n_sig = cfg.n_sig
        csi = chanest.estimate_legacy(freq[0], freq[1])
        if smooth_legacy:
            csi = chanest.smooth(csi)
        res.csi_legacy = csi
        data_freq = freq[2 + n_sig :]
        if cfg.format is Format.HT:
            ht = chanest.estimate_ht(freq[2 + n_sig])
            if cfg.smoothing_recommended:
                ht = chanest.smooth(ht)
            res.csi_ht = ht
            data_freq = freq[3 + n_sig :]
        clock.lap("chanest")

        eq = Equalizer(csi, track=track)
        if cfg.format is Format.LEGACY:
            both = eq.run(freq[2 : 2 + n_sig + cfg.nof_ofdm_sym])
            res.sig, res.data = _split(both, n_sig)
        else:
            res.sig = eq.run(freq[2 : 2 + n_sig])
            eq.restart(res.csi_ht)
            res.data = eq.run(data_freq)
        clock.lap("equalize")
    except sync.SyncError as e:
        res.error = str(e)
    return res


def _split(block: EqualizedBlock, n: int) -> tuple[EqualizedBlock, EqualizedBlock]:
    def part(sl):
        return EqualizedBlock(
            block.points[sl], block.format, block.cpe[sl], block.sxy[sl], block.acc_peg[sl],
            block.pilot_residual[sl], block.flags[sl], block.symbol_flags[sl],
        )

    return part(slice(0, n)), part(slice(n, None))
