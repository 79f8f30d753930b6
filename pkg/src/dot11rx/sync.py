"""Packet detection, CFO estimation/correction and symbol extraction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .fft64 import Format
from .numerics import COS_FULL, PHASE_CIRCLE, SIN_FULL, TRIG_BITS, atan2_k, round_shift_k, sat16_k
from .txref import SAMPLE_RATE, GuardInterval, ltf_time_symbol

STF_LEN = 160
LTF_LEN = 160

# Detector parameters (delay, window, threshold, run length).
DETECT_DELAY = 16
DETECT_WINDOW = 32
DETECT_THRESHOLD = 0.75
DETECT_RUN = 16
DETECT_SPAN = DETECT_WINDOW + DETECT_DELAY  # samples read per metric position
MIN_STREAM = 208

COARSE_LAG = 16
FINE_LAG = 64
NCO_BITS = 32

# Samples the FFT window is pulled ahead of the L-LTF correlation peak, so
# that a timing estimate locked onto a late multipath tap stays inside the GI.
TIMING_BACKOFF = 2
TIMING_SEARCH = 16


class CfoSource(str, Enum):
    COARSE = "coarse"
    FINE = "fine"


@dataclass(frozen=True)
class DetectionResult:
    detected: bool
    start_index: int
    metric_peak: float


@dataclass(frozen=True)
class CfoEstimate:
    freq_hz: float
    source: CfoSource
    phase_units: int = 0
    undefined: bool = False


class SyncError(ValueError):
    pass


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def _metric_sums(x: np.ndarray, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Windowed correlation (re, im) and power for positions lo..hi-1."""
    seg = x[lo : hi + DETECT_SPAN - 1].astype(np.int64)
    a, b = seg[:-DETECT_DELAY], seg[DETECT_DELAY:]
    # r[n] * conj(r[n+16])
    cr = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    ci = a[:, 1] * b[:, 0] - a[:, 0] * b[:, 1]
    pw = b[:, 0] * b[:, 0] + b[:, 1] * b[:, 1]

    def window(v):
        c = np.concatenate([[0], np.cumsum(v)])
        return c[DETECT_WINDOW:] - c[:-DETECT_WINDOW]

    return window(cr), window(ci), window(pw)


def metric_from_sums(cr, ci, pw) -> np.ndarray:
    cr = np.asarray(cr, dtype=np.float64)
    ci = np.asarray(ci, dtype=np.float64)
    pw = np.asarray(pw, dtype=np.float64)
    safe = np.where(pw > 0, pw, 1.0)
    return np.where(pw > 0, np.sqrt(cr * cr + ci * ci) / safe, 0.0)


def autocorr_metric(window) -> float:
    """Normalized lag-16 autocorrelation of one 48-sample window."""
    w = np.asarray(window)
    if w.shape != (DETECT_SPAN, 2):
        raise ValueError(f"expected ({DETECT_SPAN}, 2) samples, got {w.shape}")
    cr, ci, pw = _metric_sums(w, 0, 1)
    return float(metric_from_sums(cr, ci, pw)[0])


def detect_packet(stream, search_limit: int | None = None, chunk: int = 1024) -> DetectionResult:
    """First run of DETECT_RUN metric positions above DETECT_THRESHOLD.

    The stream is scanned in chunks so that a detection near the start does
    not pay for the metric over the whole stream.
    """
    x = np.asarray(stream)
    if len(x) < MIN_STREAM:
        raise SyncError(f"stream must hold at least {MIN_STREAM} samples, got {len(x)}")
    n_pos = len(x) - DETECT_SPAN + 1
    if search_limit is not None:
        n_pos = min(n_pos, search_limit)
    peak = 0.0
    lo = 0
    carry = np.zeros(0, dtype=bool)
    while lo < n_pos:
        hi = min(lo + chunk, n_pos)
        m = metric_from_sums(*_metric_sums(x, lo, hi))
        above = np.concatenate([carry, m > DETECT_THRESHOLD])
        base = lo - len(carry)
        if len(above) >= DETECT_RUN:
            c = np.concatenate([[0], np.cumsum(above)])
            runs = np.flatnonzero(c[DETECT_RUN:] - c[:-DETECT_RUN] == DETECT_RUN)
            if len(runs):
                start = base + int(runs[0])
                run_m = m[max(start - lo, 0) : start - lo + DETECT_RUN]
                return DetectionResult(True, start, float(max(run_m.max(), peak)))
        peak = max(peak, float(m.max()))
        carry = above[-(DETECT_RUN - 1):] if DETECT_RUN > 1 else above[:0]
        lo = hi
    return DetectionResult(False, -1, peak)


# ---------------------------------------------------------------------------
# CFO estimation
# ---------------------------------------------------------------------------

def _lag_correlation(x: np.ndarray, first: int, count: int, lag: int) -> tuple[int, int]:
    """sum of conj(r[n]) * r[n+lag] for n in first..first+count-1."""
    a = x[first : first + count].astype(np.int64)
    b = x[first + lag : first + lag + count].astype(np.int64)
    re = int(np.sum(a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]))
    im = int(np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]))
    return re, im


def _estimate(x, first, count, lag, source) -> CfoEstimate:
    re, im = _lag_correlation(x, first, count, lag)
    units, undefined = atan2_k(re, im)
    freq = units * SAMPLE_RATE / (PHASE_CIRCLE * lag)
    return CfoEstimate(float(freq), source, int(units), bool(undefined))


def estimate_cfo_coarse(stf) -> CfoEstimate:
    """Lag-16 estimate over 128 products of the 160-sample L-STF window.

    The first period is skipped: it absorbs the detector's early start.
    """
    x = np.asarray(stf)
    if len(x) < STF_LEN:
        raise SyncError(f"coarse CFO needs {STF_LEN} samples, got {len(x)}")
    return _estimate(x, 16, 128, COARSE_LAG, CfoSource.COARSE)


def estimate_cfo_fine(ltf) -> CfoEstimate:
    """Lag-64 estimate between the two L-LTF periods (GI-aligned window)."""
    x = np.asarray(ltf)
    if len(x) < LTF_LEN:
        raise SyncError(f"fine CFO needs {LTF_LEN} samples, got {len(x)}")
    return _estimate(x, 32, 64, FINE_LAG, CfoSource.FINE)


# ---------------------------------------------------------------------------
# CFO correction
# ---------------------------------------------------------------------------

def freq_to_word(freq_hz: float) -> int:
    """NCO increment (2**32 per turn per sample), rounded half away from zero."""
    v = freq_hz * (1 << NCO_BITS) / SAMPLE_RATE
    return int(np.copysign(np.floor(abs(v) + 0.5), v))


@numba.njit(cache=True)
def _nco_rotate(x, word, phase0, out, cos_t, sin_t):
    # tables come in as arguments: numba reads them faster than module globals here
    mask = (np.int64(1) << NCO_BITS) - 1
    shift = NCO_BITS - 12
    half = np.int64(1) << (shift - 1)
    acc = phase0
    for n in range(x.shape[0]):
        pw = ((acc + half) >> shift) & (PHASE_CIRCLE - 1)
        c = cos_t[pw]
        s = sin_t[pw]
        re = np.int64(x[n, 0])
        im = np.int64(x[n, 1])
        out[n, 0] = sat16_k(round_shift_k(re * c - im * s, TRIG_BITS))
        out[n, 1] = sat16_k(round_shift_k(re * s + im * c, TRIG_BITS))
        acc = (acc - word) & mask
    return acc


def correct_cfo(stream, freq_hz: float, phase: int = 0) -> tuple[np.ndarray, int]:
    """De-rotate by ``freq_hz``.

    The 32-bit NCO phase accumulator starts at ``phase`` and its value after
    the last sample is returned alongside the output, so consecutive calls
    line up with one long call.
    """
    x = np.ascontiguousarray(stream, dtype=np.int16)
    out = np.empty_like(x)
    nxt = _nco_rotate(x, np.int64(freq_to_word(freq_hz)), np.int64(phase), out, COS_FULL, SIN_FULL)
    return out, int(nxt)


class CfoCorrector:
    """Stateful wrapper around :func:`correct_cfo` for chunked streams."""

    def __init__(self, freq_hz: float):
        self.freq_hz = freq_hz
        self.phase = 0

    def __call__(self, chunk) -> np.ndarray:
        out, self.phase = correct_cfo(chunk, self.freq_hz, self.phase)
        return out


# ---------------------------------------------------------------------------
# timing and symbol extraction
# ---------------------------------------------------------------------------

_LTF_REF = ltf_time_symbol(Format.LEGACY).astype(np.int64)


def ltf_correlation(x, positions) -> np.ndarray:
    """|sum conj(ref) * r|^2 over both L-LTF periods, per candidate start."""
    x = np.asarray(x, dtype=np.int64)
    pos = np.asarray(positions, dtype=np.int64)
    idx = pos[:, None] + np.arange(128)[None, :]
    seg = x[idx]
    ref = np.concatenate([_LTF_REF, _LTF_REF])
    re = np.sum(seg[..., 0] * ref[:, 0] + seg[..., 1] * ref[:, 1], axis=-1)
    im = np.sum(seg[..., 1] * ref[:, 0] - seg[..., 0] * ref[:, 1], axis=-1)
    re = re.astype(np.float64)
    im = im.astype(np.float64)
    return re * re + im * im


def align_ltf(x, expected: int) -> int:
    """Index of the first L-LTF period, searched around ``expected``."""
    lo = max(expected - TIMING_SEARCH, 0)
    hi = min(expected + TIMING_SEARCH, len(x) - 128)
    if hi < lo:
        raise SyncError("stream too short for L-LTF alignment")
    pos = np.arange(lo, hi + 1)
    return int(pos[np.argmax(ltf_correlation(x, pos))])


def extract_symbol(stream, offset: int, gi: GuardInterval) -> np.ndarray:
    """Drop the guard interval at ``offset`` and return the 64-sample window."""
    gi = GuardInterval(gi)
    end = offset + gi.length + 64
    if offset < 0 or end > len(stream):
        raise SyncError(f"symbol at {offset} needs samples up to {end}, stream has {len(stream)}")
    return np.asarray(stream)[offset + gi.length : end]
