"""Reference transmitter: uncoded Legacy and HT packets at constellation level.

The frequency-domain tables are the IEEE 802.11 training sequences.  All
fields share one frequency-domain amplitude (``FREQ_GAIN``), so a received
L-LTF bin equals ``FREQ_GAIN * L_T[k]`` on an identity channel and the
equalizer output is in constellation units.

Constellations are normalized to an average energy of 1/2.  That keeps the
outer 64-QAM points (0.764 per axis) inside the Q1.15 range of the
equalizer output.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fft64 import N_FFT, PILOT_INDICES, Format, bin_of, data_indices
from .numerics import quantize

SAMPLE_RATE = 20e6
# Keeps the time-domain peak below 0.5 FS for any field: at most 56 tones of
# magnitude <= 1.09 add up to 61 * FREQ_GAIN < 0.48.
FREQ_GAIN = 1.0 / 128


class GuardInterval(str, Enum):
    LONG = "long"
    SHORT = "short"

    @property
    def length(self) -> int:
        return 16 if self is GuardInterval.LONG else 8


N_LEGACY_SIG = 1  # L-SIG
N_HT_SIG = 3  # L-SIG, HT-SIG1, HT-SIG2


@dataclass(frozen=True)
class PacketConfig:
    format: Format = Format.LEGACY
    gi: GuardInterval = GuardInterval.LONG
    mcs: int = 0
    nof_ofdm_sym: int = 1
    smoothing_recommended: bool = False

    def __post_init__(self):
        object.__setattr__(self, "format", Format(self.format))
        object.__setattr__(self, "gi", GuardInterval(self.gi))
        if self.format is Format.LEGACY and self.gi is not GuardInterval.LONG:
            raise ValueError("Legacy packets always use the long guard interval")
        if not 0 <= self.mcs <= 7:
            raise ValueError(f"mcs must be 0..7, got {self.mcs}")
        if not 1 <= self.nof_ofdm_sym <= 4095:
            raise ValueError(f"nof_ofdm_sym must be 1..4095, got {self.nof_ofdm_sym}")

    @property
    def n_sig(self) -> int:
        return N_LEGACY_SIG if self.format is Format.LEGACY else N_HT_SIG

    @property
    def n_data_sc(self) -> int:
        return len(data_indices(self.format))

    @property
    def modulation(self) -> "Modulation":
        return MCS_MODULATION[self.mcs]

    @property
    def symbol_len(self) -> int:
        return N_FFT + self.gi.length


# ---------------------------------------------------------------------------
# reference sequences
# ---------------------------------------------------------------------------

_STF_NONZERO = {
    -24: 1 + 1j, -20: -1 - 1j, -16: 1 + 1j, -12: -1 - 1j, -8: -1 - 1j, -4: 1 + 1j,
    4: -1 - 1j, 8: -1 - 1j, 12: 1 + 1j, 16: 1 + 1j, 20: 1 + 1j, 24: 1 + 1j,
}

# L_T[-26..26]; the middle entry (DC) is 0
LLTF_SEQ = np.array(
    [1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
     0,
     1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1],
    dtype=np.int64,
)
# HT-LTF[-28..28] extends L_T with {+1, +1} below and {-1, -1} above
HTLTF_SEQ = np.concatenate([[1, 1], LLTF_SEQ, [-1, -1]]).astype(np.int64)

POLARITY_SEQ = np.array(
    [1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, -1, 1, 1, -1, 1, -1, -1, 1, 1, -1, 1, 1, -1, 1, 1, 1, 1,
     1, 1, -1, 1, 1, 1, -1, 1, 1, -1, -1, 1, 1, 1, -1, 1, -1, -1, -1, 1, -1, 1, -1, -1, 1, -1, -1, 1,
     1, 1, 1, 1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, -1, -1, -1, 1, 1, -1, -1, -1, -1, 1, -1,
     -1, 1, -1, 1, 1, 1, 1, -1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, -1, 1, 1, -1, 1, -1, 1, 1, 1,
     -1, -1, 1, -1, -1, -1, 1, 1, 1, -1, -1, -1, -1, -1, -1, -1],
    dtype=np.int64,
)
PILOT_BASE = np.array([1, 1, 1, -1], dtype=np.int64)

for _a in (LLTF_SEQ, HTLTF_SEQ, POLARITY_SEQ, PILOT_BASE):
    _a.setflags(write=False)


def _table(values: dict[int, complex]) -> np.ndarray:
    out = np.zeros(N_FFT, dtype=np.complex128)
    for k, v in values.items():
        out[k % N_FFT] = v
    return out


def lstf_freq() -> np.ndarray:
    return _table({k: np.sqrt(13 / 6) * v for k, v in _STF_NONZERO.items()})


def lltf_freq() -> np.ndarray:
    return _table({k: float(v) for k, v in zip(range(-26, 27), LLTF_SEQ) if v})


def htltf_freq() -> np.ndarray:
    return _table({k: float(v) for k, v in zip(range(-28, 29), HTLTF_SEQ) if v})


def ltf_sign(fmt: Format) -> np.ndarray:
    """L_T or HT_T laid out in FFT bin order (0 on inactive bins)."""
    return (lltf_freq() if Format(fmt) is Format.LEGACY else htltf_freq()).real.astype(np.int64)


def pilot_polarity(sym_index: int) -> np.ndarray:
    """Pilot values for the symbol ``sym_index`` symbols after the last L-LTF."""
    return POLARITY_SEQ[sym_index % len(POLARITY_SEQ)] * PILOT_BASE


# ---------------------------------------------------------------------------
# constellations
# ---------------------------------------------------------------------------

class Modulation(str, Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"
    QAM16 = "16qam"
    QAM64 = "64qam"

    @property
    def order(self) -> int:
        return {"bpsk": 2, "qpsk": 4, "16qam": 16, "64qam": 64}[self.value]

    @property
    def points(self) -> np.ndarray:
        return _CONSTELLATIONS[self]


MCS_MODULATION = {
    0: Modulation.BPSK, 1: Modulation.QPSK, 2: Modulation.QPSK, 3: Modulation.QAM16,
    4: Modulation.QAM16, 5: Modulation.QAM64, 6: Modulation.QAM64, 7: Modulation.QAM64,
}

CONSTELLATION_ENERGY = 0.5


def _square_qam(m: int) -> np.ndarray:
    side = int(round(np.sqrt(m)))
    levels = np.arange(-(side - 1), side, 2, dtype=np.float64)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts * np.sqrt(CONSTELLATION_ENERGY / np.mean(np.abs(pts) ** 2))


_CONSTELLATIONS = {
    Modulation.BPSK: np.array([-1.0, 1.0]) * np.sqrt(CONSTELLATION_ENERGY) + 0j,
    Modulation.QPSK: _square_qam(4),
    Modulation.QAM16: _square_qam(16),
    Modulation.QAM64: _square_qam(64),
}


def hard_decision(points, modulation: Modulation) -> np.ndarray:
    """Index of the nearest constellation point for each received value."""
    ref = Modulation(modulation).points
    z = np.asarray(points)
    return np.argmin(np.abs(z[..., None] - ref), axis=-1)


def random_payload(cfg: PacketConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random constellation indices and the matching points, shape (nsym, nsc)."""
    rng = np.random.default_rng(seed)
    mod = cfg.modulation
    idx = rng.integers(0, mod.order, size=(cfg.nof_ofdm_sym, cfg.n_data_sc))
    return idx, mod.points[idx]


def sig_points(k: int) -> np.ndarray:
    """Fixed BPSK content of the ``k``-th signal symbol (48 points)."""
    bits = POLARITY_SEQ[(np.arange(48) * 5 + 17 * k + 3) % len(POLARITY_SEQ)]
    return bits * np.sqrt(CONSTELLATION_ENERGY) + 0j


# ---------------------------------------------------------------------------
# waveform builders
# ---------------------------------------------------------------------------

def _to_time(freq: np.ndarray) -> np.ndarray:
    return np.fft.ifft(freq) * (N_FFT * FREQ_GAIN)


def build_stf() -> np.ndarray:
    t = _to_time(lstf_freq())
    return quantize(np.tile(t, 3)[:160])


def ltf_time_symbol(fmt: Format) -> np.ndarray:
    """One quantized 64-sample LTF period (no guard interval)."""
    freq = lltf_freq() if Format(fmt) is Format.LEGACY else htltf_freq()
    return quantize(_to_time(freq))


def build_ltf(fmt: Format) -> np.ndarray:
    t = ltf_time_symbol(fmt)
    if Format(fmt) is Format.LEGACY:
        return np.concatenate([t[32:], t, t])
    return np.concatenate([t[48:], t])


def data_symbol_freq(points, sym_index: int, fmt: Format) -> np.ndarray:
    fmt = Format(fmt)
    idx = data_indices(fmt)
    points = np.asarray(points)
    if points.shape != (len(idx),):
        raise ValueError(f"{fmt.value} symbols carry {len(idx)} data points, got {points.shape}")
    freq = np.zeros(N_FFT, dtype=np.complex128)
    freq[bin_of(idx)] = points
    freq[bin_of(PILOT_INDICES)] = pilot_polarity(sym_index)
    return freq


def build_data_symbol(points, sym_index: int, cfg: PacketConfig, fmt: Format | None = None) -> np.ndarray:
    """GI-prefixed OFDM symbol with pilots inserted.

    ``fmt`` overrides ``cfg.format`` for the Legacy-format signal symbols of
    an HT packet.
    """
    t = _to_time(data_symbol_freq(points, sym_index, cfg.format if fmt is None else fmt))
    gi = cfg.gi.length
    return quantize(np.concatenate([t[-gi:], t]))


def packet_length(cfg: PacketConfig) -> int:
    n = 160 + 160 + 80 * cfg.n_sig
    if cfg.format is Format.HT:
        n += 80
    return n + cfg.nof_ofdm_sym * cfg.symbol_len


def build_packet(cfg: PacketConfig, payload_points=None, seed: int = 0) -> np.ndarray:
    """Complete packet waveform.

    Layout: L-STF, L-LTF, the signal symbols (L-SIG, plus HT-SIG1/2 for HT),
    HT-LTF for HT, then the data symbols.  When ``payload_points`` is None the
    payload comes from :func:`random_payload` with ``seed``.
    """
    if payload_points is None:
        payload_points = random_payload(cfg, seed)[1]
    payload_points = np.asarray(payload_points)
    if payload_points.shape != (cfg.nof_ofdm_sym, cfg.n_data_sc):
        raise ValueError(
            f"payload must be ({cfg.nof_ofdm_sym}, {cfg.n_data_sc}), got {payload_points.shape}"
        )
    sig_cfg = PacketConfig(format=Format.LEGACY)
    parts = [build_stf(), build_ltf(Format.LEGACY)]
    for k in range(cfg.n_sig):
        parts.append(build_data_symbol(sig_points(k), k, sig_cfg))
    if cfg.format is Format.HT:
        parts.append(build_ltf(Format.HT))
    for j, pts in enumerate(payload_points):
        parts.append(build_data_symbol(pts, cfg.n_sig + j, cfg))
    return np.concatenate(parts)
