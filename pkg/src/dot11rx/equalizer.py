"""Pilot phase tracking (CPE / PEG / LVPE) and zero-forcing equalization.

The per-symbol flow follows the hardware equalizer loop:

    read 64 bins -> get_polarity -> cpe_estimate
    -> lvpe_correction(pilots, Sxy = 0) -> peg_estimate
    -> lvpe_correction(data, Sxy) -> correct_and_equalize

Phases are 2*pi/4096 units.  The accumulated phase-error gradient
``acc_peg`` is kept at a finer 2*pi/2**20 per subcarrier index
(``PEG_FRAC_BITS`` extra bits) and only reduced to phase units inside the
``i * acc_peg`` product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .chanest import Csi
from .fft64 import N_FFT, PILOT_INDICES, Format, bin_of, data_indices
from .numerics import (
    COS_FULL,
    PHASE_CIRCLE,
    PHASE_WORD_MAX,
    PHASE_WORD_MIN,
    atan2_k,
    round_div_fast_k,
    round_div_k,
    round_shift_k,
    rotate_k,
    SIN_FULL,
    sat16_k,
    to_complex,
)
from .txref import PILOT_BASE, POLARITY_SEQ, PacketConfig

PEG_FRAC_BITS = 8
PILOT_SQ_SUM = int(np.sum(PILOT_INDICES**2))  # 980
SXY_MAX = (1 << 23) - 1
SXY_MIN = -(1 << 23)
MAX_INDEX = 28
# |i * acc_peg| must leave room for the CPE inside an int18 phase word
ACC_PEG_LIMIT = ((PHASE_WORD_MAX - PHASE_CIRCLE // 2) // MAX_INDEX) << PEG_FRAC_BITS
ZF_SHIFT = 15

FLAG_UNEQUALIZABLE = 1
FLAG_CPE_DEGENERATE = 2
FLAG_PEG_DEGENERATE = 4

_PILOT_IDX = PILOT_INDICES.astype(np.int64)
_POLARITY = POLARITY_SEQ.astype(np.int64)
_BASE = PILOT_BASE.astype(np.int64)


@dataclass
class PilotTrackState:
    format: Format = Format.LEGACY
    pol_nr: int = 0
    acc_peg: int = 0  # 2*pi / 2**20 per subcarrier index
    current_polarity: np.ndarray = field(default_factory=lambda: _BASE.copy())

    @property
    def acc_peg_phase(self) -> float:
        """Accumulated gradient in phase units per subcarrier index."""
        return self.acc_peg / (1 << PEG_FRAC_BITS)


@dataclass(frozen=True)
class EqualizedSymbol:
    points: np.ndarray  # (n_data, 2) Q1.15, ascending subcarrier order
    format: Format
    flags: np.ndarray | None = None

    def as_complex(self) -> np.ndarray:
        return to_complex(self.points)


@dataclass
class EqualizedBlock:
    """Equalizer output for a run of symbols plus per-symbol tracking values."""

    points: np.ndarray  # (n_sym, n_data, 2)
    format: Format
    cpe: np.ndarray
    sxy: np.ndarray
    acc_peg: np.ndarray
    pilot_residual: np.ndarray  # (n_sym, 4) residual pilot phase after correction
    flags: np.ndarray  # (n_sym, n_data) per-subcarrier flag bits
    symbol_flags: np.ndarray  # (n_sym,)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i) -> EqualizedSymbol:
        return EqualizedSymbol(self.points[i], self.format, self.flags[i])

    def as_complex(self) -> np.ndarray:
        return to_complex(self.points)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _cpe_k(sym, h, pilot_bins, pol):
    acc_re = np.int64(0)
    acc_im = np.int64(0)
    for p in range(pilot_bins.shape[0]):
        b = pilot_bins[p]
        xr = np.int64(sym[b, 0])
        xi = np.int64(sym[b, 1])
        hr = np.int64(h[b, 0])
        hi = np.int64(h[b, 1])
        acc_re += pol[p] * (xr * hr + xi * hi)
        acc_im += pol[p] * (xr * hi - xi * hr)
    return atan2_k(acc_re, acc_im)


@numba.njit(cache=True)
def _peg_k(sym, sym_phase, h, pilot_idx, pol, residual, cos_t, sin_t):
    sxy = np.int64(0)
    degenerate = False
    for p in range(pilot_idx.shape[0]):
        i = pilot_idx[p]
        b = i & (N_FFT - 1)
        xr, xi = rotate_k(np.int64(sym[b, 0]), np.int64(sym[b, 1]), sym_phase[b], cos_t, sin_t)
        hr = np.int64(h[b, 0])
        hi = np.int64(h[b, 1])
        re = pol[p] * (xr * hr + xi * hi)
        im = pol[p] * (xr * hi - xi * hr)
        ang, und = atan2_k(re, im)
        degenerate = degenerate or und
        residual[p] = ang
        sxy += i * ang
    if sxy > SXY_MAX:
        sxy = SXY_MAX
    elif sxy < SXY_MIN:
        sxy = SXY_MIN
    return sxy, degenerate


@numba.njit(cache=True)
def _lvpe_k(sym_phase, cpe, acc_peg, sxy, indices, length):
    inc = round_div_k(sxy << PEG_FRAC_BITS, PILOT_SQ_SUM)
    acc = acc_peg + inc
    if acc > ACC_PEG_LIMIT:
        acc = ACC_PEG_LIMIT
    elif acc < -ACC_PEG_LIMIT:
        acc = -ACC_PEG_LIMIT
    for n in range(length):
        i = indices[n]
        ph = cpe + round_shift_k(i * acc, PEG_FRAC_BITS)
        if ph > PHASE_WORD_MAX:
            ph = PHASE_WORD_MAX
        elif ph < PHASE_WORD_MIN:
            ph = PHASE_WORD_MIN
        sym_phase[i & (N_FFT - 1)] = ph
    return acc


@numba.njit(cache=True)
def _zf_k(sym, sym_phase, h, data_idx, length, out, flags, cos_t, sin_t):
    for n in range(length):
        b = data_idx[n] & (N_FFT - 1)
        xr, xi = rotate_k(np.int64(sym[b, 0]), np.int64(sym[b, 1]), sym_phase[b], cos_t, sin_t)
        hr = np.int64(h[b, 0])
        hi = np.int64(h[b, 1])
        den = hr * hr + hi * hi
        if den == 0:
            out[n, 0] = 0
            out[n, 1] = 0
            flags[n] = FLAG_UNEQUALIZABLE
            continue
        num_re = xr * hr + xi * hi
        num_im = xi * hr - xr * hi
        # |num| << 15 stays below 2**47, inside the fast path's exact range
        half_inv = 0.5 / den
        out[n, 0] = sat16_k(round_div_fast_k(num_re << ZF_SHIFT, den, half_inv))
        out[n, 1] = sat16_k(round_div_fast_k(num_im << ZF_SHIFT, den, half_inv))
        flags[n] = 0


@numba.njit(cache=True)
def _packet_k(syms, h, pilot_idx, data_idx, polarity, base, pol_nr, acc_peg, track,
              out, cpe_out, sxy_out, acc_out, residual, flags, sym_flags, cos_t, sin_t):
    pilot_bins = pilot_idx & (N_FFT - 1)
    sym_phase = np.zeros(N_FFT, dtype=np.int64)
    pol = np.empty(4, dtype=np.int64)
    n_poly = polarity.shape[0]
    for s in range(syms.shape[0]):
        sym = syms[s]
        for p in range(4):
            pol[p] = polarity[pol_nr] * base[p]
        pol_nr = (pol_nr + 1) % n_poly
        sf = 0
        if track:
            cpe, und = _cpe_k(sym, h, pilot_bins, pol)
            if und:
                sf |= FLAG_CPE_DEGENERATE
            _lvpe_k(sym_phase, cpe, acc_peg, 0, pilot_idx, pilot_idx.shape[0])
            sxy, deg = _peg_k(sym, sym_phase, h, pilot_idx, pol, residual[s], cos_t, sin_t)
            if deg:
                sf |= FLAG_PEG_DEGENERATE
            acc_peg = _lvpe_k(sym_phase, cpe, acc_peg, sxy, data_idx, data_idx.shape[0])
            # pilot residual under the final correction, for diagnostics only
            _lvpe_k(sym_phase, cpe, acc_peg, 0, pilot_idx, pilot_idx.shape[0])
            _peg_k(sym, sym_phase, h, pilot_idx, pol, residual[s], cos_t, sin_t)
        else:
            cpe = 0
            sxy = 0
            _peg_k(sym, sym_phase, h, pilot_idx, pol, residual[s], cos_t, sin_t)
        cpe_out[s] = cpe
        sxy_out[s] = sxy
        acc_out[s] = acc_peg
        _zf_k(sym, sym_phase, h, data_idx, data_idx.shape[0], out[s], flags[s], cos_t, sin_t)
        sym_flags[s] = sf
        for n in range(data_idx.shape[0]):
            flags[s, n] |= sf
    return pol_nr, acc_peg


# ---------------------------------------------------------------------------
# per-operation API
# ---------------------------------------------------------------------------

def get_polarity(state: PilotTrackState) -> np.ndarray:
    """Pilot signs for the current symbol; advances ``state.pol_nr``."""
    pol = _POLARITY[state.pol_nr] * _BASE
    state.current_polarity = pol
    state.pol_nr = (state.pol_nr + 1) % len(_POLARITY)
    return pol


def cpe_estimate(sym, csi: Csi, pol) -> tuple[int, bool]:
    """Common phase error; the flag marks an all-zero pilot correlation."""
    cpe, und = _cpe_k(np.asarray(sym), csi.h, bin_of(PILOT_INDICES), np.asarray(pol, dtype=np.int64))
    return int(cpe), bool(und)


def peg_estimate(sym, sym_phase, csi: Csi, pol) -> tuple[int, bool]:
    """Regression numerator Sxy over the phase-corrected pilots."""
    residual = np.zeros(4, dtype=np.int64)
    sxy, deg = _peg_k(np.asarray(sym), np.asarray(sym_phase, dtype=np.int64), csi.h, _PILOT_IDX,
                      np.asarray(pol, dtype=np.int64), residual, COS_FULL, SIN_FULL)
    return int(sxy), bool(deg)


def lvpe_correction(sym_phase: np.ndarray, cpe: int, acc_peg: int, sxy: int, indices, length: int) -> int:
    """Add ``sxy / 980`` to ``acc_peg`` and write ``cpe + i * acc_peg``.

    ``sym_phase`` (64 entries, bin order) is updated in place for the first
    ``length`` entries of ``indices``; the new ``acc_peg`` is returned.
    """
    if sym_phase.dtype != np.int64:
        raise TypeError("sym_phase must be an int64 array")
    idx = np.asarray(indices, dtype=np.int64)
    return int(_lvpe_k(sym_phase, np.int64(cpe), np.int64(acc_peg), np.int64(sxy), idx, int(length)))


def correct_and_equalize(sym, sym_phase, csi: Csi, fmt: Format | None = None) -> EqualizedSymbol:
    fmt = csi.format if fmt is None else Format(fmt)
    idx = data_indices(fmt).astype(np.int64)
    out = np.zeros((len(idx), 2), dtype=np.int16)
    flags = np.zeros(len(idx), dtype=np.uint8)
    _zf_k(np.asarray(sym), np.asarray(sym_phase, dtype=np.int64), csi.h, idx, len(idx), out, flags,
          COS_FULL, SIN_FULL)
    return EqualizedSymbol(out, fmt, flags)


# ---------------------------------------------------------------------------
# packet loop
# ---------------------------------------------------------------------------

class Equalizer:
    """Equalizer instance for one packet stream.

    ``restart`` switches to a new CSI/format segment (Legacy -> HT); the
    polarity index and accumulated PEG carry over.
    """

    def __init__(self, csi: Csi, state: PilotTrackState | None = None, track: bool = True):
        self.track = track
        self.state = state or PilotTrackState(format=csi.format)
        self.restart(csi)

    def restart(self, csi: Csi) -> None:
        self.csi = csi
        self.state.format = csi.format
        self.data_idx = data_indices(csi.format).astype(np.int64)

    def run(self, syms) -> EqualizedBlock:
        syms = np.ascontiguousarray(syms, dtype=np.int16)
        if syms.ndim != 3 or syms.shape[1:] != (N_FFT, 2):
            raise ValueError(f"expected (n, 64, 2) frequency symbols, got {syms.shape}")
        n, nd = len(syms), len(self.data_idx)
        out = np.zeros((n, nd, 2), dtype=np.int16)
        cpe = np.zeros(n, dtype=np.int64)
        sxy = np.zeros(n, dtype=np.int64)
        acc = np.zeros(n, dtype=np.int64)
        residual = np.zeros((n, 4), dtype=np.int64)
        flags = np.zeros((n, nd), dtype=np.uint8)
        sym_flags = np.zeros(n, dtype=np.uint8)
        pol_nr, acc_peg = _packet_k(
            syms, self.csi.h, _PILOT_IDX, self.data_idx, _POLARITY, _BASE,
            np.int64(self.state.pol_nr), np.int64(self.state.acc_peg), self.track,
            out, cpe, sxy, acc, residual, flags, sym_flags, COS_FULL, SIN_FULL,
        )
        self.state.pol_nr = int(pol_nr)
        self.state.acc_peg = int(acc_peg)
        self.state.current_polarity = _POLARITY[(self.state.pol_nr - 1) % len(_POLARITY)] * _BASE
        return EqualizedBlock(out, self.csi.format, cpe, sxy, acc, residual, flags, sym_flags)


def equalize_packet(syms, csi: Csi, cfg: PacketConfig, state: PilotTrackState | None = None,
                    track: bool = True) -> EqualizedBlock:
    """Run ``cfg.nof_ofdm_sym`` symbols of one format segment."""
    syms = np.asarray(syms)
    if len(syms) < cfg.nof_ofdm_sym:
        raise ValueError(f"need {cfg.nof_ofdm_sym} symbols, got {len(syms)}")
    return Equalizer(csi, state, track).run(syms[: cfg.nof_ofdm_sym])
