"""Channel estimation from the L-LTF / HT-LTF, with optional smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fft64 import N_FFT, Format, active_indices, bin_of
from .numerics import round_div, round_shift, saturate16
from .txref import ltf_sign

SMOOTH_WINDOW = 3


@dataclass(frozen=True)
class Csi:
    """Per-subcarrier channel estimate in FFT bin order.

    ``h`` is (64, 2) Q1.15 and zero outside ``active_mask``.
    """

    h: np.ndarray
    active_mask: np.ndarray
    format: Format
    smoothed: bool = False

    def at(self, k) -> np.ndarray:
        return self.h[bin_of(k)]


def _mask(fmt: Format) -> np.ndarray:
    m = np.zeros(N_FFT, dtype=bool)
    m[bin_of(active_indices(fmt))] = True
    return m


def _apply_sign(sym: np.ndarray, fmt: Format) -> Csi:
    sign = ltf_sign(fmt)
    h = (sym.astype(np.int64) * sign[:, None])
    return Csi(saturate16(h), _mask(fmt), fmt)


def estimate_legacy(sym1, sym2) -> Csi:
    """H = ((L_R1 + L_R2) / 2) * L_T on the 52 Legacy subcarriers."""
    avg = round_shift(np.asarray(sym1, dtype=np.int64) + np.asarray(sym2, dtype=np.int64), 1)
    return _apply_sign(avg, Format.LEGACY)


def estimate_ht(sym) -> Csi:
    """H = L_R * HT_T on the 56 HT subcarriers."""
    return _apply_sign(np.asarray(sym, dtype=np.int64), Format.HT)


def smooth(csi: Csi) -> Csi:
    """3-tap moving average across the active subcarriers.

    Neighbors are taken in ascending subcarrier order with -1 and +1 treated
    as adjacent; the two band edges average over the two available values.
    """
    bins = bin_of(active_indices(csi.format))
    h = csi.h[bins].astype(np.int64)
    total = h.copy()
    total[1:] += h[:-1]
    total[:-1] += h[1:]
    count = np.full(len(bins), SMOOTH_WINDOW)
    count[[0, -1]] = SMOOTH_WINDOW - 1
    out = np.zeros_like(csi.h)
    out[bins] = saturate16(round_div(total, count[:, None]))
    return Csi(out, csi.active_mask.copy(), csi.format, smoothed=True)
