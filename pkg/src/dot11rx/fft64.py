"""64-point fixed-point FFT and the subcarrier index maps.

Frequency-domain symbols are stored in FFT bin order, so subcarrier ``k``
lives in bin ``k % 64`` (negative subcarriers wrap to the upper half).  With
numpy that means ``sym[k]`` works directly for ``k`` in -31..32 apart from
``k == 32``; use :func:`bin_of` when in doubt.
"""

from __future__ import annotations

from enum import Enum

import numba
import numpy as np

from .numerics import round_shift_k, sat16_k

N_FFT = 64
N_STAGES = 6
TWIDDLE_BITS = 14  # 1.0 == 16384 so that W^0 and W^16 are exact


class Format(str, Enum):
    LEGACY = "legacy"
    HT = "ht"


PILOT_INDICES = np.array([-21, -7, 7, 21], dtype=np.int64)

_ACTIVE = {
    Format.LEGACY: np.array([k for k in range(-26, 27) if k != 0], dtype=np.int64),
    Format.HT: np.array([k for k in range(-28, 29) if k != 0], dtype=np.int64),
}
_DATA = {f: idx[~np.isin(idx, PILOT_INDICES)] for f, idx in _ACTIVE.items()}
for _a in (*_ACTIVE.values(), *_DATA.values(), PILOT_INDICES):
    _a.setflags(write=False)


def active_indices(fmt: Format) -> np.ndarray:
    """Ascending active subcarrier indices: 52 for Legacy, 56 for HT."""
    return _ACTIVE[Format(fmt)]


def data_indices(fmt: Format) -> np.ndarray:
    return _DATA[Format(fmt)]


def pilot_mask(fmt: Format) -> np.ndarray:
    """Boolean flag per entry of :func:`active_indices` marking pilots."""
    return np.isin(active_indices(fmt), PILOT_INDICES)


def bin_of(k) -> np.ndarray:
    return np.asarray(k, dtype=np.int64) % N_FFT


def _bit_reverse_order(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    return np.array([int(f"{i:0{bits}b}"[::-1], 2) for i in range(n)], dtype=np.int64)


_BITREV = _bit_reverse_order(N_FFT)


def _twiddles() -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(N_FFT // 2)
    w = np.exp(-2j * np.pi * m / N_FFT) * (1 << TWIDDLE_BITS)
    q = lambda v: (np.sign(v) * np.floor(np.abs(v) + 0.5)).astype(np.int64)  # noqa: E731
    return q(w.real), q(w.imag)


TWIDDLE_RE, TWIDDLE_IM = _twiddles()


def _butterfly_schedule():
    a, b, wr, wi = [], [], [], []
    half = 1
    while half < N_FFT:
        step = N_FFT // (2 * half)
        for base in range(0, N_FFT, 2 * half):
            for j in range(half):
                a.append(base + j)
                b.append(base + j + half)
                wr.append(TWIDDLE_RE[j * step])
                wi.append(TWIDDLE_IM[j * step])
        half *= 2
    return (np.array(a, dtype=np.int64), np.array(b, dtype=np.int64),
            np.array(wr, dtype=np.int64), np.array(wi, dtype=np.int64))


# stage by stage: (top, bottom, twiddle) for each of the 6 * 32 butterflies
_BF_A, _BF_B, _BF_WR, _BF_WI = _butterfly_schedule()


@numba.njit(cache=True)
def _fft_k(x, starts, out):
    re = np.empty(N_FFT, dtype=np.int64)
    im = np.empty(N_FFT, dtype=np.int64)
    shift = TWIDDLE_BITS + 1
    for s in range(starts.shape[0]):
        t0 = starts[s]
        for i in range(N_FFT):
            re[i] = x[t0 + _BITREV[i], 0]
            im[i] = x[t0 + _BITREV[i], 1]
        for t in range(_BF_A.shape[0]):
            a = _BF_A[t]
            b = _BF_B[t]
            wr = _BF_WR[t]
            wi = _BF_WI[t]
            tr = re[b] * wr - im[b] * wi
            ti = re[b] * wi + im[b] * wr
            ar = re[a] << TWIDDLE_BITS
            ai = im[a] << TWIDDLE_BITS
            re[a] = sat16_k(round_shift_k(ar + tr, shift))
            im[a] = sat16_k(round_shift_k(ai + ti, shift))
            re[b] = sat16_k(round_shift_k(ar - tr, shift))
            im[b] = sat16_k(round_shift_k(ai - ti, shift))
        for i in range(N_FFT):
            out[s, i, 0] = re[i]
            out[s, i, 1] = im[i]


def fft64(time) -> np.ndarray:
    """Radix-2 DIT FFT with a 1/2 scale and rounding after each stage.

    ``time`` has shape ``(..., 64, 2)`` (Q1.15); the result has the same
    shape, in FFT bin order, and equals the DFT divided by 64.
    """
    x = np.asarray(time)
    if x.shape[-2:] != (N_FFT, 2):
        raise ValueError(f"fft64 expects (..., 64, 2) samples, got {x.shape}")
    flat = np.ascontiguousarray(x.reshape(-1, 2), dtype=np.int16)
    n = len(flat) // N_FFT
    out = np.empty((n, N_FFT, 2), dtype=np.int16)
    _fft_k(flat, np.arange(n, dtype=np.int64) * N_FFT, out)
    return out.reshape(x.shape)


def fft64_at(stream, starts) -> np.ndarray:
    """FFT of the 64-sample windows of ``stream`` beginning at ``starts``."""
    x = np.ascontiguousarray(stream, dtype=np.int16)
    starts = np.asarray(starts, dtype=np.int64)
    if len(starts) and (starts.min() < 0 or starts.max() + N_FFT > len(x)):
        raise ValueError("FFT window outside the stream")
    out = np.empty((len(starts), N_FFT, 2), dtype=np.int16)
    _fft_k(x, starts, out)
    return out


def subcarrier_order(sym) -> np.ndarray:
    """Reorder a bin-ordered symbol to subcarriers -31..32."""
    return np.asarray(sym)[..., bin_of(np.arange(-31, 33)), :]
