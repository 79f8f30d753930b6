"""Fixed-point complex arithmetic and LUT trigonometry.

Complex fixed-point values are integer numpy arrays whose trailing axis has
length 2 (real, imaginary).  Samples are Q1.15 and stored as ``int16``; wide
accumulators are ``int64``.  Phases are integers in units of 2*pi/4096.

Every rounding step is round-half-away-from-zero and every Q1.15 result is
saturated.  The ``_k`` functions are scalar numba kernels used by the hot
loops in the other modules; the public functions are their vectorized
numpy counterparts.
"""

from __future__ import annotations

import math

import numba
import numpy as np

Q15_ONE = 1 << 15
Q15_MAX = Q15_ONE - 1
Q15_MIN = -Q15_ONE

PHASE_BITS = 12
PHASE_CIRCLE = 1 << PHASE_BITS  # 4096 units per turn
PHASE_WORD_MAX = (1 << 17) - 1  # int18
PHASE_WORD_MIN = -(1 << 17)

TRIG_BITS = 14  # sin/cos amplitude, 1.0 == 16384
QUARTER = PHASE_CIRCLE // 4
ATAN_STEPS = 255  # ratio grid 0..255 -> 256 entries
ATAN_FRAC_BITS = 8  # ratio bits below the table grid, used to interpolate


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


# Quarter-wave ROMs.  The cosine ROM is the sine ROM read backwards, which
# makes the quarter-wave symmetry exact.
SIN_LUT = np.array(
    [_round_half_away(math.sin(2 * math.pi * r / PHASE_CIRCLE) * (1 << TRIG_BITS)) for r in range(QUARTER)],
    dtype=np.int16,
)
COS_LUT = np.empty(QUARTER, dtype=np.int16)
COS_LUT[0] = 1 << TRIG_BITS
COS_LUT[1:] = SIN_LUT[:0:-1]

ATAN_LUT = np.array(
    [_round_half_away(math.atan(k / ATAN_STEPS) * PHASE_CIRCLE / (2 * math.pi)) for k in range(ATAN_STEPS + 1)],
    dtype=np.int16,
)


def _unfold_quarter_tables() -> tuple[np.ndarray, np.ndarray]:
    p = np.arange(PHASE_CIRCLE)
    q, r = p >> 10, p & (QUARTER - 1)
    c, s = COS_LUT[r].astype(np.int64), SIN_LUT[r].astype(np.int64)
    cos_full = np.select([q == 0, q == 1, q == 2], [c, -s, -c], s)
    sin_full = np.select([q == 0, q == 1, q == 2], [s, c, -s], -c)
    return cos_full, sin_full


# Full-circle views addressed directly by the wrapped phase.  Derived from
# the quarter ROMs, never computed independently.
COS_FULL, SIN_FULL = _unfold_quarter_tables()


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True, inline="always")
def round_shift_k(x, n):
    s = np.int64(x) >> 63  # 0 or -1
    m = (((x ^ s) - s) + (np.int64(1) << (n - 1))) >> n
    return (m ^ s) - s


@numba.njit(cache=True, inline="always")
def round_div_k(num, den):
    # den > 0
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((-2 * num + den) // (2 * den))


@numba.njit(cache=True, inline="always")
def round_div_fast_k(num, den, half_inv):
    """``round_div_k`` via a float quotient and an exact integer fix-up.

    ``half_inv`` is ``0.5 / den``.  Valid while ``2 * |num| + den < 2**48``:
    the float quotient is then within 1/32 of the true one, so a single
    step either way makes it exact.
    """
    s = num >> 63
    n2 = 2 * ((num ^ s) - s) + den
    d2 = 2 * den
    q = np.int64(n2 * half_inv)
    r = n2 - q * d2
    q = q - np.int64(r < 0) + np.int64(r >= d2)
    return (q ^ s) - s


@numba.njit(cache=True, inline="always")
def sat16_k(x):
    return min(max(x, Q15_MIN), Q15_MAX)


@numba.njit(cache=True)
def _atan_octant_k(lo, hi):
    # angle of lo/hi in [0, 1]: table entry plus a linear step to the next one
    t = (lo * (ATAN_STEPS << (ATAN_FRAC_BITS + 1)) + hi) // (2 * hi)
    i = t >> ATAN_FRAC_BITS
    f = t & ((1 << ATAN_FRAC_BITS) - 1)
    a = np.int64(ATAN_LUT[i])
    if f == 0:
        return a
    d = np.int64(ATAN_LUT[i + 1]) - a
    return a + ((d * f + (1 << (ATAN_FRAC_BITS - 1))) >> ATAN_FRAC_BITS)


@numba.njit(cache=True)
def atan2_k(re, im):
    """Phase of (re, im) in (-2048, 2048]; second value flags a zero input."""
    if re == 0 and im == 0:
        return 0, True
    ax = re if re >= 0 else -re
    ay = im if im >= 0 else -im
    if ay <= ax:
        ang = _atan_octant_k(ay, ax)
    else:
        ang = QUARTER - _atan_octant_k(ax, ay)
    if re < 0:
        ang = PHASE_CIRCLE // 2 - ang
    if im < 0:
        ang = -ang
    return ang, False


@numba.njit(cache=True)
def rotate_k(re, im, phi, cos_t, sin_t):
    # callers pass COS_FULL / SIN_FULL; numba indexes argument arrays faster than globals
    p = phi & (PHASE_CIRCLE - 1)
    c = cos_t[p]
    s = sin_t[p]
    out_re = sat16_k(round_shift_k(re * c - im * s, TRIG_BITS))
    out_im = sat16_k(round_shift_k(re * s + im * c, TRIG_BITS))
    return out_re, out_im


# ---------------------------------------------------------------------------
# vectorized API
# ---------------------------------------------------------------------------

def round_shift(x, n: int) -> np.ndarray:
    """Arithmetic right shift by ``n`` bits, rounding half away from zero."""
    x = np.asarray(x, dtype=np.int64)
    half = np.int64(1) << (n - 1)
    mag = (np.abs(x) + half) >> n
    return np.where(x < 0, -mag, mag)


def round_div(num, den) -> np.ndarray:
    """Integer ``num / den`` (``den > 0``), rounding half away from zero."""
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    mag = (2 * np.abs(num) + den) // (2 * den)
    return np.where(num < 0, -mag, mag)


def saturate16(x) -> np.ndarray:
    return np.clip(x, Q15_MIN, Q15_MAX).astype(np.int16)


def quantize(re, im=None) -> np.ndarray:
    """Real pair (or a complex array when ``im`` is None) to Q1.15 words."""
    if im is None:
        z = np.asarray(re)
        re, im = z.real, z.imag
    v = np.stack([np.asarray(re, dtype=np.float64), np.asarray(im, dtype=np.float64)], axis=-1) * Q15_ONE
    v = np.copysign(np.floor(np.abs(v) + 0.5), v)
    return np.clip(v, Q15_MIN, Q15_MAX).astype(np.int16)


def to_complex(x) -> np.ndarray:
    x = np.asarray(x)
    return (x[..., 0] + 1j * x[..., 1]) / Q15_ONE


def cmul(a, b) -> np.ndarray:
    """Q1.15 product, rounded and saturated."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    re = a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1]
    im = a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]
    return saturate16(np.stack([round_shift(re, 15), round_shift(im, 15)], axis=-1))


def conj_mul(a, b) -> np.ndarray:
    """conj(a) * b at full precision (30 fractional bits)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    re = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    im = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return np.stack([re, im], axis=-1)


def atan2_lut(acc) -> tuple[np.ndarray, np.ndarray]:
    """Quantized angle of a wide accumulator.

    Returns ``(phase, undefined)``; ``undefined`` marks all-zero inputs, whose
    phase is reported as 0.
    """
    acc = np.asarray(acc, dtype=np.int64)
    re, im = acc[..., 0], acc[..., 1]
    ax, ay = np.abs(re), np.abs(im)
    zero = (ax == 0) & (ay == 0)
    lo = np.minimum(ax, ay)
    hi = np.where(zero, 1, np.maximum(ax, ay))
    t = (lo * (ATAN_STEPS << (ATAN_FRAC_BITS + 1)) + hi) // (2 * hi)
    i = t >> ATAN_FRAC_BITS
    f = t & ((1 << ATAN_FRAC_BITS) - 1)
    base = ATAN_LUT[i].astype(np.int64)
    step = ATAN_LUT[np.minimum(i + 1, ATAN_STEPS)].astype(np.int64) - base
    ang = base + ((step * f + (1 << (ATAN_FRAC_BITS - 1))) >> ATAN_FRAC_BITS)
    ang = np.where(ay > ax, QUARTER - ang, ang)
    ang = np.where(re < 0, PHASE_CIRCLE // 2 - ang, ang)
    ang = np.where(im < 0, -ang, ang)
    return np.where(zero, 0, ang), zero


def rotate(s, phi) -> np.ndarray:
    """Multiply Q1.15 samples by exp(j*phi), phi in 2*pi/4096 units."""
    s = np.asarray(s, dtype=np.int64)
    p = np.asarray(phi, dtype=np.int64) & (PHASE_CIRCLE - 1)
    c, sn = COS_FULL[p], SIN_FULL[p]
    re = s[..., 0] * c - s[..., 1] * sn
    im = s[..., 0] * sn + s[..., 1] * c
    return saturate16(np.stack([round_shift(re, TRIG_BITS), round_shift(im, TRIG_BITS)], axis=-1))


def wrap_phase(phi) -> np.ndarray:
    """Map phase words onto (-2048, 2048]."""
    p = np.asarray(phi, dtype=np.int64) & (PHASE_CIRCLE - 1)
    return np.where(p > PHASE_CIRCLE // 2, p - PHASE_CIRCLE, p)
