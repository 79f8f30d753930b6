import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dot11rx import numerics as nm
from dot11rx.numerics import (
    ATAN_LUT,
    COS_FULL,
    COS_LUT,
    SIN_FULL,
    SIN_LUT,
    atan2_lut,
    cmul,
    conj_mul,
    quantize,
    rotate,
    round_div,
    round_shift,
    wrap_phase,
)

q15 = st.integers(min_value=-32768, max_value=32767)
pair = st.tuples(q15, q15)


def as_pair(re, im):
    return np.array([re, im], dtype=np.int16)


def ref_round_shift(x: int, n: int) -> int:
    # python big-int reference, half away from zero
    mag = (abs(x) + (1 << (n - 1))) >> n
    return -mag if x < 0 else mag


def ref_cmul(a, b):
    re = a[0] * b[0] - a[1] * b[1]
    im = a[0] * b[1] + a[1] * b[0]
    sat = lambda v: max(-32768, min(32767, v))  # noqa: E731
    return sat(ref_round_shift(re, 15)), sat(ref_round_shift(im, 15))


# -- quantize ---------------------------------------------------------------

def test_quantize_raw_words():
    q = quantize(0.5, -0.5)
    assert q.tolist() == [0x4000, -0x4000]
    assert q.view(np.uint16).tolist() == [0x4000, 0xC000]


def test_quantize_clamps_one():
    assert quantize(1.0, 0.0).tolist() == [0x7FFF, 0]


def test_quantize_half_lsb_rounds_away():
    assert quantize(2.0**-16, 0.0).tolist() == [1, 0]
    assert quantize(-(2.0**-16), 0.0).tolist() == [-1, 0]


def test_quantize_complex_array():
    z = np.array([0.25 + 0.5j, -1.5 - 0.25j])
    assert quantize(z).tolist() == [[8192, 16384], [-32768, -8192]]


# -- cmul / conj_mul ----------------------------------------------------------

def test_cmul_real_quarter():
    assert cmul(as_pair(16384, 0), as_pair(16384, 0)).tolist() == [8192, 0]


def test_cmul_j_squared():
    assert cmul(as_pair(0, 16384), as_pair(0, 16384)).tolist() == [-8192, 0]


def test_cmul_matches_wide_integer_reference():
    rng = np.random.default_rng(1)
    a = rng.integers(-32768, 32768, size=(1_000_000, 2)).astype(np.int16)
    b = rng.integers(-32768, 32768, size=(1_000_000, 2)).astype(np.int16)
    got = cmul(a, b)
    # object dtype: unbounded python ints, no int64 shortcuts
    ao, bo = a.astype(object), b.astype(object)
    want = []
    for wide in (ao[:, 0] * bo[:, 0] - ao[:, 1] * bo[:, 1], ao[:, 0] * bo[:, 1] + ao[:, 1] * bo[:, 0]):
        mag = (np.abs(wide) + (1 << 14)) >> 15
        want.append(np.clip(np.where(wide < 0, -mag, mag), -32768, 32767).astype(np.int64))
    assert np.array_equal(got[:, 0], want[0])
    assert np.array_equal(got[:, 1], want[1])
    assert np.array_equal(got, cmul(b, a))


@given(pair, pair)
def test_cmul_commutative_and_exact(a, b):
    got = cmul(np.array(a, np.int16), np.array(b, np.int16))
    assert tuple(got) == ref_cmul(a, b)
    assert np.array_equal(got, cmul(np.array(b, np.int16), np.array(a, np.int16)))


def test_conj_mul_examples():
    half = 16384
    assert conj_mul(as_pair(half, 0), as_pair(half, 0)).tolist() == [2**28, 0]  # 0.25 at 30 frac bits
    assert conj_mul(as_pair(0, half), as_pair(half, 0)).tolist() == [0, -(2**28)]


@given(pair, pair)
def test_conj_mul_matches_float(a, b):
    got = conj_mul(np.array(a, np.int16), np.array(b, np.int16))
    za = complex(*a) / 2**15
    zb = complex(*b) / 2**15
    want = za.conjugate() * zb
    assert abs(got[0] / 2**30 - want.real) <= 2**-30
    assert abs(got[1] / 2**30 - want.imag) <= 2**-30


# -- atan2 ------------------------------------------------------------------

def test_atan2_axes():
    assert atan2_lut(np.array([1, 0]))[0] == 0
    assert atan2_lut(np.array([0, 1]))[0] == 1024


def test_atan2_diagonal():
    ph, und = atan2_lut(np.array([1, 1]))
    assert abs(int(ph) - 512) <= 2
    assert not und


def test_atan2_zero_is_flagged():
    ph, und = atan2_lut(np.array([0, 0]))
    assert ph == 0 and und


def test_atan2_lut_entries():
    # independent float oracle for each table entry
    want = [int(math.floor(math.atan(k / 255) * 4096 / (2 * math.pi) + 0.5)) for k in range(256)]
    assert ATAN_LUT.tolist() == want
    assert ATAN_LUT[-1] == 512


def test_atan2_recovers_every_phase():
    phi = np.arange(4096)
    s = rotate(np.broadcast_to(as_pair(16384, 0), (4096, 2)), phi)
    got, _ = atan2_lut(s.astype(np.int64))
    err = wrap_phase(got - phi)
    assert np.abs(err).max() <= 3


def test_atan2_accuracy_vs_float():
    rng = np.random.default_rng(4)
    acc = rng.integers(-(2**37), 2**37, size=(100_000, 2))
    got, _ = atan2_lut(acc)
    want = np.arctan2(acc[:, 1], acc[:, 0]) * 4096 / (2 * np.pi)
    assert np.abs(wrap_phase(got - np.round(want).astype(np.int64))).max() <= 2
    # interpolating between entries keeps the error under one unit
    err = (got - want + 2048) % 4096 - 2048
    assert np.abs(err).max() < 1


@given(st.integers(-(2**40), 2**40), st.integers(-(2**40), 2**40))
def test_atan2_conjugate_symmetry(re, im):
    a, _ = atan2_lut(np.array([re, im]))
    b, _ = atan2_lut(np.array([re, -im]))
    if im == 0 and re < 0:
        # (-2048, 2048] range: the negative real axis maps to +2048 both ways
        assert (int(a) + int(b)) % 4096 == 0
    else:
        assert int(a) == -int(b)


def test_atan2_kernel_matches_vectorized():
    rng = np.random.default_rng(7)
    acc = rng.integers(-(2**33), 2**33, size=(2000, 2))
    acc[:10] = 0
    acc[10:20, 1] = 0
    vec, zero = atan2_lut(acc)
    for (re, im), v, z in zip(acc, vec, zero):
        k, kz = nm.atan2_k(np.int64(re), np.int64(im))
        assert (k, kz) == (v, z)


# -- trig ROMs and rotate -----------------------------------------------------

def test_sin_rom_values():
    want = [int(math.floor(math.sin(2 * math.pi * r / 4096) * 16384 + 0.5)) for r in range(1024)]
    assert SIN_LUT.tolist() == want


def test_quarter_wave_symmetry_exact():
    r = np.arange(1, 1024)
    assert np.array_equal(COS_LUT[r], SIN_LUT[1024 - r])
    p = np.arange(4096)
    assert np.array_equal(SIN_FULL[(p + 2048) % 4096], -SIN_FULL[p])
    assert np.array_equal(SIN_FULL[(2048 - p) % 4096], SIN_FULL[p])
    assert np.array_equal(COS_FULL[p], SIN_FULL[(p + 1024) % 4096])
    assert np.array_equal(COS_FULL[(4096 - p) % 4096], COS_FULL[p])


def test_rotate_identity():
    assert rotate(as_pair(16384, 0), 0).tolist() == [16384, 0]


def test_rotate_quarter_turn():
    out = rotate(as_pair(16384, 0), 1024)
    assert abs(int(out[0])) <= 1 and abs(int(out[1]) - 16384) <= 1


def test_rotate_matches_float():
    rng = np.random.default_rng(2)
    s = rng.integers(-32768, 32768, size=(100_000, 2)).astype(np.int16)
    phi = rng.integers(-(2**17), 2**17, size=100_000)
    got = nm.to_complex(rotate(s, phi))
    want = nm.to_complex(s) * np.exp(2j * np.pi * phi / 4096)
    want = np.clip(want.real, -1, 1 - 2**-15) + 1j * np.clip(want.imag, -1, 1 - 2**-15)
    assert np.abs(got.real - want.real).max() <= 2 * 2**-14
    assert np.abs(got.imag - want.imag).max() <= 2 * 2**-14


def _disk(rng, n, radius):
    return quantize(np.sqrt(rng.random(n)) * radius * np.exp(2j * np.pi * rng.random(n)))


def test_rotate_round_trip():
    rng = np.random.default_rng(3)
    s = _disk(rng, 100_000, 0.7)
    phi = rng.integers(0, 4096, size=100_000)
    back = rotate(rotate(s, phi), -phi)
    assert np.abs(back.astype(np.int64) - s).max() <= 2


def test_rotate_round_trip_near_full_scale():
    # 14-bit ROM gain error reaches ~2 LSB at unit magnitude, plus two roundings
    rng = np.random.default_rng(8)
    s = _disk(rng, 100_000, 0.9999)
    phi = rng.integers(0, 4096, size=100_000)
    back = rotate(rotate(s, phi), -phi)
    assert np.abs(back.astype(np.int64) - s).max() <= 3


@given(st.floats(0, 0.7), st.floats(0, 2 * math.pi), st.integers(-(2**17), 2**17 - 1))
def test_rotate_round_trip_property(r, theta, phi):
    s = quantize(r * np.exp(1j * theta))
    back = rotate(rotate(s, phi), -phi)
    assert np.abs(back.astype(np.int64) - s).max() <= 2


def test_rotate_kernel_matches_vectorized():
    rng = np.random.default_rng(5)
    s = rng.integers(-32768, 32768, size=(500, 2)).astype(np.int16)
    phi = rng.integers(-5000, 5000, size=500)
    vec = rotate(s, phi)
    for (re, im), p, v in zip(s, phi, vec):
        assert nm.rotate_k(np.int64(re), np.int64(im), np.int64(p), COS_FULL, SIN_FULL) == tuple(v)


# -- rounding helpers -------------------------------------------------------

@given(st.integers(-(2**50), 2**50), st.integers(1, 30))
def test_round_shift_half_away(x, n):
    assert int(round_shift(x, n)) == ref_round_shift(x, n)
    assert nm.round_shift_k(np.int64(x), n) == ref_round_shift(x, n)


@given(st.integers(-(2**46), 2**46), st.integers(1, 2**31))
@settings(max_examples=300)
def test_round_div_variants_agree(num, den):
    # exact rational reference: floor(|n|/d + 1/2) with sign
    mag = (2 * abs(num) + den) // (2 * den)
    want = -mag if num < 0 else mag
    assert int(round_div(num, den)) == want
    assert nm.round_div_k(np.int64(num), np.int64(den)) == want
    assert nm.round_div_fast_k(np.int64(num), np.int64(den), 0.5 / den) == want


def test_round_div_exact_halves():
    assert round_div(np.array([3, -3, 5, -5]), 2).tolist() == [2, -2, 3, -3]


def test_wrap_phase_range():
    p = wrap_phase(np.arange(-10000, 10000))
    assert p.min() == -2047 and p.max() == 2048


@pytest.mark.parametrize("x", [-40000, 40000])
def test_saturate16(x):
    assert nm.saturate16(x) == (32767 if x > 0 else -32768)
