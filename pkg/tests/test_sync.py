import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dot11rx.channel import apply_awgn, apply_cfo
from dot11rx.fft64 import Format
from dot11rx.numerics import quantize
from dot11rx.sync import (
    DETECT_SPAN,
    CfoCorrector,
    SyncError,
    align_ltf,
    autocorr_metric,
    correct_cfo,
    detect_packet,
    estimate_cfo_coarse,
    estimate_cfo_fine,
    extract_symbol,
)
from dot11rx.txref import GuardInterval, PacketConfig, build_packet, build_stf


@pytest.fixture(scope="module")
def packet():
    return build_packet(PacketConfig(Format.LEGACY, mcs=2, nof_ofdm_sym=4), seed=1)


def pad(x, lead=200, tail=100):
    return np.concatenate([np.zeros((lead, 2), np.int16), x, np.zeros((tail, 2), np.int16)])


def noise(n, seed, power=1.0):
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(power / 2)
    return quantize(z)


def lsb_diff(a, b) -> int:
    return int(np.abs(a.astype(np.int64) - b.astype(np.int64)).max())


# -- autocorrelation metric --------------------------------------------------------

def test_metric_periodic_window_is_one():
    assert autocorr_metric(build_stf()[:DETECT_SPAN]) == pytest.approx(1.0, abs=1e-3)


def test_metric_zero_window():
    assert autocorr_metric(np.zeros((DETECT_SPAN, 2), np.int16)) == 0.0


def test_metric_white_noise_mean():
    x = noise(DETECT_SPAN * 1000, 5, power=0.25).reshape(1000, DETECT_SPAN, 2)
    assert np.mean([autocorr_metric(w) for w in x]) < 0.3


def test_metric_rejects_wrong_shape():
    with pytest.raises(ValueError):
        autocorr_metric(np.zeros((40, 2), np.int16))


# -- detection ---------------------------------------------------------------------

def test_detect_clean_packet(packet):
    res = detect_packet(pad(packet, lead=300))
    assert res.detected
    assert abs(res.start_index - 300) <= 8


def test_detect_zero_stream():
    assert not detect_packet(np.zeros((1000, 2), np.int16)).detected


def test_detect_noise_false_rate():
    hits = sum(detect_packet(noise(10_000, s)).detected for s in range(100))
    assert hits / 100 < 1e-2


def test_detect_requires_min_length():
    with pytest.raises(SyncError):
        detect_packet(np.zeros((100, 2), np.int16))


@given(st.integers(0, 400))
@settings(max_examples=20, deadline=None)
def test_detect_shift_equivariant(k):
    x = apply_awgn(pad(build_packet(PacketConfig(nof_ofdm_sym=1), seed=2), lead=50), 20, 7)
    base = detect_packet(x).start_index
    shifted = detect_packet(np.concatenate([np.zeros((k, 2), np.int16), x])).start_index
    assert shifted == base + k


def test_detect_deterministic(packet):
    x = apply_awgn(pad(packet), 10, 3)
    assert detect_packet(x) == detect_packet(x)


# -- CFO estimation ----------------------------------------------------------------

def test_coarse_zero_offset(packet):
    assert abs(estimate_cfo_coarse(packet[:160]).freq_hz) < 2e3


def test_coarse_100k(packet):
    est = estimate_cfo_coarse(apply_cfo(packet, 100e3)[:160])
    assert est.freq_hz == pytest.approx(100e3, abs=3e3)


def test_coarse_aliases_beyond_625k(packet):
    est = estimate_cfo_coarse(apply_cfo(packet, 640e3)[:160])
    assert est.freq_hz == pytest.approx(-610e3, abs=5e3)


def test_coarse_zero_energy_flagged():
    assert estimate_cfo_coarse(np.zeros((160, 2), np.int16)).undefined


def test_fine_zero_residual(packet):
    assert abs(estimate_cfo_fine(packet[160:320]).freq_hz) < 500


def test_fine_20k(packet):
    est = estimate_cfo_fine(apply_cfo(packet, 20e3)[160:320])
    assert est.freq_hz == pytest.approx(20e3, abs=1e3)


def test_fine_aliases_out_of_range(packet):
    # range is +-156.25 kHz; 200 kHz folds to -112.5 kHz
    est = estimate_cfo_fine(apply_cfo(packet, 200e3)[160:320])
    assert est.freq_hz == pytest.approx(-112.5e3, abs=2e3)


def test_fine_zero_energy_flagged():
    assert estimate_cfo_fine(np.zeros((160, 2), np.int16)).undefined


@pytest.mark.parametrize("cfo", [-200e3, -123.4e3, -7e3, 0.0, 45e3, 150e3, 200e3])
def test_coarse_plus_fine_residual(packet, cfo):
    x = apply_cfo(packet, cfo)
    coarse = estimate_cfo_coarse(x[:160]).freq_hz
    y, _ = correct_cfo(x, coarse)
    fine = estimate_cfo_fine(y[160:320]).freq_hz
    assert abs(cfo - coarse - fine) < 1.5e3


def test_estimators_deterministic(packet):
    x = apply_awgn(packet, 5, 9)
    assert estimate_cfo_coarse(x[:160]) == estimate_cfo_coarse(x[:160])
    assert estimate_cfo_fine(x[160:320]) == estimate_cfo_fine(x[160:320])


# -- CFO correction ----------------------------------------------------------------

def test_correct_zero_identity(packet):
    out, _ = correct_cfo(packet, 0.0)
    assert lsb_diff(out, packet) <= 1


@pytest.mark.parametrize("f", [-300e3, 12.5e3, 100e3, 555e3])
def test_correct_inverts_apply_on_packet(f):
    pkt = build_packet(PacketConfig(Format.HT, mcs=7, nof_ofdm_sym=12), seed=5)
    out, _ = correct_cfo(apply_cfo(pkt, f), f)
    assert lsb_diff(out, pkt) <= 3


@pytest.mark.parametrize("radius", [0.1, 0.3, 0.9])
def test_correct_inverts_apply_phase_word_bound(radius):
    # 12-bit phase word: up to half a unit (pi/4096 rad) of angle error
    rng = np.random.default_rng(4)
    x = quantize(np.sqrt(rng.random(1000)) * radius * np.exp(2j * np.pi * rng.random(1000)))
    out, _ = correct_cfo(apply_cfo(x, 100e3), 100e3)
    mag = np.abs(x.astype(np.float64) @ np.array([1, 1j]))
    err = np.abs(out.astype(np.int64) - x).max(axis=1)
    assert np.all(err <= mag * np.pi / 4096 + 1.5)


def test_correct_accumulator_continuity():
    x = noise(1000, 6, power=0.1)
    whole, _ = correct_cfo(x, 77e3)
    corr = CfoCorrector(77e3)
    parts = np.concatenate([corr(x[:333]), corr(x[333:700]), corr(x[700:])])
    assert np.array_equal(parts, whole)


# -- timing and symbol windows -------------------------------------------------------

def test_align_ltf_finds_first_period(packet):
    x = pad(packet, lead=37)
    assert align_ltf(x, 37 + 192 + 5) == 37 + 192


def test_extract_symbol_windows():
    x = np.arange(400, dtype=np.int16).repeat(2).reshape(-1, 2)
    assert np.array_equal(extract_symbol(x, 10, GuardInterval.LONG)[:, 0], np.arange(26, 90))
    assert np.array_equal(extract_symbol(x, 10, GuardInterval.SHORT)[:, 0], np.arange(18, 82))
    assert np.array_equal(extract_symbol(x, 10 + 80, GuardInterval.LONG)[:, 0], np.arange(106, 170))
    assert np.array_equal(extract_symbol(x, 10 + 72, GuardInterval.SHORT)[:, 0], np.arange(90, 154))


def test_extract_symbol_short_stream():
    with pytest.raises(SyncError):
        extract_symbol(np.zeros((100, 2), np.int16), 30, GuardInterval.LONG)
