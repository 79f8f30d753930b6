import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dot11rx.equalizer import PilotTrackState, get_polarity
from dot11rx.fft64 import Format, active_indices, bin_of, data_indices, fft64
from dot11rx.numerics import quantize, to_complex
from dot11rx.txref import (
    CONSTELLATION_ENERGY,
    FREQ_GAIN,
    LLTF_SEQ,
    MCS_MODULATION,
    POLARITY_SEQ,
    GuardInterval,
    Modulation,
    PacketConfig,
    build_data_symbol,
    build_ltf,
    build_packet,
    build_stf,
    data_symbol_freq,
    hard_decision,
    lltf_freq,
    lstf_freq,
    ltf_sign,
    packet_length,
    pilot_polarity,
    random_payload,
)

SCALE = 64 * FREQ_GAIN  # frequency table -> time samples


def scrambler_polarity():
    # x^7 + x^4 + 1 scrambler, all-ones seed; bit 0 -> +1, bit 1 -> -1
    state = [1] * 7
    out = []
    for _ in range(127):
        bit = state[3] ^ state[6]
        out.append(1 - 2 * bit)
        state = [bit] + state[:6]
    return np.array(out)


# -- reference tables -------------------------------------------------------

def test_polarity_sequence_matches_scrambler():
    assert np.array_equal(POLARITY_SEQ, scrambler_polarity())


def test_ltf_sequence_known_time_sample():
    # standard's tabulated first L-LTF sample is 0.156 = sum(L_T) / 64
    assert LLTF_SEQ.sum() == 10
    assert np.fft.ifft(lltf_freq())[0] == pytest.approx(0.15625)


def test_stf_known_time_sample():
    # standard's tabulated first L-STF sample is 0.046 + 0.046j
    assert np.fft.ifft(lstf_freq())[0] == pytest.approx(0.046 + 0.046j, abs=5e-4)


def test_ltf_signs_are_unit():
    for fmt in Format:
        s = ltf_sign(fmt)
        act = bin_of(active_indices(fmt))
        assert set(np.abs(s[act]).tolist()) == {1}
        assert np.count_nonzero(s) == len(act)


# -- STF / LTF ----------------------------------------------------------------

def test_stf_length_and_periodicity():
    s = build_stf()
    assert len(s) == 160
    assert np.array_equal(s[:144], s[16:160])


def test_stf_matches_float_ifft():
    want = quantize(np.tile(np.fft.ifft(lstf_freq()) * SCALE, 3)[:160])
    assert np.abs(build_stf().astype(int) - want).max() <= 1


def test_ltf_lengths():
    assert len(build_ltf(Format.LEGACY)) == 160
    assert len(build_ltf(Format.HT)) == 80


def test_legacy_ltf_symbols_identical():
    ltf = build_ltf(Format.LEGACY)
    assert np.array_equal(ltf[32:96], ltf[96:160])
    assert np.array_equal(ltf[:32], ltf[64:96])  # cyclic prefix


@pytest.mark.parametrize("fmt", list(Format))
def test_ltf_spectrum_is_sign_pattern(fmt):
    ltf = build_ltf(fmt)
    sym = ltf[-64:]
    freq = np.fft.fft(to_complex(sym)) / SCALE
    act = bin_of(active_indices(fmt))
    assert np.allclose(freq[act], ltf_sign(fmt)[act], atol=2e-3)
    inactive = np.setdiff1d(np.arange(64), act)
    assert np.abs(freq[inactive]).max() < 2e-3


# -- data symbols ---------------------------------------------------------------

def test_data_symbol_lengths():
    leg = PacketConfig(Format.LEGACY, GuardInterval.LONG)
    ht = PacketConfig(Format.HT, GuardInterval.SHORT)
    assert len(build_data_symbol(np.zeros(48), 0, leg)) == 80
    assert len(build_data_symbol(np.zeros(52), 0, ht)) == 72


@pytest.mark.parametrize("sym_index", [0, 3, 126, 200])
def test_pilot_only_symbol_matches_float_ifft(sym_index):
    cfg = PacketConfig(Format.HT, GuardInterval.LONG)
    got = build_data_symbol(np.zeros(52), sym_index, cfg)
    freq = np.zeros(64, complex)
    freq[bin_of([-21, -7, 7, 21])] = POLARITY_SEQ[sym_index % 127] * np.array([1, 1, 1, -1])
    t = np.fft.ifft(freq) * SCALE
    want = quantize(np.concatenate([t[-16:], t]))
    assert np.abs(got.astype(int) - want).max() <= 1


def test_data_symbol_rejects_wrong_count():
    with pytest.raises(ValueError):
        data_symbol_freq(np.zeros(52), 0, Format.LEGACY)


# -- packets ----------------------------------------------------------------------

def test_legacy_packet_length():
    cfg = PacketConfig(Format.LEGACY, nof_ofdm_sym=2)
    assert len(build_packet(cfg, seed=1)) == 160 + 160 + 80 + 2 * 80 == 560


def test_ht_packet_length():
    cfg = PacketConfig(Format.HT, GuardInterval.SHORT, nof_ofdm_sym=3)
    assert len(build_packet(cfg, seed=1)) == packet_length(cfg) == 160 + 160 + 3 * 80 + 80 + 3 * 72


def test_packet_deterministic():
    cfg = PacketConfig(Format.HT, GuardInterval.LONG, mcs=5, nof_ofdm_sym=4)
    assert np.array_equal(build_packet(cfg, seed=9), build_packet(cfg, seed=9))
    assert not np.array_equal(build_packet(cfg, seed=9), build_packet(cfg, seed=10))


@pytest.mark.parametrize("fmt,gi", [(Format.LEGACY, GuardInterval.LONG), (Format.HT, GuardInterval.SHORT)])
def test_data_symbols_zero_outside_active_set(fmt, gi):
    cfg = PacketConfig(fmt, gi, mcs=7, nof_ofdm_sym=6)
    pkt = build_packet(cfg, seed=3)
    start = packet_length(cfg) - cfg.nof_ofdm_sym * cfg.symbol_len
    starts = start + np.arange(cfg.nof_ofdm_sym) * cfg.symbol_len + gi.length
    freq = fft64(pkt[starts[:, None] + np.arange(64)])
    inactive = np.setdiff1d(np.arange(64), bin_of(active_indices(fmt)))
    assert np.abs(freq[:, inactive].astype(int)).max() <= 1


@given(st.sampled_from(list(Format)), st.integers(0, 7), st.integers(1, 12), st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_packet_peak_headroom(fmt, mcs, nsym, seed):
    gi = GuardInterval.LONG
    pkt = build_packet(PacketConfig(fmt, gi, mcs, nsym), seed=seed)
    assert np.abs(pkt.astype(int)).max() <= 0.5 * 32768


def test_polarity_shared_with_equalizer():
    state = PilotTrackState()
    for n in range(3 * 127):
        assert np.array_equal(get_polarity(state), pilot_polarity(n))


# -- configuration and constellations ---------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        PacketConfig(Format.LEGACY, GuardInterval.SHORT)
    with pytest.raises(ValueError):
        PacketConfig(mcs=8)
    for n in (0, 4096):
        with pytest.raises(ValueError):
            PacketConfig(nof_ofdm_sym=n)
    assert PacketConfig(nof_ofdm_sym=4095).nof_ofdm_sym == 4095


def test_mcs_modulation_map():
    assert [MCS_MODULATION[m].order for m in range(8)] == [2, 4, 4, 16, 16, 64, 64, 64]


@pytest.mark.parametrize("mod", list(Modulation))
def test_constellation_energy_and_decision(mod):
    pts = mod.points
    assert len(pts) == mod.order
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(CONSTELLATION_ENERGY)
    assert np.array_equal(hard_decision(pts, mod), np.arange(mod.order))


def test_random_payload_shape():
    cfg = PacketConfig(Format.HT, mcs=3, nof_ofdm_sym=5)
    idx, pts = random_payload(cfg, 0)
    assert idx.shape == pts.shape == (5, len(data_indices(Format.HT)))
    assert np.array_equal(MCS_MODULATION[3].points[idx], pts)
