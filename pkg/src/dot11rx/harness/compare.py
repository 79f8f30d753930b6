"""Differential runner: fixed-point chain against the golden model."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelProfile, apply_profile
from ..fft64 import N_FFT, Format, data_indices
from ..golden import GoldenReceiver
from ..receiver import STAGES, receive
from ..txref import GuardInterval, PacketConfig, build_packet

SYMBOL_STAGES = ("cpe", "peg", "lvpe", "equalize")


@dataclass(frozen=True)
class Case:
    """One randomized stimulus, fully determined by (seed, index)."""

    seed: int
    index: int
    cfg: PacketConfig
    profile: ChannelProfile
    lead_in: int
    smooth_legacy: bool

    def stream(self) -> np.ndarray:
        pkt = build_packet(self.cfg, seed=self.profile.seed)
        pad = np.zeros((self.lead_in, 2), dtype=np.int16)
        tail = np.zeros((40, 2), dtype=np.int16)
        return apply_profile(np.concatenate([pad, pkt, tail]), self.profile)

    def describe(self) -> str:
        c, p = self.cfg, self.profile
        return (
            f"format={c.format.value} gi={c.gi.value} mcs={c.mcs} nsym={c.nof_ofdm_sym} "
            f"smoothing={c.smoothing_recommended} smooth_legacy={self.smooth_legacy} "
            f"snr_db={p.snr_db:.2f} cfo_hz={p.cfo_hz:.1f} sfo_ppm={p.sfo_ppm:.2f} "
            f"taps={[(d, complex(round(g.real, 4), round(g.imag, 4))) for d, g in p.taps]} "
            f"lead_in={self.lead_in}"
        )


def random_case(seed: int, index: int, max_sym: int = 24) -> Case:
    rng = np.random.default_rng([seed, index])
    fmt = Format.HT if rng.random() < 0.5 else Format.LEGACY
    gi = GuardInterval.SHORT if fmt is Format.HT and rng.random() < 0.5 else GuardInterval.LONG
    cfg = PacketConfig(
        format=fmt, gi=gi, mcs=int(rng.integers(0, 8)),
        nof_ofdm_sym=int(rng.integers(1, max_sym + 1)),
        smoothing_recommended=bool(rng.random() < 0.3),
    )
    n_taps = int(rng.integers(1, 4))
    delays = np.sort(rng.choice(np.arange(1, 8), size=n_taps - 1, replace=False))
    gains = [1.0 + 0j] + list((rng.standard_normal(n_taps - 1) + 1j * rng.standard_normal(n_taps - 1)) * 0.3)
    gains = np.array(gains) / np.sqrt(np.sum(np.abs(gains) ** 2)) * 0.95
    taps = tuple(zip([0, *delays.tolist()], gains.tolist()))
    snr = float(rng.uniform(5, 40)) if rng.random() < 0.85 else float("inf")
    profile = ChannelProfile(
        snr_db=snr, cfo_hz=float(rng.uniform(-200e3, 200e3)), sfo_ppm=float(rng.uniform(-40, 40)),
        taps=taps, seed=int(rng.integers(0, 2**32)),
    )
    return Case(seed, index, cfg, profile, int(rng.integers(16, 300)), bool(rng.random() < 0.2))


@dataclass
class Divergence:
    case: Case
    stage: str
    symbol: int | None
    subcarrier: int | None
    element: int
    fixed: int | None
    golden: int | None
    detail: str = ""

    @property
    def bit_pattern(self) -> str:
        if self.fixed is None or self.golden is None:
            return "n/a"
        f, g = self.fixed & 0xFFFFFFFF, self.golden & 0xFFFFFFFF
        return f"fixed={f:032b} golden={g:032b} xor={f ^ g:032b}"

    def lines(self) -> list[str]:
        loc = []
        if self.symbol is not None:
            loc.append(f"symbol {self.symbol}")
        if self.subcarrier is not None:
            loc.append(f"subcarrier {self.subcarrier}")
        return [
            f"DIVERGENCE at stage '{self.stage}'" + (f" ({', '.join(loc)})" if loc else ""),
            f"  element {self.element}: fixed={self.fixed} golden={self.golden} {self.detail}".rstrip(),
            f"  bits: {self.bit_pattern}",
            f"  case: {self.case.describe()}",
            f"  repro: dot11rx compare --seed {self.case.seed} --start {self.case.index} --packets 1",
        ]


@dataclass
class CompareReport:
    seed: int
    packets: int = 0
    divergences: list[Divergence] = field(default_factory=list)
    perturb: str | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.divergences

    def lines(self) -> list[str]:
        head = f"compare seed={self.seed} packets={self.packets} perturb={self.perturb or 'none'}"
        out = [head, f"divergences: {len(self.divergences)} ({self.seconds:.1f} s)"]
        for d in self.divergences:
            out += d.lines()
        return out


def _equalize_layout(cfg: PacketConfig) -> list[tuple[str, int, int, int]]:
    """(kind, first symbol, n_sym, width) segments of the flattened equalize trace."""
    nd_sig = len(data_indices(Format.LEGACY))
    nd = len(data_indices(cfg.format))
    n_sig, n_data = cfg.n_sig, cfg.nof_ofdm_sym
    return [
        ("points", 0, n_sig, nd_sig * 2), ("points", n_sig, n_data, nd * 2),
        ("flags", 0, n_sig, nd_sig), ("flags", n_sig, n_data, nd),
    ]


def _locate(stage: str, shape: tuple, flat: int, cfg: PacketConfig) -> tuple[int | None, int | None]:
    """(symbol, subcarrier) of a flat element index within a stage trace."""
    if stage in ("fft", "chanest"):
        sym, rest = divmod(flat, N_FFT * 2)
        b = rest // 2
        return sym, b - N_FFT if b >= N_FFT // 2 else b
    if stage in ("cpe", "peg", "lvpe"):
        return flat, None
    if stage == "equalize":
        pos = flat
        for kind, first, n, width in _equalize_layout(cfg):
            if pos < n * width:
                s, r = divmod(pos, width)
                sym = first + s
                fmt = Format.LEGACY if sym < cfg.n_sig else cfg.format
                j = r // 2 if kind == "points" else r
                return sym, int(data_indices(fmt)[j])
            pos -= n * width
    return None, None


def first_divergence(case: Case, fixed: dict, golden: dict) -> Divergence | None:
    """Earliest divergence; per-symbol stages are ordered by symbol, then stage."""
    found = []
    for rank, stage in enumerate(STAGES):
        a, b = fixed.get(stage), golden.get(stage)
        if a is None and b is None:
            continue
        if a is None or b is None:
            found.append(((0, rank), Divergence(case, stage, None, None, 0, None, None,
                                               f"stage missing in {'fixed' if a is None else 'golden'} output")))
            continue
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape != b.shape:
            found.append(((0, rank), Divergence(case, stage, None, None, 0, None, None,
                                               f"shape {a.shape} vs {b.shape}")))
            continue
        diff = np.flatnonzero(a.reshape(-1) != b.reshape(-1))
        if len(diff) == 0:
            continue
        i = int(diff[0])
        sym, sc = _locate(stage, a.shape, i, case.cfg)
        key = (sym if stage in SYMBOL_STAGES else -1, rank)
        found.append((key, Divergence(case, stage, sym, sc, i, int(a.reshape(-1)[i]), int(b.reshape(-1)[i]))))
        if stage not in SYMBOL_STAGES:
            break  # everything downstream inherits it
    if not found:
        return None
    # a non-symbol stage always precedes the tracking loop
    return min(found, key=lambda kv: kv[0])[1]


def compare_case(case: Case, golden: GoldenReceiver) -> Divergence | None:
    s = case.stream()
    fixed = receive(s, case.cfg, smooth_legacy=case.smooth_legacy).trace()
    gold = golden.receive(s, case.cfg, smooth_legacy=case.smooth_legacy)
    return first_divergence(case, fixed, gold)


def oracle_compare(packets: int = 1000, seed: int = 0, start: int = 0, perturb: str | None = None,
                   stop_on_first: bool = False, max_sym: int = 24) -> CompareReport:
    golden = GoldenReceiver(perturb)
    rep = CompareReport(seed, perturb=perturb)
    t = time.perf_counter()
    for i in range(start, start + packets):
        d = compare_case(random_case(seed, i, max_sym), golden)
        rep.packets += 1
        if d is not None:
            rep.divergences.append(d)
            if stop_on_first:
                break
    rep.seconds = time.perf_counter() - t
    return rep
