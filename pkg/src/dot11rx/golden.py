"""Double-precision golden model of the receive chain.

Every operation is evaluated in float64 on integer-valued operands and
quantized at exactly the points where the fixed-point chain rounds, so the
two must agree bit for bit.  Nothing here touches the fixed-point kernels or
their ROMs: sines, cosines and arctangents come straight from ``math``.

``GoldenReceiver(perturb=stage)`` swaps round-half-away for floor in one
stage; the differential runner uses it to prove that divergences are caught
and localized.
"""

from __future__ import annotations

import math

import numpy as np

from .fft64 import PILOT_INDICES, Format, active_indices, data_indices
from .txref import (
    PILOT_BASE,
    POLARITY_SEQ,
    SAMPLE_RATE,
    PacketConfig,
    ltf_sign,
    ltf_time_symbol,
)

TURN = 4096.0
Q15 = 32768.0
TRIG = 16384.0

PERTURBABLE = ("cfo_coarse", "cfo_fine", "cfo_correct", "fft", "chanest", "cpe", "peg", "lvpe", "equalize")


def half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def sat(x):
    return np.clip(x, -Q15, Q15 - 1)


def as_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[..., 0] + 1j * x[..., 1]


def as_pairs(z) -> np.ndarray:
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1).astype(np.int64)


class GoldenReceiver:
    def __init__(self, perturb: str | None = None):
        if perturb is not None and perturb not in PERTURBABLE:
            raise ValueError(f"cannot perturb {perturb!r}; choose from {PERTURBABLE}")
        self.perturb = perturb

    def rnd(self, stage: str):
        return np.floor if stage is not None and stage == self.perturb else half_away

    # -- primitives ----------------------------------------------------------

    def angle(self, z, stage: str) -> tuple[np.ndarray, np.ndarray]:
        """LUT-equivalent arctangent: octant fold, 1/255 ratio grid, linear steps of 1/256 between entries."""
        rnd = self.rnd(stage)
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        x, y = z.real, z.imag
        ax, ay = np.abs(x), np.abs(y)
        zero = (ax == 0) & (ay == 0)
        lo, hi = np.minimum(ax, ay), np.maximum(ax, ay)
        t = rnd(lo * 255.0 * 256.0 / np.where(zero, 1.0, hi))
        i = np.floor(t / 256.0)
        f = t - i * 256.0
        grid = half_away(np.arctan(np.arange(257) / 255.0) * TURN / (2 * math.pi))
        base = grid[i.astype(np.int64)]
        step = np.where(f > 0, grid[np.minimum(i + 1, 255).astype(np.int64)] - base, 0.0)
        a = base + rnd(step * f / 256.0)
        a = np.where(ay > ax, TURN / 4 - a, a)
        a = np.where(x < 0, TURN / 2 - a, a)
        a = np.where(y < 0, -a, a)
        return np.where(zero, 0.0, a), zero

    def rotate(self, z, phase, stage: str) -> np.ndarray:
        rnd = self.rnd(stage)
        p = np.mod(np.asarray(phase, dtype=np.float64), TURN)
        w = half_away(np.cos(2 * math.pi * p / TURN) * TRIG) + 1j * half_away(np.sin(2 * math.pi * p / TURN) * TRIG)
        v = np.asarray(z) * w / TRIG
        return sat(rnd(v.real)) + 1j * sat(rnd(v.imag))

    def fft(self, x) -> np.ndarray:
        """Iterative radix-2 DIT, halved and rounded after each butterfly stage."""
        rnd = self.rnd("fft")
        x = np.asarray(x, dtype=np.complex128)
        n = x.shape[-1]
        rev = [int(format(i, "06b")[::-1], 2) for i in range(n)]
        a = x[..., rev].copy()
        span = 1
        while span < n:
            tw = np.exp(-2j * math.pi * np.arange(span) / (2 * span))
            tw = half_away(tw.real * TRIG) + 1j * half_away(tw.imag * TRIG)
            out = np.empty_like(a)
            for start in range(0, n, 2 * span):
                top = a[..., start : start + span] * TRIG
                bot = a[..., start + span : start + 2 * span] * tw
                for dst, v in ((slice(start, start + span), top + bot), (slice(start + span, start + 2 * span), top - bot)):
                    v = v / (2 * TRIG)
                    out[..., dst] = sat(rnd(v.real)) + 1j * sat(rnd(v.imag))
            a = out
            span *= 2
        return a

    # -- synchronization ----------------------------------------------------------

    def detect(self, z) -> int:
        n = len(z) - 47
        if n <= 0:
            return -1
        prod = z[:-16] * np.conj(z[16:])
        power = np.abs(z[16:]) ** 2
        c = np.convolve(prod, np.ones(32), mode="valid")[:n]
        p = np.convolve(power, np.ones(32), mode="valid")[:n]
        m = np.where(p > 0, np.sqrt(c.real * c.real + c.imag * c.imag) / np.where(p > 0, p, 1.0), 0.0)
        above = (m > 0.75).astype(np.int64)
        runs = np.convolve(above, np.ones(16, dtype=np.int64), mode="valid")
        hits = np.flatnonzero(runs == 16)
        return int(hits[0]) if len(hits) else -1

    def cfo(self, z, first, count, lag, stage) -> tuple[int, bool]:
        s = np.sum(np.conj(z[first : first + count]) * z[first + lag : first + lag + count])
        a, zero = self.angle(s, stage)
        return int(a[0]), bool(zero[0])

    def derotate(self, z, freq_hz, stage) -> np.ndarray:
        word = float(half_away(freq_hz * 2.0**32 / SAMPLE_RATE))
        acc = np.mod(-np.arange(len(z), dtype=np.float64) * word, 2.0**32)
        phase = np.mod(np.floor(acc / 2.0**20 + 0.5), TURN)
        return self.rotate(z, phase, stage)

    def align(self, z, expected) -> int:
        ref = as_complex(ltf_time_symbol(Format.LEGACY))
        ref = np.concatenate([ref, ref])
        lo = max(expected - 16, 0)
        hi = min(expected + 16, len(z) - 128)
        best, best_pos = -1.0, lo
        for pos in range(lo, hi + 1):
            c = np.sum(z[pos : pos + 128] * np.conj(ref))
            v = c.real * c.real + c.imag * c.imag
            if v > best:
                best, best_pos = v, pos
        return best_pos

    # -- channel estimation ----------------------------------------------------------

    def csi(self, syms, fmt: Format, smooth: bool) -> np.ndarray:
        if fmt is Format.LEGACY:
            rnd = self.rnd("chanest")
            s = (syms[0] + syms[1]) / 2
            avg = rnd(s.real) + 1j * rnd(s.imag)
        else:
            avg = syms[0]
        h = sat(avg.real * ltf_sign(fmt)) + 1j * sat(avg.imag * ltf_sign(fmt))
        if smooth:
            bins = active_indices(fmt) % 64
            v = h[bins]
            out = np.zeros(64, dtype=np.complex128)
            for j in range(len(bins)):
                window = v[max(j - 1, 0) : j + 2]
                m = np.sum(window) / len(window)
                out[bins[j]] = sat(half_away(m.real)) + 1j * sat(half_away(m.imag))
            h = out
        return h

    # -- equalization ----------------------------------------------------------

    def equalize(self, syms, h, fmt: Format, pol_nr: int, acc: float):
        pil = PILOT_INDICES
        data = data_indices(fmt)
        hp = h[pil % 64]
        cpes, sxys, accs, pts, flags = [], [], [], [], []
        for sym in syms:
            pol = POLARITY_SEQ[pol_nr] * PILOT_BASE
            pol_nr = (pol_nr + 1) % len(POLARITY_SEQ)
            sflag = 0
            a, zero = self.angle(np.sum(np.conj(sym[pil % 64]) * pol * hp), "cpe")
            cpe = float(a[0])
            if zero[0]:
                sflag |= 2
            ph = np.clip(cpe + half_away(pil * acc / 256.0), -(2.0**17), 2.0**17 - 1)
            xp = self.rotate(sym[pil % 64], ph, "peg")
            ang, zeros = self.angle(np.conj(xp) * pol * hp, "peg")
            if zeros.any():
                sflag |= 4
            sxy = float(np.clip(np.sum(pil * ang), -(2.0**23), 2.0**23 - 1))
            inc = self.rnd("lvpe")(sxy * 256.0 / 980.0)
            limit = float(((2**17 - 1 - 2048) // 28) * 256)
            acc = float(np.clip(acc + inc, -limit, limit))
            ph = np.clip(cpe + half_away(data * acc / 256.0), -(2.0**17), 2.0**17 - 1)
            xd = self.rotate(sym[data % 64], ph, "equalize")
            hd = h[data % 64]
            den = hd.real**2 + hd.imag**2
            num = xd * np.conj(hd)
            rnd = self.rnd("equalize")
            safe = np.where(den > 0, den, 1.0)
            y = sat(rnd(num.real * Q15 / safe)) + 1j * sat(rnd(num.imag * Q15 / safe))
            y = np.where(den > 0, y, 0)
            f = np.where(den > 0, 0, 1) | sflag
            cpes.append(cpe)
            sxys.append(sxy)
            accs.append(acc)
            pts.append(y)
            flags.append(f)
        return cpes, sxys, accs, pts, flags, pol_nr, acc

    # -- chain ----------------------------------------------------------

    def receive(self, stream, cfg: PacketConfig, smooth_legacy: bool = False) -> dict[str, np.ndarray]:
        z = as_complex(stream)
        start = self.detect(z)
        t: dict[str, np.ndarray] = {"detect": np.array([int(start >= 0), start])}
        if start < 0:
            return t
        raw = z[start:]
        if len(raw) < 160:
            return t
        coarse, cz = self.cfo(raw, 16, 128, 16, "cfo_coarse")
        t["cfo_coarse"] = np.array([coarse, int(cz)])
        f_coarse = coarse * SAMPLE_RATE / (TURN * 16)
        region = self.derotate(raw[:400], f_coarse, None)
        peak = self.align(region, 192)
        t["timing"] = np.array([peak])
        fine, fz = self.cfo(region[peak - 32 : peak + 128], 32, 64, 64, "cfo_fine")
        t["cfo_fine"] = np.array([fine, int(fz)])
        f_total = f_coarse + fine * SAMPLE_RATE / (TURN * 64)

        t0 = peak - 2
        starts = [t0, t0 + 64]
        starts += [t0 + 128 + 80 * k + 16 for k in range(cfg.n_sig)]
        cursor = t0 + 128 + 80 * cfg.n_sig
        if cfg.format is Format.HT:
            starts.append(cursor + 16)
            cursor += 80
        starts += [cursor + cfg.symbol_len * j + cfg.gi.length for j in range(cfg.nof_ofdm_sym)]
        end = starts[-1] + 64
        if end > len(raw):
            return t
        corrected = self.derotate(raw[:end], f_total, "cfo_correct")
        t["cfo_correct"] = as_pairs(corrected)
        freq = self.fft(np.stack([corrected[s : s + 64] for s in starts]))
        t["fft"] = as_pairs(freq)

        n_sig = cfg.n_sig
        h_leg = self.csi(freq[0:2], Format.LEGACY, smooth_legacy)
        hs = [h_leg]
        seg = [(freq[2 : 2 + n_sig], h_leg, Format.LEGACY)]
        if cfg.format is Format.HT:
            h_ht = self.csi(freq[2 + n_sig : 3 + n_sig], Format.HT, cfg.smoothing_recommended)
            hs.append(h_ht)
            seg.append((freq[3 + n_sig :], h_ht, Format.HT))
        else:
            seg = [(freq[2:], h_leg, Format.LEGACY)]
        t["chanest"] = as_pairs(np.stack(hs))

        pol_nr, acc = 0, 0.0
        cpe, sxy, accs, pts, flags = [], [], [], [], []
        for syms, h, fmt in seg:
            c, s, a, p, f, pol_nr, acc = self.equalize(syms, h, fmt, pol_nr, acc)
            cpe += c
            sxy += s
            accs += a
            pts.append(np.array(p))
            flags.append(np.array(f))
        t["cpe"] = np.array(cpe, dtype=np.int64)
        t["peg"] = np.array(sxy, dtype=np.int64)
        t["lvpe"] = np.array(accs, dtype=np.int64)
        if cfg.format is Format.LEGACY:
            blocks_p = [pts[0][:n_sig], pts[0][n_sig:]]
            blocks_f = [flags[0][:n_sig], flags[0][n_sig:]]
        else:
            blocks_p, blocks_f = pts, flags
        t["equalize"] = np.concatenate(
            [as_pairs(b).reshape(-1) for b in blocks_p] + [np.asarray(b, dtype=np.int64).reshape(-1) for b in blocks_f]
        )
        return t
