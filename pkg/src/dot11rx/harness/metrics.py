"""Link metrics and the CSV dumps the harness writes."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..chanest import Csi
from ..equalizer import EqualizedBlock
from ..fft64 import active_indices, bin_of, data_indices
from ..txref import CONSTELLATION_ENERGY, Modulation, hard_decision

CSV_VERSION = 1


def evm_db(received, reference) -> float:
    """Error power relative to the reference constellation energy, in dB."""
    err = np.mean(np.abs(np.asarray(received) - np.asarray(reference)) ** 2)
    if err == 0:
        return -math.inf
    return 10 * math.log10(err / CONSTELLATION_ENERGY)


@dataclass
class MetricsReport:
    """Accumulated link statistics over one or more packets.

    EVM is measured against the known transmitted points; packets that were
    not detected count every payload symbol as an error.
    """

    evm_db: float = math.nan
    evm_db_per_symbol: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ser: dict[str, float] = field(default_factory=dict)
    detect_rate: float = math.nan
    residual_cfo_hz: float = math.nan
    throughput_msps: float = math.nan
    packets: int = 0
    detected: int = 0
    errors: list[str] = field(default_factory=list)
    # running sums
    _err_power: float = 0.0
    _n_points: int = 0
    _sym_err: dict[str, int] = field(default_factory=dict)
    _sym_total: dict[str, int] = field(default_factory=dict)
    _cfo_sq: float = 0.0
    _cfo_n: int = 0
    _sym_power: np.ndarray = field(default_factory=lambda: np.zeros(0))
    _sym_count: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def add_packet(self, mod: Modulation, sent_idx, sent_points, result, true_cfo_hz: float = 0.0) -> None:
        key = Modulation(mod).value
        n = int(np.size(sent_idx))
        self.packets += 1
        self._sym_total[key] = self._sym_total.get(key, 0) + n
        if result is None or not result.ok:
            self._sym_err[key] = self._sym_err.get(key, 0) + n
            if result is not None and result.error:
                self.errors.append(result.error)
        else:
            y = result.data.as_complex()
            got = hard_decision(y, mod)
            self._sym_err[key] = self._sym_err.get(key, 0) + int(np.count_nonzero(got != sent_idx))
            e = np.abs(y - sent_points) ** 2
            self._err_power += float(e.sum())
            self._n_points += e.size
            per = e.sum(axis=1)
            if len(self._sym_power) < len(per):
                self._sym_power = np.pad(self._sym_power, (0, len(per) - len(self._sym_power)))
                self._sym_count = np.pad(self._sym_count, (0, len(per) - len(self._sym_count)))
            self._sym_power[: len(per)] += per
            self._sym_count[: len(per)] += e.shape[1]
        self._count_detection(result, true_cfo_hz)

    def add_detection(self, result, true_cfo_hz: float = 0.0) -> None:
        """Record a stream with no known payload (detection and CFO only)."""
        self.packets += 1
        if result is not None and result.error:
            self.errors.append(result.error)
        self._count_detection(result, true_cfo_hz)

    def _count_detection(self, result, true_cfo_hz: float) -> None:
        if result is not None and result.detection.detected:
            self.detected += 1
            est = result.residual_cfo_hz
            if est is not None:
                self._cfo_sq += (true_cfo_hz - est) ** 2
                self._cfo_n += 1
        self._finish()

    def _finish(self) -> None:
        self.detect_rate = self.detected / self.packets if self.packets else math.nan
        if self._n_points:
            mean = self._err_power / self._n_points
            self.evm_db = 10 * math.log10(mean / CONSTELLATION_ENERGY) if mean > 0 else -math.inf
        if len(self._sym_count):
            mean = self._sym_power / np.maximum(self._sym_count, 1)
            with np.errstate(divide="ignore"):
                self.evm_db_per_symbol = 10 * np.log10(mean / CONSTELLATION_ENERGY)
        self.ser = {k: self._sym_err.get(k, 0) / t for k, t in self._sym_total.items() if t}
        if self._cfo_n:
            self.residual_cfo_hz = math.sqrt(self._cfo_sq / self._cfo_n)

    def summary(self) -> dict[str, float]:
        out = {
            "packets": self.packets,
            "detect_rate": self.detect_rate,
            "evm_db": self.evm_db,
            "residual_cfo_hz_rms": self.residual_cfo_hz,
            "throughput_msps": self.throughput_msps,
        }
        out.update({f"ser_{k}": v for k, v in self.ser.items()})
        return out


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _writer(path: str | Path, kind: str, columns: list[str], meta: str | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    f = path.open("w", newline="")
    f.write(f"# dot11rx-{kind} v{CSV_VERSION}\n")
    if meta:
        f.write(f"# {meta}\n")
    w = csv.writer(f)
    w.writerow(columns)
    return f, w


def write_csi_csv(path, csi: Csi, meta: str | None = None) -> None:
    f, w = _writer(path, "csi", ["subcarrier_index", "re", "im"], meta)
    with f:
        for k in active_indices(csi.format):
            re, im = csi.h[bin_of(k)]
            w.writerow([int(k), int(re), int(im)])


def write_eq_csv(path, blocks: list[EqualizedBlock], meta: str | None = None) -> None:
    f, w = _writer(path, "eq", ["symbol_index", "subcarrier_index", "re", "im", "flags"], meta)
    with f:
        n = 0
        for b in blocks:
            idx = data_indices(b.format)
            for s in range(len(b)):
                for j, k in enumerate(idx):
                    w.writerow([n, int(k), int(b.points[s, j, 0]), int(b.points[s, j, 1]), int(b.flags[s, j])])
                n += 1


def write_rows_csv(path, kind: str, rows: list[dict], meta: str | None = None) -> None:
    if not rows:
        raise ValueError("no rows to write")
    f, w = _writer(path, kind, list(rows[0]), meta)
    with f:
        for r in rows:
            w.writerow(list(r.values()))


def read_rows_csv(path) -> tuple[str, list[dict]]:
    """Return (version header, rows) of a file written by this module."""
    with open(path, newline="") as f:
        header = f.readline().strip()
        lines = [ln for ln in f if not ln.startswith("#")]
    return header, list(csv.DictReader(lines))
