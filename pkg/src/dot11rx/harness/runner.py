"""Closed-loop runs: transmit, impair, receive, score."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from ..channel import apply_profile
from ..receiver import RxResult, receive
from ..txref import MCS_MODULATION, build_packet, random_payload
from .config import RunConfig, trial_seeds
from .metrics import MetricsReport, write_csi_csv, write_eq_csv, write_rows_csv


@dataclass(frozen=True)
class Stimulus:
    stream: np.ndarray
    payload_idx: np.ndarray
    payload_points: np.ndarray
    packet_start: int


def make_stimulus(cfg: RunConfig, trial: int = 0) -> Stimulus:
    """Packet for trial ``trial`` with zero padding, passed through the channel."""
    payload_seed, noise_seed = trial_seeds(cfg.seed, trial)
    idx, pts = random_payload(cfg.packet, payload_seed)
    pkt = build_packet(cfg.packet, pts)
    pad = np.zeros((cfg.lead_in, 2), dtype=np.int16)
    tail = np.zeros((cfg.tail, 2), dtype=np.int16)
    stream = np.concatenate([pad, pkt, tail])
    profile = dataclasses.replace(cfg.channel, seed=noise_seed)
    return Stimulus(apply_profile(stream, profile), idx, pts, cfg.lead_in)


def run_rx(cfg: RunConfig, stream, payload: tuple[np.ndarray, np.ndarray] | None = None,
           report: MetricsReport | None = None, write_outputs: bool = True,
           track: bool = True) -> tuple[RxResult, MetricsReport]:
    """Receive one stream and score it against ``payload`` (indices, points).

    Without a payload only detection and CFO statistics are recorded.
    CSI and equalized-point dumps are written when the config names them.
    """
    report = report if report is not None else MetricsReport()
    res = receive(stream, cfg.packet, smooth_legacy=cfg.smooth_legacy, track=track)
    if payload is not None:
        report.add_packet(cfg.packet.modulation, payload[0], payload[1], res, cfg.channel.cfo_hz)
    else:
        report.add_detection(res, cfg.channel.cfo_hz)
    if write_outputs and res.ok:
        meta = cfg.describe()
        out = cfg.outputs
        if "csi_csv" in out:
            write_csi_csv(out["csi_csv"], res.csi_ht if res.csi_ht is not None else res.csi_legacy, meta)
        if "eq_csv" in out:
            write_eq_csv(out["eq_csv"], [res.data], meta)
    return res, report


def run_trials(cfg: RunConfig, track: bool = True) -> MetricsReport:
    """``cfg.trials`` independent packets, each with its own derived seeds."""
    report = MetricsReport()
    for i in range(cfg.trials):
        st = make_stimulus(cfg, i)
        run_rx(cfg, st.stream, (st.payload_idx, st.payload_points), report,
               write_outputs=False, track=track)
    return report


def sweep(cfg: RunConfig, mcs_list, snr_list, trials: int | None = None,
          csv_path: str | None = None) -> list[dict]:
    """SER/EVM/detection waterfall over an (MCS, SNR) grid.

    Each cell reuses ``cfg`` with the MCS and SNR replaced; trial seeds depend
    only on ``cfg.seed`` and the trial index, so a cell is reproducible alone.
    """
    rows = []
    for mcs in mcs_list:
        for snr in snr_list:
            cell = dataclasses.replace(
                cfg,
                packet=dataclasses.replace(cfg.packet, mcs=int(mcs)),
                channel=dataclasses.replace(cfg.channel, snr_db=float(snr)),
                trials=trials or cfg.trials,
            )
            rep = run_trials(cell)
            mod = MCS_MODULATION[int(mcs)].value
            rows.append({
                "mcs": int(mcs),
                "modulation": mod,
                "snr_db": float(snr),
                "trials": cell.trials,
                "ser": rep.ser.get(mod, math.nan),
                "evm_db": rep.evm_db,
                "detect_rate": rep.detect_rate,
            })
    if csv_path:
        write_rows_csv(csv_path, "sweep", rows, cfg.describe())
    return rows


def required_snr(rows: list[dict], mcs: int, target_ser: float) -> float:
    """Lowest swept SNR from which SER stays at or below ``target_ser``."""
    cells = sorted((r["snr_db"], r["ser"]) for r in rows if r["mcs"] == mcs)
    for i, (snr, _) in enumerate(cells):
        if all(s <= target_ser for _, s in cells[i:]):
            return snr
    return math.inf


def count_inversions(rows: list[dict], mcs: int) -> int:
    """Adjacent SNR steps where SER went up."""
    ser = [s for _, s in sorted((r["snr_db"], r["ser"]) for r in rows if r["mcs"] == mcs)]
    return sum(1 for a, b in zip(ser, ser[1:]) if b > a)

