"""``dot11rx`` command line.

Exit codes: 0 success, 1 usage/config/input error, 2 divergence or failed
requirement.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from ..channel import apply_profile
from ..golden import PERTURBABLE
from ..txref import build_packet, random_payload
from .bench import bench, make_corpus
from .compare import oracle_compare
from .config import ConfigError, RunConfig, load_config, trial_seeds, with_overrides
from .iqfile import IqFormatError, read_iq, write_iq
from .metrics import write_rows_csv
from .runner import make_stimulus, run_rx, sweep

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_taps(text: str) -> list[list[float]]:
    """``"0:1,3:0.4:-0.2"`` -> [[0, 1, 0], [3, 0.4, -0.2]]."""
    taps = []
    for part in text.split(","):
        f = part.split(":")
        if len(f) not in (2, 3):
            raise ConfigError(f"bad tap '{part}'; expected delay:re[:im]")
        try:
            taps.append([int(f[0]), float(f[1]), float(f[2]) if len(f) == 3 else 0.0])
        except ValueError:
            raise ConfigError(f"bad tap '{part}'") from None
    return taps


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags override the config file)")
    g.add_argument("--config", "-c", help="YAML or JSON run configuration")
    g.add_argument("--format", choices=["legacy", "ht"])
    g.add_argument("--gi", choices=["long", "short"])
    g.add_argument("--mcs", type=int)
    g.add_argument("--nsym", type=int, dest="nof_ofdm_sym")
    g.add_argument("--smoothing", dest="smoothing_recommended", action="store_const", const=True)
    g.add_argument("--snr", type=float, dest="snr_db")
    g.add_argument("--cfo", type=float, dest="cfo_hz")
    g.add_argument("--sfo", type=float, dest="sfo_ppm")
    g.add_argument("--taps", help="delay:re[:im],... e.g. 0:0.9,4:0.3:0.2")
    g.add_argument("--seed", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--lead-in", type=int, dest="lead_in")
    g.add_argument("--smooth-legacy", dest="smooth_legacy", action="store_const", const=True)


_OVERRIDES = ("format", "gi", "mcs", "nof_ofdm_sym", "smoothing_recommended", "snr_db", "cfo_hz",
              "sfo_ppm", "seed", "trials", "lead_in", "smooth_legacy")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    kw = {k: getattr(args, k, None) for k in _OVERRIDES}
    if getattr(args, "taps", None):
        kw["taps"] = _parse_taps(args.taps)
    for name in ("iq", "metrics_csv", "eq_csv", "csi_csv"):
        v = getattr(args, name, None)
        if v is not None:
            cfg = dataclasses.replace(cfg, outputs={**cfg.outputs, name: v})
    return with_overrides(cfg, **kw)


def _header(cfg: RunConfig, args) -> None:
    print(f"# config: {args.config or '(defaults)'}  seed: {cfg.seed}")
    print(f"# resolved: {cfg.describe()}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_tx(args) -> int:
    cfg = _config(args)
    _, pts = random_payload(cfg.packet, trial_seeds(cfg.seed, 0)[0])
    pkt = build_packet(cfg.packet, pts)
    stream = np.concatenate([np.zeros((cfg.lead_in, 2), np.int16), pkt, np.zeros((cfg.tail, 2), np.int16)])
    write_iq(args.out, stream)
    _header(cfg, args)
    print(f"wrote {len(stream)} samples ({len(pkt)} packet) to {args.out}")
    return EXIT_OK


def cmd_channel(args) -> int:
    cfg = _config(args)
    stream = read_iq(args.input)
    profile = dataclasses.replace(cfg.channel, seed=trial_seeds(cfg.seed, 0)[1])
    out = apply_profile(stream, profile)
    write_iq(args.out, out)
    _header(cfg, args)
    print(f"wrote {len(out)} samples to {args.out}")
    return EXIT_OK


def _print_report(rep) -> None:
    for k, v in rep.summary().items():
        print(f"{k}: {v:.4g}" if isinstance(v, float) else f"{k}: {v}")
    for e in sorted(set(rep.errors)):
        print(f"chain error: {e}")


def cmd_rx(args) -> int:
    cfg = _config(args)
    _header(cfg, args)
    if args.input:
        stream = read_iq(args.input)
        ref = None if args.no_reference else random_payload(cfg.packet, trial_seeds(cfg.seed, 0)[0])
        res, rep = run_rx(cfg, stream, ref)
        if res.ok:
            print(f"detected at sample {res.detection.start_index}; "
                  f"cfo estimate {res.residual_cfo_hz:.1f} Hz")
    else:
        rep = None
        for i in range(cfg.trials):
            st = make_stimulus(cfg, i)
            _, rep = run_rx(cfg, st.stream, (st.payload_idx, st.payload_points), rep, write_outputs=i == 0)
    _print_report(rep)
    if "metrics_csv" in cfg.outputs:
        write_rows_csv(cfg.outputs["metrics_csv"], "metrics", [rep.summary()], cfg.describe())
    return EXIT_OK


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    _header(cfg, args)
    mcs = [int(v) for v in args.mcs_list.split(",")]
    if args.snr_range:
        lo, hi, step = _floats(args.snr_range)
        snr = list(np.arange(lo, hi + step / 2, step))
    else:
        snr = _floats(args.snr_list)
    rows = sweep(cfg, mcs, snr, csv_path=args.out)
    print("mcs,modulation,snr_db,trials,ser,evm_db,detect_rate")
    for r in rows:
        print(f"{r['mcs']},{r['modulation']},{r['snr_db']:g},{r['trials']},{r['ser']:.5f},"
              f"{r['evm_db']:.2f},{r['detect_rate']:.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    corpus = make_corpus(args.samples, seed=args.seed or 0)
    res = bench(corpus, runs=args.runs)
    print("\n".join(res.lines()))
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_compare(args) -> int:
    rep = oracle_compare(args.packets, seed=args.seed or 0, start=args.start, perturb=args.perturb,
                         stop_on_first=args.stop_on_first)
    text = "\n".join(rep.lines())
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dot11rx", description="Fixed-point 802.11a/g/n receiver harness")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("tx", help="write a reference packet to an I/Q file")
    _add_config_args(s)
    s.add_argument("--out", "-o", required=True)
    s.set_defaults(func=cmd_tx)

    s = sub.add_parser("channel", help="apply the channel profile to an I/Q file")
    _add_config_args(s)
    s.add_argument("--in", "-i", dest="input", required=True)
    s.add_argument("--out", "-o", required=True)
    s.set_defaults(func=cmd_channel)

    s = sub.add_parser("rx", help="receive an I/Q file, or run closed-loop trials")
    _add_config_args(s)
    s.add_argument("--in", "-i", dest="input", help="I/Q file; omit for generated trials")
    s.add_argument("--no-reference", action="store_true", help="skip SER/EVM (payload unknown)")
    s.add_argument("--metrics-csv", dest="metrics_csv")
    s.add_argument("--eq-csv", dest="eq_csv")
    s.add_argument("--csi-csv", dest="csi_csv")
    s.set_defaults(func=cmd_rx)

    s = sub.add_parser("sweep", help="SER/EVM waterfall over MCS x SNR")
    _add_config_args(s)
    s.add_argument("--mcs-list", default="0,1,3,5")
    s.add_argument("--snr-list", default="0,5,10,15,20,25,30")
    s.add_argument("--snr-range", help="lo,hi,step (overrides --snr-list)")
    s.add_argument("--out", "-o", help="CSV output path")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("bench", help="single-core receive throughput")
    s.add_argument("--samples", type=int, default=10_000_000)
    s.add_argument("--runs", type=int, default=5)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("compare", help="fixed-point vs golden model differential run")
    s.add_argument("--packets", type=int, default=1000)
    s.add_argument("--seed", type=int)
    s.add_argument("--start", type=int, default=0, help="first case index")
    s.add_argument("--perturb", choices=PERTURBABLE, help="inject a rounding fault in the golden model")
    s.add_argument("--stop-on-first", action="store_true")
    s.add_argument("--report", help="also write the report to this file")
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IqFormatError, OSError) as e:
        print(f"dot11rx: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
