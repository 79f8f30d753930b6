"""Run configuration: one YAML (or JSON) file, validated before anything runs.

Example::

    packet:
      format: ht            # legacy | ht
      gi: short             # long | short
      mcs: 3
      nof_ofdm_sym: 20
      smoothing_recommended: false
    channel:
      snr_db: 25            # or .inf
      cfo_hz: 50000
      sfo_ppm: 20
      taps: [[0, 0.8, 0.0], [4, 0.0, 0.6]]   # delay, gain re, gain im
    run:
      trials: 100
      seed: 7
      lead_in: 100
      smooth_legacy: false
    output:
      metrics_csv: out/metrics.csv
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..channel import ChannelProfile
from ..txref import PacketConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    packet: PacketConfig = field(default_factory=PacketConfig)
    channel: ChannelProfile = field(default_factory=ChannelProfile)
    trials: int = 1
    seed: int = 0
    lead_in: int = 100
    tail: int = 40
    smooth_legacy: bool = False
    outputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        ch = dataclasses.asdict(self.channel)
        ch["taps"] = [[d, g.real, g.imag] for d, g in self.channel.taps]
        ch.pop("seed")
        return {
            "packet": {k: getattr(v, "value", v) for k, v in dataclasses.asdict(self.packet).items()},
            "channel": ch,
            "run": {
                "trials": self.trials, "seed": self.seed, "lead_in": self.lead_in,
                "tail": self.tail, "smooth_legacy": self.smooth_legacy,
            },
            "output": dict(self.outputs),
        }

    def describe(self) -> str:
        """One-line, reproducible summary embedded in reports."""
        return json.dumps(self.to_dict(), sort_keys=True, default=str)


_SECTIONS = {
    "packet": {"format", "gi", "mcs", "nof_ofdm_sym", "smoothing_recommended"},
    "channel": {"snr_db", "cfo_hz", "sfo_ppm", "taps"},
    "run": {"trials", "seed", "lead_in", "tail", "smooth_legacy"},
    "output": {"iq", "metrics_csv", "eq_csv", "csi_csv", "report"},
}


def _check_keys(section: str, data: dict) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be a mapping")
    unknown = set(data) - _SECTIONS[section]
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")


def _num(v, name: str, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    try:
        out = kind(float(v)) if kind is float else kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {v!r}") from None
    if kind is int and isinstance(v, float) and not v.is_integer():
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return out


def _bool(v, name: str) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"{name} must be true or false, got {v!r}")
    return v


def _taps(v) -> tuple[tuple[int, complex], ...]:
    if not isinstance(v, list) or not v:
        raise ConfigError("channel.taps must be a non-empty list of [delay, re, im]")
    taps = []
    for t in v:
        if not isinstance(t, list) or len(t) not in (2, 3):
            raise ConfigError(f"bad tap {t!r}; expected [delay, re] or [delay, re, im]")
        d = _num(t[0], "tap delay", int)
        g = complex(_num(t[1], "tap gain"), _num(t[2], "tap gain") if len(t) == 3 else 0.0)
        taps.append((d, g))
    return tuple(taps)


def parse_config(data: dict | None) -> RunConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    p, c, r, o = (data.get(s) or {} for s in ("packet", "channel", "run", "output"))
    for name, sec in (("packet", p), ("channel", c), ("run", r), ("output", o)):
        _check_keys(name, sec)
    try:
        packet = PacketConfig(
            format=str(p.get("format", "legacy")).lower(),
            gi=str(p.get("gi", "long")).lower(),
            mcs=_num(p.get("mcs", 0), "packet.mcs", int),
            nof_ofdm_sym=_num(p.get("nof_ofdm_sym", 1), "packet.nof_ofdm_sym", int),
            smoothing_recommended=_bool(p.get("smoothing_recommended", False), "packet.smoothing_recommended"),
        )
        seed = _num(r.get("seed", 0), "run.seed", int)
        channel = ChannelProfile(
            snr_db=_num(c.get("snr_db", math.inf), "channel.snr_db"),
            cfo_hz=_num(c.get("cfo_hz", 0.0), "channel.cfo_hz"),
            sfo_ppm=_num(c.get("sfo_ppm", 0.0), "channel.sfo_ppm"),
            taps=_taps(c["taps"]) if "taps" in c else ((0, 1 + 0j),),
            seed=seed,
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    trials = _num(r.get("trials", 1), "run.trials", int)
    lead_in = _num(r.get("lead_in", 100), "run.lead_in", int)
    tail = _num(r.get("tail", 40), "run.tail", int)
    if trials < 1:
        raise ConfigError("run.trials must be >= 1")
    if lead_in < 0 or tail < 0:
        raise ConfigError("run.lead_in and run.tail must be >= 0")
    if not all(isinstance(v, str) for v in o.values()):
        raise ConfigError("output paths must be strings")
    return RunConfig(
        packet=packet, channel=channel, trials=trials, seed=seed, lead_in=lead_in, tail=tail,
        smooth_legacy=_bool(r.get("smooth_legacy", False), "run.smooth_legacy"), outputs=dict(o),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}") from None
    return parse_config(data)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    """Return ``cfg`` with command-line overrides (None means keep)."""
    d = cfg.to_dict()
    section_of = {k: s for s, keys in _SECTIONS.items() for k in keys}
    for k, v in kw.items():
        if v is None:
            continue
        if k not in section_of:
            raise ConfigError(f"unknown override {k}")
        d[section_of[k]][k] = v
    return parse_config(d)


def trial_seeds(seed: int, index: int) -> tuple[int, int]:
    """(payload seed, noise seed) for trial ``index``, derived from ``seed``."""
    a, b = np.random.SeedSequence([seed, index]).generate_state(2, dtype=np.uint64)
    return int(a), int(b)
