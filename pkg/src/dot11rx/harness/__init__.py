"""Harness: I/Q files, configuration, metrics, sweeps, benchmarking, differential runs."""

from .bench import BenchResult, bench, make_corpus
from .compare import CompareReport, oracle_compare
from .config import ConfigError, RunConfig, load_config, parse_config
from .iqfile import IqFormatError, read_iq, write_iq
from .metrics import MetricsReport
from .runner import make_stimulus, run_rx, run_trials, sweep

__all__ = [
    "BenchResult",
    "CompareReport",
    "ConfigError",
    "IqFormatError",
    "MetricsReport",
    "RunConfig",
    "bench",
    "load_config",
    "make_corpus",
    "make_stimulus",
    "oracle_compare",
    "parse_config",
    "read_iq",
    "run_rx",
    "run_trials",
    "sweep",
    "write_iq",
]
