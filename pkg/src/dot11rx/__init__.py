"""Bit-accurate fixed-point IEEE 802.11a/g/n SISO receiver baseband."""

from .chanest import Csi
from .channel import ChannelProfile, apply_profile
from .fft64 import Format, active_indices, fft64
from .receiver import RxResult, receive
from .txref import GuardInterval, PacketConfig, build_packet, random_payload

__version__ = "0.1.0"

__all__ = [
    "ChannelProfile",
    "Csi",
    "Format",
    "GuardInterval",
    "PacketConfig",
    "RxResult",
    "active_indices",
    "apply_profile",
    "build_packet",
    "fft64",
    "random_payload",
    "receive",
]
