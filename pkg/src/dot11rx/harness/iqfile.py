"""Raw I/Q files: interleaved little-endian int16, I then Q, 20 Msps implied."""

from __future__ import annotations

import os

import numpy as np

BYTES_PER_SAMPLE = 4
_DTYPE = np.dtype("<i2")


class IqFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def encode_iq(stream) -> bytes:
    x = np.asarray(stream)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValueError(f"expected (n, 2) samples, got {x.shape}")
    return np.ascontiguousarray(x, dtype=_DTYPE).tobytes()


def decode_iq(data: bytes) -> np.ndarray:
    tail = len(data) % BYTES_PER_SAMPLE
    if tail:
        offset = len(data) - tail
        raise IqFormatError(f"truncated sample: {tail} trailing byte(s)", offset)
    return np.frombuffer(data, dtype=_DTYPE).reshape(-1, 2).astype(np.int16)


def write_iq(path: str | os.PathLike, stream) -> None:
    with open(path, "wb") as f:
        f.write(encode_iq(stream))


def read_iq(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_iq(f.read())
