"""
Wire format for intermediate tensors.

    header : channels (uint32 LE), frames (uint32 LE)
    payload: channels x frames float32 LE, row-major

Byte length is always 8 + 4 x elements.
"""
import hashlib
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.core.errors import MalformedConfig, MalformedHeader, TruncatedPayload
from .models import Tensor

HEADER = struct.Struct("<II")
HEADER_BYTES = HEADER.size
WIRE_DTYPE = np.dtype("<f4")


def serialized_size(channels: int, frames: int) -> int:
    return HEADER_BYTES + WIRE_DTYPE.itemsize * channels * frames


def serialize(tensor: Tensor) -> bytes:
    channels, frames = tensor.data.shape
    return HEADER.pack(channels, frames) + tensor.data.astype(WIRE_DTYPE, copy=False).tobytes()


def deserialize(payload: bytes) -> Tensor:
    if len(payload) < HEADER_BYTES:
        raise MalformedHeader(f"stream of {len(payload)} bytes is shorter than the {HEADER_BYTES}-byte header")
    channels, frames = HEADER.unpack_from(payload, 0)
    if channels == 0 or frames == 0:
        raise MalformedHeader(f"header declares an empty tensor ({channels} x {frames})")
    expected = serialized_size(channels, frames)
    if len(payload) < expected:
        raise TruncatedPayload(f"expected {expected} bytes for {channels} x {frames}, got {len(payload)}")
    if len(payload) > expected:
        raise MalformedHeader(f"{len(payload) - expected} trailing bytes after a {channels} x {frames} payload")
    values = np.frombuffer(payload, dtype=WIRE_DTYPE, count=channels * frames, offset=HEADER_BYTES)
    # fresh aligned native array, independent of the byte buffer
    return Tensor(values.astype(np.float32).reshape(channels, frames))


def digest(tensor: Tensor) -> str:
    return hashlib.sha256(serialize(tensor)).hexdigest()


def load_pcm(path: Union[str, Path]) -> Tensor:
    """16-bit signed little-endian PCM -> (1, m) tensor scaled to [-1, 1)"""
    path = Path(path)
    if not path.is_file():
        raise MalformedConfig(f"PCM file not found: {path}")
    samples = np.fromfile(path, dtype="<i2")
    if samples.size == 0:
        raise MalformedConfig(f"PCM file {path} holds no samples")
    return Tensor((samples.astype(np.float32) / np.float32(32768.0)).reshape(1, -1))


def save_pcm(tensor: Tensor, path: Union[str, Path]) -> Path:
    path = Path(path)
    scaled = np.clip(np.round(tensor.data[0] * 32768.0), -32768, 32767).astype("<i2")
    scaled.tofile(path)
    return path
