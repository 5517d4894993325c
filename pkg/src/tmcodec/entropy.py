"""Byte-payload entropy stage and integer serialization helpers.

Stage tags: 0 = stored (identity), 1 = adaptive range coder (see kernels).
Tag-1 payloads carry a u32 little-endian raw-length marker so the decoder
knows how many symbols to pull; the empty input encodes to just that marker.

Signed integers headed for a payload are zigzag-mapped and varint-packed
(7 data bits per byte, high bit continues, little-endian groups).
"""

from __future__ import annotations

import struct

import numpy as np

from . import kernels

__all__ = [
    "TAG_STORED",
    "TAG_RANGE",
    "entropy_stage",
    "zigzag_encode",
    "zigzag_decode",
    "varint_encode",
    "varint_decode",
    "encode_ints",
    "decode_ints",
]

TAG_STORED = 0
TAG_RANGE = 1

_MAX_VARINT_BYTES = 10  # 64 bits / 7


def entropy_stage(data: bytes, tag: int, direction: str) -> bytes:
    """Apply or invert the entropy stage named by ``tag``."""
    if direction not in ("encode", "decode"):
        raise ValueError(f"direction must be 'encode' or 'decode', got {direction!r}")
    if tag == TAG_STORED:
        return bytes(data)
    if tag == TAG_RANGE:
        if direction == "encode":
            return struct.pack("<I", len(data)) + (kernels.rc_encode(data) if data else b"")
        if len(data) < 4:
            raise ValueError("range-coded payload truncated: missing length marker")
        (n,) = struct.unpack_from("<I", data, 0)
        if n == 0:
            return b""
        return kernels.rc_decode(data[4:], n)
    raise ValueError(f"unknown entropy stage tag {tag}")


def zigzag_encode(values: np.ndarray) -> np.ndarray:
    """int64 -> uint64 zigzag (0,-1,1,-2,... -> 0,1,2,3,...)."""
    v = np.asarray(values, dtype=np.int64)
    return ((v << 1) ^ (v >> 63)).astype(np.uint64)


def zigzag_decode(values: np.ndarray) -> np.ndarray:
    u = np.asarray(values, dtype=np.uint64)
    return ((u >> np.uint64(1)).astype(np.int64)) ^ -((u & np.uint64(1)).astype(np.int64))


def varint_encode(values: np.ndarray) -> bytes:
    """Pack a uint64 array as LEB128-style varints."""
    u = np.asarray(values, dtype=np.uint64)
    n = u.size
    if n == 0:
        return b""
    u = u.ravel()
    nbytes = np.ones(n, dtype=np.int64)
    for j in range(1, _MAX_VARINT_BYTES):
        nbytes += (u >= (np.uint64(1) << np.uint64(7 * j))).astype(np.int64)
    width = int(nbytes.max())
    parts = np.zeros((n, width), dtype=np.uint8)
    for j in range(width):
        parts[:, j] = ((u >> np.uint64(7 * j)) & np.uint64(0x7F)).astype(np.uint8)
    cols = np.arange(width, dtype=np.int64)
    cont = cols[None, :] < (nbytes - 1)[:, None]
    parts[cont] |= 0x80
    keep = cols[None, :] < nbytes[:, None]
    return parts[keep].tobytes()


def varint_decode(data: bytes, count: int) -> tuple[np.ndarray, int]:
    """Read ``count`` varints; returns (uint64 array, bytes consumed)."""
    if count == 0:
        return np.zeros(0, dtype=np.uint64), 0
    arr = np.frombuffer(data, dtype=np.uint8)
    ends = np.flatnonzero(arr < 0x80)
    if ends.size < count:
        raise ValueError(f"varint stream truncated: {ends.size} values, expected {count}")
    ends = ends[:count]
    starts = np.empty(count, dtype=np.int64)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    lengths = ends - starts + 1
    if int(lengths.max()) > _MAX_VARINT_BYTES:
        raise ValueError("varint longer than 10 bytes")
    vals = np.zeros(count, dtype=np.uint64)
    for j in range(int(lengths.max())):
        sel = lengths > j
        vals[sel] |= (arr[starts[sel] + j].astype(np.uint64) & np.uint64(0x7F)) << np.uint64(7 * j)
    return vals, int(ends[-1]) + 1


def encode_ints(values: np.ndarray) -> bytes:
    """Signed int64 array -> zigzag varint bytes."""
    return varint_encode(zigzag_encode(values))


def decode_ints(data: bytes, count: int) -> tuple[np.ndarray, int]:
    """Inverse of encode_ints; returns (int64 array, bytes consumed)."""
    u, used = varint_decode(data, count)
    return zigzag_decode(u), used
