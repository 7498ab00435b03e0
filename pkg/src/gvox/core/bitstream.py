"""Parametric bitstream: header plus 50-bit frames, MSB-first.

Layout::

    "GVOXPC01"  u32le frame count  u8 mode  u8 conditioning layout version
    frame 0 bits | frame 1 bits | ... | zero padding to a byte boundary
"""

from __future__ import annotations

import logging

import construct

from gvox.errors import (
    BadMagicError,
    TruncatedStreamError,
    UnsupportedModeError,
    VersionMismatchError,
)
from gvox.models.signal import CONDITIONING_LAYOUT_VERSION, FRAME_BITS, PackedFrame

logger = logging.getLogger(__name__)

MAGIC = b"GVOXPC01"
MAGIC_PREFIX = MAGIC[:6]
MODE_PARAMETRIC = 0

header_struct = construct.Struct(
    "magic" / construct.Bytes(8),
    "frame_count" / construct.Int32ul,
    "mode" / construct.Int8ul,
    "layout_version" / construct.Int8ul,
)
HEADER_SIZE = header_struct.sizeof()  # 14


def payload_size(frame_count: int) -> int:
    return (frame_count * FRAME_BITS + 7) // 8


def pack_stream(frames: list[PackedFrame]) -> bytes:
    """Serialize frames behind a header; padding only at the very end."""
    header = header_struct.build(
        {
            "magic": MAGIC,
            "frame_count": len(frames),
            "mode": MODE_PARAMETRIC,
            "layout_version": CONDITIONING_LAYOUT_VERSION,
        }
    )
    value = 0
    for frame in frames:
        value = (value << FRAME_BITS) | frame.to_int()
    size = payload_size(len(frames))
    pad = size * 8 - len(frames) * FRAME_BITS
    payload = (value << pad).to_bytes(size, "big") if size else b""
    return header + payload


def unpack_stream(data: bytes, path: str | None = None) -> list[PackedFrame]:
    """Inverse of pack_stream; trailing bytes beyond the payload are ignored."""
    if len(data) < HEADER_SIZE:
        raise TruncatedStreamError(HEADER_SIZE, len(data), path=path)
    header = header_struct.parse(data[:HEADER_SIZE])
    if header.magic[:6] != MAGIC_PREFIX:
        raise BadMagicError(f"not a parametric bitstream (magic {header.magic!r})", path=path)
    if header.magic != MAGIC:
        raise VersionMismatchError(
            f"bitstream version {header.magic[6:].decode(errors='replace')}, expected 01",
            path=path,
        )
    if header.layout_version != CONDITIONING_LAYOUT_VERSION:
        raise VersionMismatchError(
            f"conditioning layout {header.layout_version}, "
            f"expected {CONDITIONING_LAYOUT_VERSION}",
            path=path,
        )
    if header.mode != MODE_PARAMETRIC:
        raise UnsupportedModeError(f"unknown mode id {header.mode}", path=path)

    count = header.frame_count
    size = payload_size(count)
    expected = HEADER_SIZE + size
    if len(data) < expected:
        raise TruncatedStreamError(expected, len(data), path=path)

    value = int.from_bytes(data[HEADER_SIZE:expected], "big")
    value >>= size * 8 - count * FRAME_BITS
    mask = (1 << FRAME_BITS) - 1
    frames = [
        PackedFrame.from_int((value >> (FRAME_BITS * (count - 1 - i))) & mask)
        for i in range(count)
    ]
    logger.debug(f"Unpacked {count} frames ({expected} bytes)")
    return frames
