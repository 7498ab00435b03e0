"""Network weights file: header, architecture block, float64 tensors, CRC32.

Layout::

    "GVOXNN01"  u32le version
    u32le stacks, layers_per_stack, residual, skip, conditioning_dim, alphabet
    little-endian float64 tensors in declared order
    u32le CRC32 of everything above
"""

from __future__ import annotations

import hashlib
import logging
import zlib
from pathlib import Path

import construct
import numpy as np

from gvox.errors import (
    BadMagicError,
    ChecksumError,
    StorageError,
    TruncatedStreamError,
    VersionMismatchError,
)
from gvox.models.network import WEIGHTS_VERSION, Architecture, ModelWeights

logger = logging.getLogger(__name__)

MAGIC = b"GVOXNN01"

header_struct = construct.Struct(
    "magic" / construct.Bytes(8),
    "version" / construct.Int32ul,
    "stacks" / construct.Int32ul,
    "layers_per_stack" / construct.Int32ul,
    "residual_channels" / construct.Int32ul,
    "skip_channels" / construct.Int32ul,
    "conditioning_dim" / construct.Int32ul,
    "alphabet_size" / construct.Int32ul,
)
HEADER_SIZE = header_struct.sizeof()
CRC_SIZE = 4


def init_weights(
    architecture: Architecture, rng: np.random.Generator, zero_head: bool = True
) -> ModelWeights:
    """Scaled Gaussian initialisation.

    With ``zero_head`` the output projection and bias start at zero, so the
    untrained network predicts the uniform distribution.
    """
    params: dict[str, np.ndarray] = {}
    for name, shape in architecture.parameter_shapes():
        if name.endswith("_b") or name.endswith("_b1") or name.endswith("_b2"):
            params[name] = np.zeros(shape)
        elif name == "embed":
            params[name] = rng.normal(0.0, 0.5, size=shape)
        else:
            fan_in = int(np.prod(shape[:-1]))
            params[name] = rng.normal(0.0, 1.0 / np.sqrt(max(fan_in, 1)), size=shape)
    if zero_head:
        params["head_w2"] = np.zeros_like(params["head_w2"])
        params["head_b2"] = np.zeros_like(params["head_b2"])
    return ModelWeights(architecture, params)


def save_weights(weights: ModelWeights) -> bytes:
    arch = weights.architecture
    header = header_struct.build(
        {
            "magic": MAGIC,
            "version": weights.version,
            "stacks": arch.stacks,
            "layers_per_stack": arch.layers_per_stack,
            "residual_channels": arch.residual_channels,
            "skip_channels": arch.skip_channels,
            "conditioning_dim": arch.conditioning_dim,
            "alphabet_size": arch.alphabet_size,
        }
    )
    body = b"".join(
        np.ascontiguousarray(weights[name], dtype="<f8").tobytes()
        for name, _ in arch.parameter_shapes()
    )
    data = header + body
    return data + construct.Int32ul.build(zlib.crc32(data))


def load_weights(data: bytes, path: str | None = None) -> ModelWeights:
    """Parse and verify a weights blob; the checksum is checked before anything else."""
    if len(data) < HEADER_SIZE + CRC_SIZE:
        raise TruncatedStreamError(HEADER_SIZE + CRC_SIZE, len(data), path=path)
    stored = construct.Int32ul.parse(data[-CRC_SIZE:])
    if zlib.crc32(data[:-CRC_SIZE]) != stored:
        raise ChecksumError("weights checksum mismatch (file corrupted)", path=path)

    header = header_struct.parse(data[:HEADER_SIZE])
    if header.magic != MAGIC:
        raise BadMagicError(f"not a weights file (magic {header.magic!r})", path=path)
    if header.version != WEIGHTS_VERSION:
        raise VersionMismatchError(
            f"weights version {header.version}, expected {WEIGHTS_VERSION}", path=path
        )
    arch = Architecture(
        stacks=header.stacks,
        layers_per_stack=header.layers_per_stack,
        residual_channels=header.residual_channels,
        skip_channels=header.skip_channels,
        conditioning_dim=header.conditioning_dim,
        alphabet_size=header.alphabet_size,
    )
    shapes = arch.parameter_shapes()
    expected = HEADER_SIZE + 8 * sum(int(np.prod(s)) for _, s in shapes) + CRC_SIZE
    if len(data) != expected:
        raise TruncatedStreamError(expected, len(data), path=path)

    params = {}
    offset = HEADER_SIZE
    for name, shape in shapes:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += 8 * count
    return ModelWeights(arch, {k: v.astype(np.float64) for k, v in params.items()})


def weights_fingerprint(weights: ModelWeights) -> bytes:
    return hashlib.sha256(save_weights(weights)).digest()


def read_weights(path: str | Path) -> ModelWeights:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read weights: {e}", path=str(path)) from e
    weights = load_weights(data, path=str(path))
    logger.info(f"Loaded {weights.num_parameters} parameters from {path}")
    return weights


def write_weights(weights: ModelWeights, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_bytes(save_weights(weights))
    except OSError as e:
        raise StorageError(f"cannot write weights: {e}", path=str(path)) from e
    logger.info(f"Wrote {weights.num_parameters} parameters to {path}")
