"""Closed-loop waveform coder.

Each sample is mu-law quantized, entropy coded under the model's predicted
distribution, and the quantized value (never the input) is fed back into the
model. The decoder repeats the same model calls and so reproduces the
encoder's distributions exactly.

Container::

    "GVOXWF01"  u32le version  [u16le levels, version 2 only]
    u32le sample count  u32le sample rate  32-byte model fingerprint
    u32le length + parametric bitstream
    u32le length + arithmetic-coded payload
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import construct
import numpy as np

from gvox.core.arithmetic_coder import ArithmeticDecoder, ArithmeticEncoder, quantize_pmf
from gvox.core.bitstream import pack_stream, unpack_stream
from gvox.core.conditional_model import ConditionalModel, entropy_bits
from gvox.core.parametric_encoder import conditioning_from_packed
from gvox.core.signal_io import (
    DEFAULT_SILENCE_DB,
    DEFAULT_SILENCE_FRAME_MS,
    mulaw_decode_array,
    mulaw_encode_array,
    silence_sample_mask,
)
from gvox.errors import (
    AlignmentError,
    BadMagicError,
    ChecksumError,
    StreamUnderrunError,
    TruncatedStreamError,
    VersionMismatchError,
)
from gvox.models.rates import ALPHABET_SIZE, InfoTrace, RateReport
from gvox.models.signal import ConditioningTrack, PackedFrame, PcmSignal

logger = logging.getLogger(__name__)

MAGIC = b"GVOXWF01"
FINGERPRINT_SIZE = 32

prefix_struct = construct.Struct("magic" / construct.Bytes(8), "version" / construct.Int32ul)
body_v1 = construct.Struct(
    "sample_count" / construct.Int32ul,
    "sample_rate" / construct.Int32ul,
    "fingerprint" / construct.Bytes(FINGERPRINT_SIZE),
)
body_v2 = construct.Struct(
    "levels" / construct.Int16ul,
    "sample_count" / construct.Int32ul,
    "sample_rate" / construct.Int32ul,
    "fingerprint" / construct.Bytes(FINGERPRINT_SIZE),
)
BODIES = {1: body_v1, 2: body_v2}
length_field = construct.Int32ul


class MuLawQuantizer:
    """Q/Z pair over ``levels`` groups of adjacent mu-law codes.

    With 256 levels the index is the mu-law code itself. With fewer, codes are
    ordered by amplitude and split into equal groups; a group reconstructs to
    its centre code and its probability is the summed code probabilities.
    """

    def __init__(self, levels: int = ALPHABET_SIZE):
        if levels < 2 or levels > ALPHABET_SIZE or levels & (levels - 1):
            raise ValueError(f"levels must be a power of two in [2, 256], got {levels}")
        self.levels = levels
        if levels == ALPHABET_SIZE:
            self.group_of_code = np.arange(ALPHABET_SIZE)
            self.center_code = np.arange(ALPHABET_SIZE)
        else:
            # amplitude order: 0x00 .. 0x7F (negative), then 0xFF .. 0x80 (positive)
            ordered = np.concatenate([np.arange(128), np.arange(255, 127, -1)])
            size = ALPHABET_SIZE // levels
            self.group_of_code = np.empty(ALPHABET_SIZE, dtype=np.int64)
            self.group_of_code[ordered] = np.arange(ALPHABET_SIZE) // size
            self.center_code = ordered[np.arange(levels) * size + size // 2]

    @property
    def is_plain(self) -> bool:
        return self.levels == ALPHABET_SIZE

    def quantize(self, samples: np.ndarray) -> np.ndarray:
        """Q: linear samples to indices."""
        return self.group_of_code[mulaw_encode_array(samples)]

    def reconstruct(self, indices: np.ndarray) -> np.ndarray:
        """Z: indices to linear reconstruction levels."""
        return mulaw_decode_array(self.center_code[indices])

    def group(self, probs: np.ndarray) -> np.ndarray:
        if self.is_plain:
            return probs
        return np.bincount(self.group_of_code, weights=probs, minlength=self.levels)


@dataclass
class WaveformBitstream:
    sample_count: int
    sample_rate: int
    fingerprint: bytes
    parametric: bytes
    payload: bytes
    levels: int = ALPHABET_SIZE

    @property
    def version(self) -> int:
        return 1 if self.levels == ALPHABET_SIZE else 2

    def to_bytes(self) -> bytes:
        head = prefix_struct.build({"magic": MAGIC, "version": self.version})
        fields = {
            "sample_count": self.sample_count,
            "sample_rate": self.sample_rate,
            "fingerprint": self.fingerprint,
        }
        if self.version == 2:
            fields["levels"] = self.levels
        return (
            head
            + BODIES[self.version].build(fields)
            + length_field.build(len(self.parametric))
            + self.parametric
            + length_field.build(len(self.payload))
            + self.payload
        )

    @classmethod
    def from_bytes(cls, data: bytes, path: str | None = None) -> WaveformBitstream:
        prefix_size = prefix_struct.sizeof()
        if len(data) < prefix_size:
            raise TruncatedStreamError(prefix_size, len(data), path=path)
        prefix = prefix_struct.parse(data[:prefix_size])
        if prefix.magic != MAGIC:
            raise BadMagicError(f"not a waveform bitstream (magic {prefix.magic!r})", path=path)
        body_struct = BODIES.get(prefix.version)
        if body_struct is None:
            raise VersionMismatchError(
                f"waveform container version {prefix.version}, expected 1 or 2", path=path
            )
        offset = prefix_size + body_struct.sizeof()
        if len(data) < offset:
            raise TruncatedStreamError(offset, len(data), path=path)
        body = body_struct.parse(data[prefix_size:offset])

        sections = []
        for _ in range(2):
            if len(data) < offset + 4:
                raise TruncatedStreamError(offset + 4, len(data), path=path)
            size = length_field.parse(data[offset : offset + 4])
            offset += 4
            if len(data) < offset + size:
                raise TruncatedStreamError(offset + size, len(data), path=path)
            sections.append(bytes(data[offset : offset + size]))
            offset += size

        return cls(
            sample_count=body.sample_count,
            sample_rate=body.sample_rate,
            fingerprint=bytes(body.fingerprint),
            parametric=sections[0],
            payload=sections[1],
            levels=body.levels if prefix.version == 2 else ALPHABET_SIZE,
        )


@dataclass
class WaveformEncoding:
    bitstream: WaveformBitstream
    report: RateReport
    trace: InfoTrace
    conditioning: ConditioningTrack
    reconstruction: PcmSignal


@dataclass
class WaveformDecoding:
    signal: PcmSignal
    conditioning: ConditioningTrack


def _conditioning_rows(
    n_samples: int, sample_rate: int, frames: list[PackedFrame]
) -> tuple[ConditioningTrack, np.ndarray]:
    frame_len = sample_rate // 50
    expected = -(-n_samples // frame_len)
    if len(frames) != expected:
        raise AlignmentError(
            f"{len(frames)} frames do not cover {n_samples} samples "
            f"(expected {expected} frames of {frame_len})"
        )
    track = conditioning_from_packed(frames, sample_rate)
    return track, track.rows[:n_samples]


def _silence(signal: PcmSignal, silence_db: float | None, frame_ms: int) -> np.ndarray:
    if silence_db is None:
        return np.zeros(len(signal), dtype=bool)
    return silence_sample_mask(signal, frame_ms, silence_db)


def quantization_snr(signal: PcmSignal, reconstruction: np.ndarray) -> float | None:
    """SNR of the reconstruction in dB; None for an all-zero input."""
    x = signal.samples.astype(np.float64)
    power = float(np.sum(x * x))
    if power == 0.0:
        return None
    noise = float(np.sum((x - reconstruction.astype(np.float64)) ** 2))
    return float("inf") if noise == 0.0 else float(10.0 * np.log10(power / noise))


def encode_waveform(
    signal: PcmSignal,
    frames: list[PackedFrame],
    model: ConditionalModel,
    levels: int = ALPHABET_SIZE,
    silence_db: float | None = DEFAULT_SILENCE_DB,
    silence_frame_ms: int = DEFAULT_SILENCE_FRAME_MS,
) -> WaveformEncoding:
    """Quantize, entropy code and feed back every sample."""
    quantizer = MuLawQuantizer(levels)
    n = len(signal)
    track, rows = _conditioning_rows(n, signal.sample_rate_hz, frames)
    indices = quantizer.quantize(signal.samples)
    fed_back = quantizer.center_code[indices]

    encoder = ArithmeticEncoder()
    state = model.initial_state()
    h = np.empty(n)
    r = np.empty(n)
    for i in range(n):
        probs = quantizer.group(model.next_distribution(state, rows[i]).probs)
        k = int(indices[i])
        encoder.encode_symbol(k, quantize_pmf(probs))
        h[i] = entropy_bits(probs)
        r[i] = -np.log2(probs[k])
        model.advance(state, int(fed_back[i]))
    payload = encoder.finish()

    reconstruction = quantizer.reconstruct(indices)
    trace = InfoTrace(h, r, _silence(signal, silence_db, silence_frame_ms))
    report = RateReport.from_trace(
        trace,
        signal.sample_rate_hz,
        payload_bits=8 * len(payload),
        quantizer_levels=levels,
        snr_db=quantization_snr(signal, reconstruction),
    )
    bitstream = WaveformBitstream(
        sample_count=n,
        sample_rate=signal.sample_rate_hz,
        fingerprint=model.fingerprint(),
        parametric=pack_stream(frames),
        payload=payload,
        levels=levels,
    )
    logger.info(
        f"Encoded {n} samples into {len(payload)} payload bytes "
        f"(R {report.r:.3f}, H {report.h_bar:.3f} bits/sample)"
    )
    return WaveformEncoding(
        bitstream, report, trace, track, PcmSignal(reconstruction, signal.sample_rate_hz)
    )


def decode_waveform(
    bitstream: WaveformBitstream | bytes,
    model: ConditionalModel,
    path: str | None = None,
) -> WaveformDecoding:
    """Replay the encoder's model calls to recover the quantized waveform."""
    if isinstance(bitstream, (bytes, bytearray)):
        bitstream = WaveformBitstream.from_bytes(bytes(bitstream), path=path)
    if bitstream.fingerprint != model.fingerprint():
        raise ChecksumError(
            "model fingerprint does not match the one the stream was encoded with", path=path
        )
    quantizer = MuLawQuantizer(bitstream.levels)
    frames = unpack_stream(bitstream.parametric, path=path)
    n = bitstream.sample_count
    track, rows = _conditioning_rows(n, bitstream.sample_rate, frames)

    decoder = ArithmeticDecoder(bitstream.payload)
    state = model.initial_state()
    indices = np.empty(n, dtype=np.int64)
    for i in range(n):
        probs = quantizer.group(model.next_distribution(state, rows[i]).probs)
        try:
            k = decoder.decode_symbol(quantize_pmf(probs))
        except StreamUnderrunError as e:
            raise StreamUnderrunError(sample_index=i, path=path) from e
        indices[i] = k
        model.advance(state, int(quantizer.center_code[k]))
    logger.info(f"Decoded {n} samples")
    signal = PcmSignal(quantizer.reconstruct(indices), bitstream.sample_rate)
    return WaveformDecoding(signal, track)


def rate_report(
    signal: PcmSignal,
    frames: list[PackedFrame],
    model: ConditionalModel,
    levels: int = ALPHABET_SIZE,
    silence_db: float | None = DEFAULT_SILENCE_DB,
    silence_frame_ms: int = DEFAULT_SILENCE_FRAME_MS,
) -> tuple[RateReport, InfoTrace]:
    """Average entropy and ideal code length without producing a bitstream."""
    quantizer = MuLawQuantizer(levels)
    n = len(signal)
    _, rows = _conditioning_rows(n, signal.sample_rate_hz, frames)
    indices = quantizer.quantize(signal.samples)
    if quantizer.is_plain:
        h, r = model.score(indices, rows)
    else:
        h = np.empty(n)
        r = np.empty(n)
        state = model.initial_state()
        for i in range(n):
            probs = quantizer.group(model.next_distribution(state, rows[i]).probs)
            h[i] = entropy_bits(probs)
            r[i] = -np.log2(probs[indices[i]])
            model.advance(state, int(quantizer.center_code[indices[i]]))
    reconstruction = quantizer.reconstruct(indices)
    trace = InfoTrace(h, r, _silence(signal, silence_db, silence_frame_ms))
    report = RateReport.from_trace(
        trace,
        signal.sample_rate_hz,
        quantizer_levels=levels,
        snr_db=quantization_snr(signal, reconstruction),
    )
    return report, trace
