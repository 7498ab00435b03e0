"""Sample-domain primitives: WAV I/O, G.711 mu-law, resampling, framing, silence."""

from __future__ import annotations

import logging
import warnings
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

from gvox.errors import (
    MalformedHeaderError,
    StorageError,
    UnsupportedChannelsError,
    UnsupportedFormatError,
    UnsupportedRateError,
    UnsupportedResampleError,
)
from gvox.models.signal import SUPPORTED_RATES, PcmSignal

logger = logging.getLogger(__name__)

# G.711 mu-law on 14-bit magnitudes (Sun/CCITT reference construction)
MULAW_BIAS = 33
MULAW_CLIP = 8159
MULAW_SEGMENT_ENDS = np.array([0x3F, 0x7F, 0xFF, 0x1FF, 0x3FF, 0x7FF, 0xFFF, 0x1FFF])
MULAW_ZERO = 0xFF  # code of linear 0
MULAW_NEGATIVE_ZERO = 0x7F  # decodes to 0, never produced by the encoder

# Resampler: linear-phase Kaiser windowed sinc, 48 taps per polyphase branch
RESAMPLER_TAPS = 97
RESAMPLER_CUTOFF = 0.475  # fraction of the 16 kHz Nyquist
RESAMPLER_BETA = 8.0

DEFAULT_SILENCE_DB = -40.0
DEFAULT_SILENCE_FRAME_MS = 20


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------


def read_wav(path: str | Path) -> PcmSignal:
    """Read a 16-bit mono PCM WAV at 8 or 16 kHz, samples untouched."""
    path = Path(path)
    if not path.exists():
        raise StorageError(f"no such file: {path}", path=str(path))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.io.wavfile.WavFileWarning)
            rate, data = scipy.io.wavfile.read(path)
    except (ValueError, EOFError) as e:
        raise MalformedHeaderError(f"not a readable RIFF/WAVE file: {e}", path=str(path)) from e
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e}", path=str(path)) from e

    if data.ndim != 1:
        raise UnsupportedChannelsError(
            f"expected mono audio, got {data.shape[1]} channels", path=str(path)
        )
    if data.dtype != np.int16:
        raise UnsupportedFormatError(
            f"expected 16-bit PCM samples, got {data.dtype}", path=str(path)
        )
    if rate not in SUPPORTED_RATES:
        raise UnsupportedRateError(f"unsupported sample rate {rate} Hz", path=str(path))

    logger.debug(f"Read {data.size} samples at {rate} Hz from {path}")
    return PcmSignal(data.copy(), int(rate))


def write_wav(signal: PcmSignal, path: str | Path) -> None:
    """Write a signal as 16-bit mono PCM WAV."""
    path = Path(path)
    try:
        scipy.io.wavfile.write(path, signal.sample_rate_hz, signal.samples.astype(np.int16))
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}", path=str(path)) from e
    logger.debug(f"Wrote {len(signal)} samples to {path}")


# ---------------------------------------------------------------------------
# mu-law
# ---------------------------------------------------------------------------


def _encode_linear(samples: np.ndarray) -> np.ndarray:
    pcm = np.asarray(samples, dtype=np.int32) >> 2
    negative = pcm < 0
    mask = np.where(negative, 0x7F, 0xFF)
    magnitude = np.minimum(np.abs(pcm), MULAW_CLIP) + MULAW_BIAS
    segment = np.searchsorted(MULAW_SEGMENT_ENDS, magnitude, side="left")
    mantissa = (magnitude >> np.minimum(segment + 1, 31)) & 0x0F
    code = np.where(segment >= 8, 0x7F, (np.minimum(segment, 7) << 4) | mantissa)
    return (code ^ mask).astype(np.uint8)


def _decode_codes(codes: np.ndarray) -> np.ndarray:
    u = ~np.asarray(codes, dtype=np.int32) & 0xFF
    t = ((u & 0x0F) << 3) + 0x84
    t <<= (u & 0x70) >> 4
    return np.where(u & 0x80, 0x84 - t, t - 0x84).astype(np.int16)


# Full tables: 65536 linear inputs (offset by 32768) and 256 codes
_ENCODE_TABLE = _encode_linear(np.arange(-32768, 32768))
_DECODE_TABLE = _decode_codes(np.arange(256))


def mulaw_encode(sample: int) -> int:
    """G.711 mu-law code of one 16-bit linear sample."""
    return int(_ENCODE_TABLE[int(sample) + 32768])


def mulaw_decode(code: int) -> int:
    """G.711 reconstruction level of one mu-law code."""
    return int(_DECODE_TABLE[int(code) & 0xFF])


def mulaw_encode_array(samples: np.ndarray) -> np.ndarray:
    return _ENCODE_TABLE[np.asarray(samples, dtype=np.int32) + 32768]


def mulaw_decode_array(codes: np.ndarray) -> np.ndarray:
    return _DECODE_TABLE[np.asarray(codes, dtype=np.intp)]


def mulaw_transcode(signal: PcmSignal) -> PcmSignal:
    """Per-sample mu-law quantize/reconstruct, the reference waveform coder output."""
    return PcmSignal(mulaw_decode_array(mulaw_encode_array(signal.samples)), signal.sample_rate_hz)


def decode_table() -> np.ndarray:
    return _DECODE_TABLE.copy()


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def resampler_filter() -> np.ndarray:
    """Unity-DC-gain lowpass prototype shared by both conversion directions."""
    return scipy.signal.firwin(
        RESAMPLER_TAPS, RESAMPLER_CUTOFF, window=("kaiser", RESAMPLER_BETA)
    )


def resample(signal: PcmSignal, target_rate: int) -> PcmSignal:
    """Convert between 8 kHz and 16 kHz with a linear-phase polyphase FIR."""
    source_rate = signal.sample_rate_hz
    if source_rate == target_rate:
        return PcmSignal(signal.samples.copy(), source_rate)
    if (source_rate, target_rate) == (8000, 16000):
        up, down = 2, 1
    elif (source_rate, target_rate) == (16000, 8000):
        up, down = 1, 2
    else:
        raise UnsupportedResampleError(f"cannot resample {source_rate} Hz -> {target_rate} Hz")

    if len(signal) == 0:
        return PcmSignal(np.zeros(0, dtype=np.int16), target_rate)

    x = signal.samples.astype(np.float64)
    y = scipy.signal.resample_poly(x, up, down, window=resampler_filter())
    out = np.clip(np.rint(y), -32768, 32767).astype(np.int16)
    return PcmSignal(out, target_rate)


# ---------------------------------------------------------------------------
# Framing and silence
# ---------------------------------------------------------------------------


def frame_signal(samples: np.ndarray, frame_len: int) -> np.ndarray:
    """Split into (frames, frame_len), zero-padding the last partial frame."""
    n_frames = -(-samples.size // frame_len)
    padded = np.zeros(n_frames * frame_len, dtype=samples.dtype)
    padded[: samples.size] = samples
    return padded.reshape(n_frames, frame_len)


def rms_dbfs(samples: np.ndarray) -> float:
    """RMS level relative to full scale (32768); -inf for silence."""
    if samples.size == 0:
        return float("-inf")
    rms = np.sqrt(np.mean(np.square(samples.astype(np.float64))))
    if rms == 0.0:
        return float("-inf")
    return float(20.0 * np.log10(rms / 32768.0))


def detect_silence(
    signal: PcmSignal,
    frame_ms: int = DEFAULT_SILENCE_FRAME_MS,
    threshold_db: float = DEFAULT_SILENCE_DB,
) -> np.ndarray:
    """Per-frame mask, True where the frame RMS is below ``threshold_db`` dBFS.

    The last frame may be partial; its RMS is taken over the samples present.
    """
    if frame_ms <= 0:
        raise ValueError("frame_ms must be positive")
    frame_len = signal.sample_rate_hz * frame_ms // 1000
    n_frames = -(-len(signal) // frame_len)
    mask = np.zeros(n_frames, dtype=bool)
    for i in range(n_frames):
        chunk = signal.samples[i * frame_len : (i + 1) * frame_len]
        mask[i] = rms_dbfs(chunk) < threshold_db
    return mask


def silence_sample_mask(
    signal: PcmSignal,
    frame_ms: int = DEFAULT_SILENCE_FRAME_MS,
    threshold_db: float = DEFAULT_SILENCE_DB,
) -> np.ndarray:
    """``detect_silence`` expanded to one flag per sample."""
    frame_len = signal.sample_rate_hz * frame_ms // 1000
    frames = detect_silence(signal, frame_ms, threshold_db)
    return np.repeat(frames, frame_len)[: len(signal)]
