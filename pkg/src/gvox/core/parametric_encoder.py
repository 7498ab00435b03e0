"""Low-complexity parametric encoder: analysis, quantization and conditioning.

Works on 20 ms frames of 8 kHz speech. Each frame yields 10 LSFs, a pitch
estimate, the frame power and a 4-level voicing decision, quantized to
36 + 7 + 5 + 2 = 50 bits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from gvox.core import lpc
from gvox.core.signal_io import frame_signal, resample, rms_dbfs
from gvox.models.signal import (
    CONDITIONING_DIM,
    CONDITIONING_HOLD_MS,
    CONDITIONING_LAYOUT_VERSION,
    LPC_ORDER,
    LSF_BITS,
    PITCH_BITS,
    POWER_BITS,
    UNVOICED_PITCH,
    ConditioningTrack,
    FrameParams,
    PackedFrame,
    PcmSignal,
)

logger = logging.getLogger(__name__)

ANALYSIS_RATE = 8000
FRAME_LEN = 160  # 20 ms at 8 kHz
LPC_WINDOW_LEN = 200  # frame plus 5 ms of left context
PITCH_HISTORY = 160  # left context for lags up to 160
MIN_LAG, MAX_LAG = 20, 160  # 400 Hz .. 50 Hz

PITCH_MIN_HZ, PITCH_MAX_HZ = 50.0, 400.0
POWER_MIN_DB, POWER_MAX_DB = -60.0, 0.0
LSF_MIN_SEPARATION = 0.008  # radians

# Per-coefficient uniform LSF quantizer ranges in Hz at 8 kHz
LSF_RANGES_HZ: tuple[tuple[float, float], ...] = (
    (100.0, 800.0),
    (200.0, 1100.0),
    (400.0, 1500.0),
    (600.0, 1900.0),
    (900.0, 2300.0),
    (1200.0, 2700.0),
    (1600.0, 3000.0),
    (2000.0, 3300.0),
    (2400.0, 3600.0),
    (2800.0, 3850.0),
)
LSF_RANGES = np.array(LSF_RANGES_HZ) * 2.0 * np.pi / ANALYSIS_RATE

# Voicing: normalized correlation thresholds at the pitch lag
VOICING_LOW_BAND_HZ = 1000.0
VOICED_THRESHOLD = 0.6
STRONGLY_VOICED_THRESHOLD = 0.8
SILENT_FRAME_DBFS = -70.0


@dataclass
class EncoderStats:
    """Counters of values clamped into quantizer ranges."""

    frames: int = 0
    lsf_clamped: int = 0
    pitch_clamped: int = 0
    power_clamped: int = 0
    order_adjusted: int = 0
    per_frame_clamps: list[int] = field(default_factory=list)

    @property
    def total_clamped(self) -> int:
        return self.lsf_clamped + self.pitch_clamped + self.power_clamped


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------


def _band_filters() -> tuple[np.ndarray, np.ndarray]:
    kwargs = {"fs": ANALYSIS_RATE, "output": "sos"}
    low = scipy.signal.butter(4, VOICING_LOW_BAND_HZ, btype="lowpass", **kwargs)
    high = scipy.signal.butter(4, VOICING_LOW_BAND_HZ, btype="highpass", **kwargs)
    return low, high


_LOW_BAND, _HIGH_BAND = _band_filters()


def _normalized_correlation(buffer: np.ndarray, lag: int) -> float:
    """Correlation of the last FRAME_LEN samples with the same span ``lag`` earlier."""
    current = buffer[-FRAME_LEN:]
    past = buffer[-FRAME_LEN - lag : buffer.size - lag]
    energy = np.dot(current, current) * np.dot(past, past)
    if energy <= 0.0:
        return 0.0
    return float(np.dot(current, past) / np.sqrt(energy))


def estimate_pitch(buffer: np.ndarray) -> tuple[float, float]:
    """Pitch (Hz) and peak normalized correlation from a 320-sample buffer."""
    lags = np.arange(MIN_LAG, MAX_LAG + 1)
    corr = np.array([_normalized_correlation(buffer, int(lag)) for lag in lags])
    best = int(np.argmax(corr))
    # prefer the shortest lag whose correlation is close to the best (octave errors)
    for divisor in (4, 3, 2):
        candidate = int(round(lags[best] / divisor))
        if candidate >= MIN_LAG:
            idx = candidate - MIN_LAG
            lo, hi = max(idx - 1, 0), min(idx + 2, lags.size)
            local = lo + int(np.argmax(corr[lo:hi]))
            if corr[local] >= 0.85 * corr[best]:
                best = local
                break
    lag = float(lags[best])
    if 0 < best < lags.size - 1:
        y0, y1, y2 = corr[best - 1], corr[best], corr[best + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            lag += 0.5 * (y0 - y2) / denom
    return ANALYSIS_RATE / lag, float(corr[best])


def voicing_level(buffer: np.ndarray, pitch_hz: float) -> int:
    """Four-level voicing from low/high band correlation at the pitch lag."""
    lag = int(round(ANALYSIS_RATE / pitch_hz))
    lag = min(max(lag, MIN_LAG), MAX_LAG)
    low = scipy.signal.sosfilt(_LOW_BAND, buffer)
    high = scipy.signal.sosfilt(_HIGH_BAND, buffer)
    c_low = _normalized_correlation(low, lag)
    c_high = _normalized_correlation(high, lag)
    if c_low < VOICED_THRESHOLD:
        return 0
    level = 1
    if c_low >= STRONGLY_VOICED_THRESHOLD:
        level += 1
    if c_high >= VOICED_THRESHOLD:
        level += 1
    return level


def analyze_frame(frame: np.ndarray, history: np.ndarray | None = None) -> FrameParams:
    """Estimate the parameters of one 160-sample 8 kHz frame.

    ``history`` holds the samples preceding the frame (up to 160 are used);
    missing context is zero.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size != FRAME_LEN:
        raise ValueError(f"frame must have {FRAME_LEN} samples, got {frame.size}")
    context = np.zeros(PITCH_HISTORY)
    if history is not None and len(history):
        tail = np.asarray(history, dtype=np.float64)[-PITCH_HISTORY:]
        context[PITCH_HISTORY - tail.size :] = tail
    buffer = np.concatenate([context, frame])

    power_db = rms_dbfs(frame)
    if not np.isfinite(power_db) or power_db < SILENT_FRAME_DBFS:
        return FrameParams(
            lsf=lpc.flat_lsf(LPC_ORDER),
            pitch_hz=UNVOICED_PITCH,
            power_db=POWER_MIN_DB,
            voicing=0,
        )

    scaled = buffer / 32768.0
    a, _ = lpc.lpc_analysis(scaled[-LPC_WINDOW_LEN:], LPC_ORDER, ANALYSIS_RATE)
    try:
        lsf = lpc.lpc_to_lsf(a)
    except ValueError:
        logger.debug("LSF conversion failed, using flat spectrum")
        lsf = lpc.flat_lsf(LPC_ORDER)
    lsf = enforce_separation(lsf)

    pitch_hz, _ = estimate_pitch(scaled)
    voicing = voicing_level(scaled, pitch_hz)
    if voicing == 0:
        pitch_hz = UNVOICED_PITCH
    return FrameParams(lsf=lsf, pitch_hz=pitch_hz, power_db=power_db, voicing=voicing)


def analyze_signal(signal: PcmSignal) -> list[FrameParams]:
    """Analyze a whole signal; 16 kHz input is first decimated to 8 kHz."""
    if signal.sample_rate_hz != ANALYSIS_RATE:
        signal = resample(signal, ANALYSIS_RATE)
    samples = signal.samples.astype(np.float64)
    frames = frame_signal(samples, FRAME_LEN)
    params = []
    for i, frame in enumerate(frames):
        start = i * FRAME_LEN
        history = samples[max(0, start - PITCH_HISTORY) : start]
        params.append(analyze_frame(frame, history))
    logger.info(f"Analyzed {len(params)} frames ({signal.duration_s:.2f} s)")
    return params


# ---------------------------------------------------------------------------
# Quantization
# ---------------------------------------------------------------------------


def _lsf_steps() -> np.ndarray:
    levels = np.array([1 << bits for bits in LSF_BITS])
    return (LSF_RANGES[:, 1] - LSF_RANGES[:, 0]) / levels


LSF_STEPS = _lsf_steps()
_LOG_PITCH_SPAN = np.log(PITCH_MAX_HZ / PITCH_MIN_HZ)
_PITCH_LEVELS = (1 << PITCH_BITS) - 1
_POWER_LEVELS = (1 << POWER_BITS) - 1


def lsf_centers(indices: np.ndarray) -> np.ndarray:
    return LSF_RANGES[:, 0] + (np.asarray(indices) + 0.5) * LSF_STEPS


def _order_indices(indices: np.ndarray) -> int:
    """Raise indices until reconstructed LSFs keep the minimum separation.

    A single forward pass suffices: the top cell centre of every coefficient
    lies more than LSF_MIN_SEPARATION above the previous one. Returns the
    number of one-cell moves.
    """
    max_index = np.array([(1 << bits) - 1 for bits in LSF_BITS])
    moves = 0
    for k in range(1, LPC_ORDER):
        floor = lsf_centers(indices)[k - 1] + LSF_MIN_SEPARATION
        while indices[k] < max_index[k] and lsf_centers(indices)[k] < floor:
            indices[k] += 1
            moves += 1
    return moves


def quantize_frame(params: FrameParams, stats: EncoderStats | None = None) -> PackedFrame:
    """Scalar-quantize one frame to 50 bits; out-of-range values are clamped."""
    stats = stats if stats is not None else EncoderStats()
    clamps = 0

    lsf = np.asarray(params.lsf, dtype=np.float64)
    max_index = np.array([(1 << bits) - 1 for bits in LSF_BITS])
    raw = np.floor((lsf - LSF_RANGES[:, 0]) / LSF_STEPS).astype(int)
    lsf_indices = np.clip(raw, 0, max_index)
    lsf_clamped = int(np.count_nonzero(lsf_indices != raw))
    moves = _order_indices(lsf_indices)
    stats.lsf_clamped += lsf_clamped
    stats.order_adjusted += moves
    clamps += lsf_clamped

    pitch = params.pitch_hz if params.is_voiced else PITCH_MIN_HZ
    clipped = min(max(pitch, PITCH_MIN_HZ), PITCH_MAX_HZ)
    if clipped != pitch:
        stats.pitch_clamped += 1
        clamps += 1
    pitch_index = int(round(np.log(clipped / PITCH_MIN_HZ) / _LOG_PITCH_SPAN * _PITCH_LEVELS))

    power = params.power_db if np.isfinite(params.power_db) else POWER_MIN_DB
    clipped = min(max(power, POWER_MIN_DB), POWER_MAX_DB)
    if clipped != params.power_db:
        stats.power_clamped += 1
        clamps += 1
    power_index = int(
        round((clipped - POWER_MIN_DB) / (POWER_MAX_DB - POWER_MIN_DB) * _POWER_LEVELS)
    )

    stats.frames += 1
    stats.per_frame_clamps.append(clamps)
    if clamps:
        logger.debug(f"Frame {stats.frames - 1}: {clamps} parameter(s) clamped")
    return PackedFrame(
        lsf_indices=tuple(int(i) for i in lsf_indices),
        pitch_index=pitch_index,
        power_index=power_index,
        voicing=int(params.voicing),
    )


def enforce_separation(lsf: np.ndarray, delta: float = LSF_MIN_SEPARATION) -> np.ndarray:
    """Make LSFs strictly increasing with at least ``delta`` spacing inside (0, pi)."""
    out = np.sort(np.asarray(lsf, dtype=np.float64))
    n = out.size
    out = np.clip(out, delta, np.pi - delta)
    for k in range(1, n):
        if out[k] < out[k - 1] + delta:
            out[k] = out[k - 1] + delta
    # pushed past the top: pull back down from the end
    if out[-1] > np.pi - delta:
        out[-1] = np.pi - delta
        for k in range(n - 2, -1, -1):
            if out[k] > out[k + 1] - delta:
                out[k] = out[k + 1] - delta
    return out


def dequantize_frame(packed: PackedFrame) -> FrameParams:
    """Reconstruct parameters at quantizer levels; LSF order is repaired."""
    lsf = enforce_separation(lsf_centers(np.array(packed.lsf_indices)))
    if packed.voicing > 0:
        pitch = float(PITCH_MIN_HZ * np.exp(packed.pitch_index / _PITCH_LEVELS * _LOG_PITCH_SPAN))
    else:
        pitch = UNVOICED_PITCH
    power = POWER_MIN_DB + packed.power_index / _POWER_LEVELS * (POWER_MAX_DB - POWER_MIN_DB)
    return FrameParams(lsf=lsf, pitch_hz=pitch, power_db=float(power), voicing=packed.voicing)


def encode_signal(
    signal: PcmSignal, stats: EncoderStats | None = None
) -> list[PackedFrame]:
    """Analyze and quantize a whole signal."""
    stats = stats if stats is not None else EncoderStats()
    packed = [quantize_frame(p, stats) for p in analyze_signal(signal)]
    if stats.total_clamped:
        logger.warning(f"{stats.total_clamped} parameter value(s) clamped to quantizer ranges")
    return packed


# ---------------------------------------------------------------------------
# Conditioning
# ---------------------------------------------------------------------------


def build_conditioning(frames: list[FrameParams], output_rate_hz: int) -> ConditioningTrack:
    """Two 10 ms vectors per frame: the frame value and the midpoint to the next."""
    if output_rate_hz not in (8000, 16000):
        raise ValueError(f"unsupported conditioning rate {output_rate_hz} Hz")
    samples_per_vector = output_rate_hz * CONDITIONING_HOLD_MS // 1000
    if not frames:
        return ConditioningTrack(np.zeros((0, CONDITIONING_DIM)), samples_per_vector)

    values = np.stack([f.conditioning_vector() for f in frames])
    following = np.vstack([values[1:], values[-1:]])
    midpoints = 0.5 * (values + following)
    vectors = np.empty((2 * len(frames), CONDITIONING_DIM))
    vectors[0::2] = values
    vectors[1::2] = midpoints
    return ConditioningTrack(vectors, samples_per_vector, CONDITIONING_LAYOUT_VERSION)


def conditioning_from_packed(frames: list[PackedFrame], output_rate_hz: int) -> ConditioningTrack:
    """Conditioning as the decoder sees it: from dequantized parameters only."""
    return build_conditioning([dequantize_frame(f) for f in frames], output_rate_hz)
