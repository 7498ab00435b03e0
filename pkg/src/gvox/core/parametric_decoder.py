"""Parametric decoding: generative synthesis and a sinusoidal fallback renderer."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gvox.core import lpc
from gvox.core.bitstream import unpack_stream
from gvox.core.conditional_model import ConditionalModel, entropy_bits, sample_symbol
from gvox.core.parametric_encoder import (
    ANALYSIS_RATE,
    FRAME_LEN,
    conditioning_from_packed,
    dequantize_frame,
)
from gvox.core.signal_io import DEFAULT_SILENCE_DB, mulaw_decode_array, silence_sample_mask
from gvox.models.rates import InfoTrace
from gvox.models.signal import FrameParams, PackedFrame, PcmSignal

logger = logging.getLogger(__name__)

OUTPUT_RATE = 16000
WARMUP_MS = 10
HOP = FRAME_LEN // 2  # 10 ms at 8 kHz
NYQUIST_HZ = ANALYSIS_RATE / 2


@dataclass
class SynthesisResult:
    signal: PcmSignal
    symbols: np.ndarray
    trace: InfoTrace | None = None

    def generation_rate(self) -> float:
        if self.trace is None:
            raise ValueError("synthesis ran without trace retention")
        return generation_rate(self.trace, self.signal.sample_rate_hz)


def synthesize(
    bitstream: bytes,
    model: ConditionalModel,
    seed: int = 0,
    temperature: float = 1.0,
    keep_trace: bool = True,
    silence_db: float | None = DEFAULT_SILENCE_DB,
    path: str | None = None,
) -> SynthesisResult:
    """Generate 16 kHz speech by sampling the model under the decoded conditioning.

    ``temperature`` only reshapes the draws. The retained trace scores each
    drawn symbol under the model's own distribution, so ``h`` and ``r`` (and
    the generation rate) describe the model, not the tempered sampler.
    """
    frames = unpack_stream(bitstream, path=path)
    track = conditioning_from_packed(frames, OUTPUT_RATE)
    rows = track.rows
    n = track.num_rows
    rng = np.random.default_rng(seed)

    state = model.initial_state()
    symbols = np.empty(n, dtype=np.int64)
    h = np.empty(n) if keep_trace else None
    r = np.empty(n) if keep_trace else None
    for i in range(n):
        dist = model.next_distribution(state, rows[i])
        symbol = sample_symbol(dist, rng, temperature)
        symbols[i] = symbol
        if keep_trace:
            h[i] = entropy_bits(dist.probs)
            r[i] = -np.log2(dist.probs[symbol])
        model.advance(state, symbol)

    signal = PcmSignal(mulaw_decode_array(symbols), OUTPUT_RATE)
    trace = None
    if keep_trace:
        if silence_db is None:
            silent = np.zeros(n, dtype=bool)
        else:
            silent = silence_sample_mask(signal, threshold_db=silence_db)
        trace = InfoTrace(h, r, silent)
    logger.info(f"Synthesized {n} samples from {len(frames)} frames (seed {seed})")
    return SynthesisResult(signal, symbols, trace)


def generation_rate(trace: InfoTrace, sample_rate_hz: int = OUTPUT_RATE) -> float:
    """Mean entropy of the sampled distributions, skipping silence and the warm-up."""
    warmup = sample_rate_hz * WARMUP_MS // 1000
    counted = trace.counted.copy()
    counted[:warmup] = False
    if not counted.any():
        return 0.0
    return float(trace.h[counted].mean())


# ---------------------------------------------------------------------------
# Sinusoidal fallback
# ---------------------------------------------------------------------------


def _harmonics(params: FrameParams, a: np.ndarray, times: np.ndarray) -> np.ndarray:
    cutoff = params.voicing / 3.0 * NYQUIST_HZ
    f0 = params.pitch_hz
    count = int(min(cutoff, NYQUIST_HZ - 1.0) // f0)
    if count < 1:
        return np.zeros(times.size)
    omegas = 2.0 * np.pi * f0 * np.arange(1, count + 1) / ANALYSIS_RATE
    amplitudes = 2.0 * lpc.envelope(a, omegas) * np.sqrt(f0 / ANALYSIS_RATE)
    # phase from absolute time so overlapping segments add coherently
    return amplitudes @ np.cos(np.outer(omegas, times))


def _shaped_noise(
    params: FrameParams, a: np.ndarray, length: int, rng: np.random.Generator
) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(length))
    freqs_hz = np.fft.rfftfreq(length, d=1.0 / ANALYSIS_RATE)
    shape = lpc.envelope(a, 2.0 * np.pi * freqs_hz / ANALYSIS_RATE)
    if params.is_voiced:
        shape = np.where(freqs_hz < params.voicing / 3.0 * NYQUIST_HZ, 0.0, shape)
    return np.fft.irfft(spectrum * shape, n=length)


def render_frames(frames: list[PackedFrame], seed: int = 0) -> PcmSignal:
    """Harmonic-plus-noise synthesis at 8 kHz, 10 ms overlap-add, per-frame power match."""
    n = len(frames) * FRAME_LEN
    if n == 0:
        return PcmSignal(np.zeros(0, dtype=np.int16), ANALYSIS_RATE)
    params = [dequantize_frame(f) for f in frames]
    coefficients = [lpc.lsf_to_lpc(p.lsf) for p in params]
    rng = np.random.default_rng(seed)
    window = np.hanning(FRAME_LEN + 1)[:-1]  # periodic: sums to one at hop FRAME_LEN / 2

    buffer = np.zeros(n + FRAME_LEN)
    intervals = 2 * len(frames)
    for j in range(intervals + 1):
        k = min(j, intervals - 1) // 2
        p, a = params[k], coefficients[k]
        start = j * HOP
        times = np.arange(start - HOP, start - HOP + FRAME_LEN, dtype=np.float64)
        segment = _shaped_noise(p, a, FRAME_LEN, rng)
        if p.is_voiced:
            segment = segment + _harmonics(p, a, times)
        buffer[start : start + FRAME_LEN] += window * segment
    out = buffer[HOP : HOP + n]

    for k, p in enumerate(params):
        chunk = out[k * FRAME_LEN : (k + 1) * FRAME_LEN]
        rms = float(np.sqrt(np.mean(chunk * chunk)))
        if rms > 0.0:
            chunk *= 32768.0 * 10.0 ** (p.power_db / 20.0) / rms
    samples = np.clip(np.rint(out), -32768, 32767).astype(np.int16)
    return PcmSignal(samples, ANALYSIS_RATE)


def render_sinusoidal(bitstream: bytes, seed: int = 0, path: str | None = None) -> PcmSignal:
    """Low-complexity decode of a parametric bitstream without any model."""
    frames = unpack_stream(bitstream, path=path)
    signal = render_frames(frames, seed)
    logger.info(f"Rendered {len(frames)} frames sinusoidally")
    return signal
