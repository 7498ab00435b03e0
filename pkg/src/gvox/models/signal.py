"""Signal-side data models: PCM waveforms, coder frames and conditioning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gvox.errors import UnsupportedRateError

SUPPORTED_RATES = (8000, 16000)

# Parametric frame layout
LPC_ORDER = 10
LSF_BITS: tuple[int, ...] = (4, 4, 4, 4, 4, 4, 3, 3, 3, 3)
PITCH_BITS = 7
POWER_BITS = 5
VOICING_BITS = 2
FRAME_BITS = sum(LSF_BITS) + PITCH_BITS + POWER_BITS + VOICING_BITS  # 50
VOICING_LEVELS = 4

UNVOICED_PITCH = 0.0  # pitch sentinel for frames with voicing level 0

# Conditioning vector: 10 LSFs, natural-log f0, power dB / 60, 4-way voicing one-hot
CONDITIONING_DIM = LPC_ORDER + 1 + 1 + VOICING_LEVELS  # 16
CONDITIONING_LAYOUT_VERSION = 2
CONDITIONING_POWER_SCALE_DB = 60.0  # power slot spans [-1, 0] over the quantizer range
CONDITIONING_HOLD_MS = 10


@dataclass(eq=False)
class PcmSignal:
    """16-bit linear PCM waveform at 8 or 16 kHz."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise UnsupportedRateError(
                f"unsupported sample rate {self.sample_rate_hz} Hz "
                f"(supported: {', '.join(map(str, SUPPORTED_RATES))})"
            )
        samples = np.asarray(self.samples)
        if samples.dtype != np.int16:
            if samples.size and (samples.min() < -32768 or samples.max() > 32767):
                raise ValueError("sample values outside the signed 16-bit range")
            samples = samples.astype(np.int16)
        self.samples = samples.reshape(-1)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass
class FrameParams:
    """Parameters of one 20 ms frame before quantization."""

    lsf: np.ndarray  # radians, strictly increasing in (0, pi)
    pitch_hz: float  # [50, 400] when voiced, UNVOICED_PITCH otherwise
    power_db: float  # frame RMS in dBFS
    voicing: int  # 0 (unvoiced) .. 3 (fully voiced)

    @property
    def is_voiced(self) -> bool:
        return self.voicing > 0

    def conditioning_vector(self) -> np.ndarray:
        """The 16-dim conditioning layout for this frame."""
        log_f0 = float(np.log(self.pitch_hz)) if self.is_voiced and self.pitch_hz > 0 else 0.0
        one_hot = np.zeros(VOICING_LEVELS)
        one_hot[int(self.voicing)] = 1.0
        lsf = np.asarray(self.lsf, dtype=np.float64)
        power = self.power_db / CONDITIONING_POWER_SCALE_DB
        return np.concatenate([lsf, [log_f0, power], one_hot])


@dataclass(frozen=True)
class PackedFrame:
    """Quantization indices of one frame: 36 + 7 + 5 + 2 = 50 bits."""

    lsf_indices: tuple[int, ...]
    pitch_index: int
    power_index: int
    voicing: int

    def __post_init__(self) -> None:
        if len(self.lsf_indices) != LPC_ORDER:
            raise ValueError(f"expected {LPC_ORDER} LSF indices, got {len(self.lsf_indices)}")
        for index, bits in zip(self.lsf_indices, LSF_BITS):
            if not 0 <= index < (1 << bits):
                raise ValueError(f"LSF index {index} does not fit in {bits} bits")
        if not 0 <= self.pitch_index < (1 << PITCH_BITS):
            raise ValueError(f"pitch index {self.pitch_index} out of range")
        if not 0 <= self.power_index < (1 << POWER_BITS):
            raise ValueError(f"power index {self.power_index} out of range")
        if not 0 <= self.voicing < VOICING_LEVELS:
            raise ValueError(f"voicing level {self.voicing} out of range")

    def to_int(self) -> int:
        """Pack the fields MSB-first into a 50-bit integer."""
        value = 0
        for index, bits in zip(self.lsf_indices, LSF_BITS):
            value = (value << bits) | index
        value = (value << PITCH_BITS) | self.pitch_index
        value = (value << POWER_BITS) | self.power_index
        value = (value << VOICING_BITS) | self.voicing
        return value

    @classmethod
    def from_int(cls, value: int) -> PackedFrame:
        if not 0 <= value < (1 << FRAME_BITS):
            raise ValueError(f"frame value does not fit in {FRAME_BITS} bits")
        voicing = value & ((1 << VOICING_BITS) - 1)
        value >>= VOICING_BITS
        power_index = value & ((1 << POWER_BITS) - 1)
        value >>= POWER_BITS
        pitch_index = value & ((1 << PITCH_BITS) - 1)
        value >>= PITCH_BITS
        lsf_indices = []
        for bits in reversed(LSF_BITS):
            lsf_indices.append(value & ((1 << bits) - 1))
            value >>= bits
        return cls(tuple(reversed(lsf_indices)), pitch_index, power_index, voicing)


@dataclass(eq=False)
class ConditioningTrack:
    """Per-sample conditioning, stored as one vector per 10 ms interval."""

    vectors: np.ndarray  # (intervals, dim)
    samples_per_vector: int
    layout_version: int = CONDITIONING_LAYOUT_VERSION
    _rows: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1]) if self.vectors.ndim == 2 else CONDITIONING_DIM

    @property
    def num_rows(self) -> int:
        return int(self.vectors.shape[0]) * self.samples_per_vector

    def __len__(self) -> int:
        return self.num_rows

    @property
    def rows(self) -> np.ndarray:
        """Dense (samples, dim) matrix: each vector repeated over its interval."""
        if self._rows is None:
            self._rows = np.repeat(self.vectors, self.samples_per_vector, axis=0)
        return self._rows

    def to_bytes(self) -> bytes:
        header = np.array(
            [self.layout_version, self.samples_per_vector, *self.vectors.shape], dtype="<u4"
        )
        return header.tobytes() + np.ascontiguousarray(self.vectors, dtype="<f8").tobytes()
