"""Symbol distributions and rate records."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field

ALPHABET_SIZE = 256
PROB_FLOOR = 2.0**-16
MAX_SYMBOL_BITS = float(np.log2(ALPHABET_SIZE))  # 8


def floor_probs(probs: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    """Raise entries below ``floor`` to ``floor``; rescale the rest to keep unit mass.

    Repeated until no rescaled entry drops below the floor. A distribution that
    is already at or above the floor everywhere is returned unchanged.
    """
    p = np.asarray(probs, dtype=np.float64)
    p = p / p.sum()
    low = p < floor
    if not low.any():
        return p
    q = p
    for _ in range(p.size):
        free = 1.0 - floor * int(low.sum())
        rest = p[~low].sum()
        q = np.where(low, floor, p * (free / rest))
        newly_low = (q < floor) & ~low
        if not newly_low.any():
            break
        low |= newly_low
    return q


@dataclass(eq=False)
class SymbolDistribution:
    """PMF over the 256-symbol mu-law alphabet."""

    probs: np.ndarray

    @classmethod
    def floored(cls, probs: np.ndarray, floor: float = PROB_FLOOR) -> SymbolDistribution:
        return cls(floor_probs(probs, floor))

    @classmethod
    def uniform(cls) -> SymbolDistribution:
        return cls(np.full(ALPHABET_SIZE, 1.0 / ALPHABET_SIZE))

    def __len__(self) -> int:
        return int(self.probs.size)

    def prob(self, symbol: int) -> float:
        return float(self.probs[symbol])

    def is_valid(self, floor: float = PROB_FLOOR, tol: float = 1e-9) -> bool:
        return bool(abs(self.probs.sum() - 1.0) <= tol and self.probs.min() >= floor * (1 - tol))


@dataclass(eq=False)
class InfoTrace:
    """Per-sample instantaneous information.

    ``h`` is the entropy of the predicted distribution, ``r`` the code length of
    the symbol that actually occurred; both in bits.
    """

    h: np.ndarray
    r: np.ndarray
    silent: np.ndarray

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=np.float64)
        self.r = np.asarray(self.r, dtype=np.float64)
        self.silent = np.asarray(self.silent, dtype=bool)
        if not (self.h.shape == self.r.shape == self.silent.shape):
            raise ValueError("trace columns must have equal length")

    def __len__(self) -> int:
        return int(self.h.size)

    @property
    def counted(self) -> np.ndarray:
        return ~self.silent

    def mean_h(self) -> float:
        kept = self.h[self.counted]
        return float(kept.mean()) if kept.size else 0.0

    def mean_r(self) -> float:
        kept = self.r[self.counted]
        return float(kept.mean()) if kept.size else 0.0


class RateReport(BaseModel):
    """Aggregate rates in bits per sample over the non-silent samples."""

    h_bar: float = Field(ge=0.0, le=MAX_SYMBOL_BITS + 1e-9)
    r: float = Field(ge=0.0, le=16.0)
    generation_estimate: float = Field(ge=0.0, le=MAX_SYMBOL_BITS + 1e-9)
    payload_bits_per_sample: float | None = Field(default=None, ge=0.0)
    samples_counted: int = Field(ge=0)
    silence_excluded: int = Field(ge=0)
    sample_rate_hz: int = 16000
    quantizer_levels: int = ALPHABET_SIZE
    snr_db: float | None = None

    @property
    def total_samples(self) -> int:
        return self.samples_counted + self.silence_excluded

    def per_second(self, bits_per_sample: float) -> float:
        return bits_per_sample * self.sample_rate_hz

    def to_text(self) -> str:
        """Flat key-value block for CLI output."""
        lines = [
            f"h_bar = {self.h_bar:.6f}",
            f"r = {self.r:.6f}",
            f"generation_estimate = {self.generation_estimate:.6f}",
        ]
        if self.payload_bits_per_sample is not None:
            lines.append(f"payload_bits_per_sample = {self.payload_bits_per_sample:.6f}")
        lines += [
            f"samples_counted = {self.samples_counted}",
            f"silence_excluded = {self.silence_excluded}",
            f"sample_rate_hz = {self.sample_rate_hz}",
            f"quantizer_levels = {self.quantizer_levels}",
            f"r_bits_per_second = {self.per_second(self.r):.1f}",
        ]
        if self.snr_db is not None:
            lines.append(f"snr_db = {self.snr_db:.3f}")
        return "\n".join(lines)

    @classmethod
    def from_trace(
        cls,
        trace: InfoTrace,
        sample_rate_hz: int,
        payload_bits: int | None = None,
        quantizer_levels: int = ALPHABET_SIZE,
        snr_db: float | None = None,
    ) -> RateReport:
        counted = int(trace.counted.sum())
        h_bar = trace.mean_h()
        payload = None
        if payload_bits is not None:
            payload = payload_bits / len(trace) if len(trace) else 0.0
        return cls(
            h_bar=h_bar,
            r=trace.mean_r(),
            generation_estimate=h_bar,
            payload_bits_per_sample=payload,
            samples_counted=counted,
            silence_excluded=len(trace) - counted,
            sample_rate_hz=sample_rate_hz,
            quantizer_levels=quantizer_levels,
            snr_db=snr_db,
        )
