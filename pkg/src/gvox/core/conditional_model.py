"""Conditional next-symbol models over the 256-symbol mu-law alphabet.

A model maps (symbol history, conditioning vector) to a floored
``SymbolDistribution``. Inference is incremental: ``next_distribution``
computes the distribution for the next sample, ``advance`` feeds the symbol
that was actually emitted. Both ends of a coder drive the same sequence of
calls and so stay in lockstep.
"""

from __future__ import annotations

import hashlib
import logging
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from gvox.core.signal_io import MULAW_NEGATIVE_ZERO, MULAW_ZERO, mulaw_encode_array
from gvox.errors import AlignmentError, DimensionMismatchError, EmptyCorpusError
from gvox.models.rates import ALPHABET_SIZE, InfoTrace, SymbolDistribution, floor_probs
from gvox.models.signal import CONDITIONING_DIM, LPC_ORDER, ConditioningTrack, PcmSignal

logger = logging.getLogger(__name__)

POWER_SLOT = LPC_ORDER + 1  # power_db / 60, in [-1, 0]


@dataclass
class ModelState:
    """Autoregressive state: recent symbols plus model-specific caches."""

    history: deque[int]
    caches: list = field(default_factory=list)
    staged: list | None = None
    position: int = 0

    @classmethod
    def fresh(cls, receptive_field: int) -> ModelState:
        return cls(history=deque([MULAW_ZERO] * receptive_field, maxlen=receptive_field))

    @property
    def last_symbol(self) -> int:
        return self.history[-1]


class ConditionalModel(ABC):
    """Interface shared by the network, the frequency table and the oracles."""

    receptive_field: int = 1
    conditioning_dim: int | None = None  # None accepts any vector

    def initial_state(self) -> ModelState:
        return ModelState.fresh(self.receptive_field)

    def check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if self.conditioning_dim is not None and theta.shape[-1] != self.conditioning_dim:
            raise DimensionMismatchError(
                f"conditioning vector has {theta.shape[-1]} entries, "
                f"model expects {self.conditioning_dim}"
            )
        return theta

    @abstractmethod
    def next_distribution(self, state: ModelState, theta: np.ndarray) -> SymbolDistribution:
        """Distribution of the next symbol given the state and the current theta."""

    def advance(self, state: ModelState, symbol: int) -> ModelState:
        """Feed the emitted symbol; mutates and returns ``state``."""
        state.history.append(int(symbol))
        state.position += 1
        state.staged = None
        return state

    @abstractmethod
    def fingerprint(self) -> bytes:
        """32-byte digest identifying the model parameters."""

    def score(self, symbols: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Entropy and code length (bits) of every symbol given its true history.

        Subclasses with a vectorised path override this; the default walks the
        incremental interface.
        """
        symbols = np.asarray(symbols, dtype=np.int64)
        h = np.empty(symbols.size)
        r = np.empty(symbols.size)
        state = self.initial_state()
        for i, symbol in enumerate(symbols):
            dist = self.next_distribution(state, rows[i])
            h[i] = entropy_bits(dist.probs)
            r[i] = -np.log2(dist.probs[symbol])
            self.advance(state, int(symbol))
        return h, r


def entropy_bits(probs: np.ndarray, axis: int = -1) -> np.ndarray | float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, -p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    out = terms.sum(axis=axis)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_symbol(
    dist: SymbolDistribution,
    rng: np.random.Generator,
    temperature: float = 1.0,
    size: int | None = None,
) -> int | np.ndarray:
    """Draw from ``dist ** (1 / temperature)``; temperature 0 returns the argmax."""
    probs = dist.probs
    if temperature <= 0.0:
        best = int(np.argmax(probs))
        return best if size is None else np.full(size, best, dtype=np.int64)
    if temperature != 1.0:
        with np.errstate(divide="ignore"):
            logp = np.log(probs) / temperature
        probs = np.exp(logp - logp.max())
    cdf = np.cumsum(probs)
    u = rng.random(size) * cdf[-1]
    index = np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)
    return int(index) if size is None else index.astype(np.int64)


# ---------------------------------------------------------------------------
# Alignment helpers
# ---------------------------------------------------------------------------


def aligned_rows(n_samples: int, track: ConditioningTrack) -> np.ndarray:
    """Conditioning rows for ``n_samples``; the track may exceed them by < one vector pair."""
    if track.num_rows < n_samples or track.num_rows - n_samples >= 2 * track.samples_per_vector:
        raise AlignmentError(
            f"conditioning covers {track.num_rows} samples, signal has {n_samples}"
        )
    return track.rows[:n_samples]


def signal_symbols(signal: PcmSignal) -> np.ndarray:
    return mulaw_encode_array(signal.samples).astype(np.int64)


def score_signal(
    model: ConditionalModel,
    signal: PcmSignal,
    track: ConditioningTrack,
    silent: np.ndarray | None = None,
) -> InfoTrace:
    """Per-sample entropy and code length given the true quantized history."""
    symbols = signal_symbols(signal)
    rows = aligned_rows(symbols.size, track)
    h, r = model.score(symbols, rows)
    if silent is None:
        silent = np.zeros(symbols.size, dtype=bool)
    return InfoTrace(h, r, silent)


def log_likelihood(
    model: ConditionalModel,
    signal: PcmSignal,
    track: ConditioningTrack,
    silent: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Per-sample log2 q(n_i) and its mean over non-silent samples."""
    trace = score_signal(model, signal, track, silent)
    return -trace.r, -trace.mean_r()


# ---------------------------------------------------------------------------
# Frequency-table model
# ---------------------------------------------------------------------------


class FrequencyTableModel(ConditionalModel):
    """Counts of the next symbol per (power bucket, last ``order`` symbols) context.

    Unseen contexts predict the uniform distribution.
    """

    def __init__(self, order: int = 1, power_buckets: int = 1, alpha: float = 0.0):
        if order < 0:
            raise ValueError("order must be non-negative")
        if power_buckets < 1:
            raise ValueError("power_buckets must be at least 1")
        self.order = order
        self.power_buckets = power_buckets
        self.alpha = alpha
        self.receptive_field = max(order, 1)
        self.conditioning_dim = CONDITIONING_DIM if power_buckets > 1 else None
        self.counts: dict[tuple[int, ...], np.ndarray] = {}

    def _bucket(self, theta: np.ndarray) -> int:
        if self.power_buckets == 1:
            return 0
        power = float(theta[POWER_SLOT])
        bucket = int(np.floor((power + 1.0) * self.power_buckets))
        return min(max(bucket, 0), self.power_buckets - 1)

    def _context(self, history: list[int] | deque[int], theta: np.ndarray) -> tuple[int, ...]:
        recent = tuple(history)[len(history) - self.order :] if self.order else ()
        return (self._bucket(theta), *recent)

    def fit(self, sequences: list[tuple[np.ndarray, np.ndarray]]) -> FrequencyTableModel:
        """Accumulate counts from (symbols, conditioning rows) pairs."""
        if not sequences:
            raise EmptyCorpusError("no training sequences")
        for symbols, rows in sequences:
            history = deque([MULAW_ZERO] * self.receptive_field, maxlen=self.receptive_field)
            for i, symbol in enumerate(np.asarray(symbols, dtype=np.int64)):
                key = self._context(history, rows[i])
                table = self.counts.get(key)
                if table is None:
                    table = self.counts[key] = np.zeros(ALPHABET_SIZE)
                table[symbol] += 1.0
                history.append(int(symbol))
        logger.info(f"Frequency table fitted: {len(self.counts)} contexts")
        return self

    def next_distribution(self, state: ModelState, theta: np.ndarray) -> SymbolDistribution:
        theta = self.check_theta(theta)
        table = self.counts.get(self._context(state.history, theta))
        if table is None or table.sum() + self.alpha * ALPHABET_SIZE <= 0.0:
            return SymbolDistribution.uniform()
        return SymbolDistribution.floored(table + self.alpha)

    def fingerprint(self) -> bytes:
        digest = hashlib.sha256()
        digest.update(f"table:{self.order}:{self.power_buckets}:{self.alpha!r}".encode())
        for key in sorted(self.counts):
            digest.update(np.asarray(key, dtype="<i8").tobytes())
            digest.update(np.ascontiguousarray(self.counts[key], dtype="<f8").tobytes())
        return digest.digest()


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


class MarkovOracle(ConditionalModel):
    """Known order-1 Markov chain over the 256 codes.

    ``transition`` is (256, 256) or (regimes, 256, 256). With several regimes
    the active one is ``int(theta[regime_slot])``. Rows are floored at
    construction, so the chain the oracle predicts is the chain it generates.

    Mass on the negative zero code is moved to the zero code: generated
    sequences are ones a mu-law encoder can produce, so they survive a trip
    through linear PCM unchanged.
    """

    def __init__(self, transition: np.ndarray, regime_slot: int = 0):
        matrix = np.array(transition, dtype=np.float64)
        if matrix.ndim == 2:
            matrix = matrix[np.newaxis]
        if matrix.shape[1:] != (ALPHABET_SIZE, ALPHABET_SIZE):
            raise ValueError(f"transition must be 256x256 per regime, got {matrix.shape}")
        matrix[..., MULAW_ZERO] += matrix[..., MULAW_NEGATIVE_ZERO]
        matrix[..., MULAW_NEGATIVE_ZERO] = 0.0
        self.transition = np.stack(
            [np.stack([floor_probs(row) for row in regime]) for regime in matrix]
        )
        self.regime_slot = regime_slot
        self.receptive_field = 1
        self._row_entropy = entropy_bits(self.transition)
        self._log_transition = np.log2(self.transition)

    @property
    def regimes(self) -> int:
        return int(self.transition.shape[0])

    def _regime(self, theta: np.ndarray) -> int | np.ndarray:
        if self.regimes == 1:
            return 0 if np.ndim(theta) == 1 else np.zeros(len(theta), dtype=np.int64)
        raw = np.asarray(theta)[..., self.regime_slot]
        return np.clip(raw.astype(np.int64), 0, self.regimes - 1)

    def next_distribution(self, state: ModelState, theta: np.ndarray) -> SymbolDistribution:
        regime = int(self._regime(np.asarray(theta, dtype=np.float64)))
        return SymbolDistribution(self.transition[regime, state.last_symbol])

    def score(self, symbols: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        symbols = np.asarray(symbols, dtype=np.int64)
        previous = np.concatenate([[MULAW_ZERO], symbols[:-1]]) if symbols.size else symbols
        regime = self._regime(np.asarray(rows, dtype=np.float64))
        h = self._row_entropy[regime, previous]
        r = -self._log_transition[regime, previous, symbols]
        return h, r

    def stationary(self, regime: int = 0) -> np.ndarray:
        """Stationary distribution of one regime (eigenvector of eigenvalue 1)."""
        values, vectors = np.linalg.eig(self.transition[regime].T)
        pi = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
        return pi / pi.sum()

    def entropy_rate(self, regime: int = 0) -> float:
        """Closed-form entropy rate: sum_i pi_i H(P_i)."""
        return float(self.stationary(regime) @ self._row_entropy[regime])

    def generate(
        self, n: int, rng: np.random.Generator, rows: np.ndarray | None = None
    ) -> np.ndarray:
        """Draw a symbol sequence from the chain, starting after the zero code."""
        cdf = np.cumsum(self.transition, axis=-1)
        uniforms = rng.random(n)
        regimes = (
            self._regime(np.asarray(rows, dtype=np.float64)[:n])
            if rows is not None
            else np.zeros(n, dtype=np.int64)
        )
        out = np.empty(n, dtype=np.int64)
        previous = MULAW_ZERO
        for i in range(n):
            row = cdf[regimes[i], previous]
            previous = min(int(np.searchsorted(row, uniforms[i] * row[-1], side="right")), 255)
            if previous == MULAW_NEGATIVE_ZERO:  # floor mass only
                previous = MULAW_ZERO
            out[i] = previous
        return out

    def fingerprint(self) -> bytes:
        digest = hashlib.sha256(b"markov:")
        digest.update(np.ascontiguousarray(self.transition, dtype="<f8").tobytes())
        return digest.digest()


class ConstantModel(ConditionalModel):
    """Fixed distribution regardless of history; uniform by default."""

    def __init__(self, probs: np.ndarray | None = None, floor: bool = True):
        if probs is None:
            self.dist = SymbolDistribution.uniform()
        elif floor:
            self.dist = SymbolDistribution.floored(probs)
        else:
            self.dist = SymbolDistribution(np.asarray(probs, dtype=np.float64))
        self._h = entropy_bits(self.dist.probs)
        with np.errstate(divide="ignore"):
            self._r = -np.log2(self.dist.probs)

    def next_distribution(self, state: ModelState, theta: np.ndarray) -> SymbolDistribution:
        return self.dist

    def score(self, symbols: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        symbols = np.asarray(symbols, dtype=np.int64)
        return np.full(symbols.size, self._h), self._r[symbols]

    def fingerprint(self) -> bytes:
        return hashlib.sha256(b"constant:" + self.dist.probs.astype("<f8").tobytes()).digest()
