"""Information-rate measurements over model/source pairs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from gvox.core.conditional_model import ConditionalModel, entropy_bits, score_signal
from gvox.core.signal_io import DEFAULT_SILENCE_FRAME_MS, silence_sample_mask
from gvox.errors import StateSpaceTooLargeError, StorageError
from gvox.models.rates import InfoTrace, SymbolDistribution
from gvox.models.signal import ConditioningTrack, PcmSignal

logger = logging.getLogger(__name__)

MAX_BLOCK_STATES = 1 << 20
TRACE_COLUMNS = ["index", "h_bits", "r_bits", "silent_flag"]


def conditional_entropy(dist: SymbolDistribution) -> float:
    """Entropy of one predicted distribution in bits."""
    return float(entropy_bits(dist.probs))


# ---------------------------------------------------------------------------
# Chain rule on enumerable joint sources
# ---------------------------------------------------------------------------


@dataclass
class JointSource:
    """Discrete joint process of (S, Theta) pairs.

    Pair state k encodes (s, theta) as ``k = s * theta_size + theta``.
    ``transition`` is None for an i.i.d. source drawn from ``initial``.
    """

    s_size: int
    theta_size: int
    initial: np.ndarray
    transition: np.ndarray | None = None

    @classmethod
    def iid(cls, joint: np.ndarray) -> JointSource:
        joint = np.asarray(joint, dtype=np.float64)
        return cls(joint.shape[0], joint.shape[1], joint.reshape(-1) / joint.sum())

    @classmethod
    def independent(cls, p_s: np.ndarray, p_theta: np.ndarray) -> JointSource:
        return cls.iid(np.outer(p_s, p_theta))

    @classmethod
    def copy(cls, p_s: np.ndarray) -> JointSource:
        """Theta is an exact copy of S."""
        return cls.iid(np.diag(np.asarray(p_s, dtype=np.float64)))

    @classmethod
    def markov(
        cls, s_size: int, theta_size: int, initial: np.ndarray, transition: np.ndarray
    ) -> JointSource:
        transition = np.asarray(transition, dtype=np.float64)
        transition = transition / transition.sum(axis=1, keepdims=True)
        return cls(s_size, theta_size, np.asarray(initial, dtype=np.float64), transition)

    @property
    def pair_states(self) -> int:
        return self.s_size * self.theta_size

    def block_pmf(self, length: int) -> np.ndarray:
        """Joint probability of every block, shaped (S, Theta) * length."""
        states = self.pair_states**length
        if states > MAX_BLOCK_STATES:
            raise StateSpaceTooLargeError(
                f"{self.pair_states}^{length} = {states} blocks exceeds {MAX_BLOCK_STATES}"
            )
        pmf = self.initial.copy()
        for _ in range(length - 1):
            if self.transition is None:
                pmf = np.multiply.outer(pmf, self.initial)
            else:
                pmf = pmf[..., np.newaxis] * self.transition
        return pmf.reshape((self.s_size, self.theta_size) * length)


@dataclass
class ChainRuleResult:
    """Per-sample block entropies in bits."""

    joint: float
    conditional: float
    conditioning: float
    block_length: int

    @property
    def additivity_error(self) -> float:
        return abs(self.joint - (self.conditional + self.conditioning))


def chain_rule_check(source: JointSource, block_length: int = 3) -> ChainRuleResult:
    """H(S,Theta), H(S|Theta) and H(Theta) per sample by exhaustive enumeration.

    The conditional term is computed from the conditional probabilities
    directly, not as a difference, so additivity is a real check.
    """
    if block_length < 1:
        raise ValueError("block_length must be at least 1")
    pmf = source.block_pmf(block_length)
    s_axes = tuple(range(0, 2 * block_length, 2))
    theta_pmf = pmf.sum(axis=s_axes, keepdims=True)

    positive = pmf > 0.0
    joint = float(-(pmf[positive] * np.log2(pmf[positive])).sum())
    ratio = np.divide(pmf, theta_pmf, out=np.ones_like(pmf), where=positive)
    conditional = float(-(pmf[positive] * np.log2(ratio[positive])).sum())
    marginal = theta_pmf[theta_pmf > 0.0]
    conditioning = float(-(marginal * np.log2(marginal)).sum())

    n = float(block_length)
    return ChainRuleResult(joint / n, conditional / n, conditioning / n, block_length)


# ---------------------------------------------------------------------------
# Instantaneous information traces
# ---------------------------------------------------------------------------


def info_trace(
    signal: PcmSignal,
    track: ConditioningTrack,
    model: ConditionalModel,
    silence_db: float | None = None,
    silence_frame_ms: int = DEFAULT_SILENCE_FRAME_MS,
) -> InfoTrace:
    """Per-sample entropy and code length of a signal given its true history."""
    silent = None
    if silence_db is not None:
        silent = silence_sample_mask(signal, silence_frame_ms, silence_db)
    return score_signal(model, signal, track, silent)


def trace_frame(trace: InfoTrace) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "index": np.arange(len(trace), dtype=np.int64),
            "h_bits": trace.h,
            "r_bits": trace.r,
            "silent_flag": trace.silent.astype(np.int64),
        },
        columns=TRACE_COLUMNS,
    )


def export_trace(trace: InfoTrace, path: str | Path) -> None:
    """CSV with one row per sample, reals to 9 decimals."""
    path = Path(path)
    try:
        trace_frame(trace).to_csv(path, index=False, float_format="%.9f")
    except OSError as e:
        raise StorageError(f"cannot write trace: {e}", path=str(path)) from e
    logger.info(f"Wrote {len(trace)} trace rows to {path}")


def load_trace(path: str | Path) -> InfoTrace:
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except OSError as e:
        raise StorageError(f"cannot read trace: {e}", path=str(path)) from e
    missing = set(TRACE_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"trace is missing columns {sorted(missing)}")
    return InfoTrace(
        frame["h_bits"].to_numpy(dtype=np.float64),
        frame["r_bits"].to_numpy(dtype=np.float64),
        frame["silent_flag"].to_numpy(dtype=np.int64) != 0,
    )


def likelihood_excess(trace: InfoTrace, window: int) -> np.ndarray:
    """Moving average of r - h: observed information minus the model's expectation."""
    if window < 1:
        raise ValueError("window must be at least 1")
    excess = pd.Series(trace.r - trace.h)
    return excess.rolling(window, min_periods=1).mean().to_numpy()


def flag_poor_fit(trace: InfoTrace, window: int, threshold_bits: float) -> np.ndarray:
    """Samples where the input is persistently less likely than the model expects."""
    return likelihood_excess(trace, window) > threshold_bits
