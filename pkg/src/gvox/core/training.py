"""Network training: windowed mini-batches, momentum SGD, gradient checking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from gvox.core.conditional_model import aligned_rows, signal_symbols
from gvox.core.wavenet import loss_and_grads, shifted_inputs
from gvox.core.weights import init_weights
from gvox.errors import ConfigError, EmptyCorpusError
from gvox.models.network import Architecture, ModelWeights
from gvox.models.rates import ALPHABET_SIZE
from gvox.models.signal import ConditioningTrack, PcmSignal
from gvox.utils.config import CodecConfig

logger = logging.getLogger(__name__)


@dataclass
class TrainingRun:
    weights: ModelWeights
    losses: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        tail = self.losses[-max(1, len(self.losses) // 10) :]
        return float(np.mean(tail)) if tail else float("nan")

    def loss_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "step": np.arange(len(self.losses)),
                "loss_bits": self.losses,
                "learning_rate": self.learning_rates,
            }
        )


@dataclass
class Sequence:
    """One aligned training item: mu-law symbols and conditioning rows."""

    symbols: np.ndarray
    rows: np.ndarray

    def __len__(self) -> int:
        return int(self.symbols.size)


def architecture_from_config(config: CodecConfig) -> Architecture:
    return Architecture(
        stacks=config.stacks,
        layers_per_stack=config.layers_per_stack,
        residual_channels=config.residual_channels,
        skip_channels=config.skip_channels,
        conditioning_dim=config.conditioning_dim,
    )


def prepare_corpus(corpus: list[tuple[PcmSignal, ConditioningTrack]]) -> list[Sequence]:
    """Quantize signals to symbols and align their conditioning."""
    if not corpus:
        raise EmptyCorpusError("training corpus is empty")
    sequences = []
    for signal, track in corpus:
        symbols = signal_symbols(signal)
        sequences.append(Sequence(symbols, aligned_rows(symbols.size, track)))
    return sequences


def symbol_marginal(sequences: list[Sequence]) -> np.ndarray:
    """Add-half smoothed symbol frequencies over the corpus."""
    counts = np.zeros(ALPHABET_SIZE)
    for seq in sequences:
        counts += np.bincount(seq.symbols, minlength=ALPHABET_SIZE)
    return (counts + 0.5) / (counts.sum() + 0.5 * ALPHABET_SIZE)


class BatchSampler:
    """Random fixed-length windows with ``context`` leading samples excluded from the loss."""

    def __init__(self, sequences: list[Sequence], window: int, context: int):
        self.window = window
        self.context = context
        self.sequences = [s for s in sequences if len(s) >= window]
        if not self.sequences:
            longest = max(len(s) for s in sequences)
            raise EmptyCorpusError(
                f"no training item has {window} samples (longest has {longest})"
            )
        lengths = np.array([len(s) - window + 1 for s in self.sequences], dtype=np.float64)
        self.weights = lengths / lengths.sum()

    def sample(
        self, rng: np.random.Generator, batch_size: int
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        items = rng.choice(len(self.sequences), size=batch_size, p=self.weights)
        inputs, targets, cond = [], [], []
        for item in items:
            seq = self.sequences[item]
            start = int(rng.integers(0, len(seq) - self.window + 1))
            chunk = seq.symbols[start : start + self.window]
            window_inputs = shifted_inputs(chunk)
            if start > 0:
                window_inputs[0] = seq.symbols[start - 1]
            inputs.append(window_inputs)
            targets.append(chunk)
            cond.append(seq.rows[start : start + self.window])
        mask = np.ones((batch_size, self.window), dtype=bool)
        mask[:, : self.context] = False
        return np.stack(inputs), np.stack(targets), np.stack(cond), mask


def _global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def learning_rate(config: CodecConfig, step: int) -> float:
    return config.learning_rate * config.lr_decay ** (step // config.lr_decay_steps)


def train(
    corpus: list[tuple[PcmSignal, ConditioningTrack]],
    config: CodecConfig,
    initial: ModelWeights | None = None,
) -> TrainingRun:
    """Minimise next-symbol cross-entropy; deterministic given ``config.seed``."""
    sequences = prepare_corpus(corpus)
    arch = architecture_from_config(config)
    rng = np.random.default_rng(config.seed)

    if initial is not None:
        if initial.architecture != arch:
            raise ConfigError(
                f"cannot resume: weights have architecture {initial.architecture.as_tuple()}, "
                f"config asks for {arch.as_tuple()}"
            )
        weights = initial.copy()
        logger.info("Resuming from existing weights")
    else:
        weights = init_weights(arch, rng)
        weights.params["head_b2"] = np.log(symbol_marginal(sequences))

    context = min(arch.receptive_field, config.sequence_length)
    sampler = BatchSampler(sequences, config.sequence_length + context, context)
    velocity = {name: np.zeros_like(value) for name, value in weights.params.items()}
    run = TrainingRun(weights)

    for step in range(config.steps):
        inputs, targets, cond, mask = sampler.sample(rng, config.batch_size)
        loss, grads = loss_and_grads(weights, inputs, targets, cond, mask)
        norm = _global_norm(grads)
        scale = 1.0
        if config.clip_norm > 0.0 and norm > config.clip_norm:
            scale = config.clip_norm / norm
        lr = learning_rate(config, step)
        for name, grad in grads.items():
            velocity[name] = config.momentum * velocity[name] - lr * scale * grad
            weights.params[name] += velocity[name]
        run.losses.append(loss)
        run.learning_rates.append(lr)
        if config.log_every and (step + 1) % config.log_every == 0:
            recent = float(np.mean(run.losses[-config.log_every :]))
            logger.info(f"step {step + 1}/{config.steps}: loss {recent:.4f} bits, lr {lr:.2e}")

    if not weights.is_finite():
        logger.warning("Training produced non-finite weights")
    return run


@dataclass
class GradientCheck:
    """Relative error between analytic and numeric gradients per parameter group."""

    errors: dict[str, float]

    @property
    def worst(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.worst <= tolerance


def gradient_check(
    weights: ModelWeights,
    inputs: np.ndarray,
    targets: np.ndarray,
    cond: np.ndarray,
    step: float = 1e-3,
    max_per_group: int = 24,
    seed: int = 0,
) -> GradientCheck:
    """Compare backprop against central differences on sampled coordinates."""
    rng = np.random.default_rng(seed)
    trial = weights.copy()
    _, analytic = loss_and_grads(trial, inputs, targets, cond)
    errors = {}
    for name, tensor in trial.params.items():
        if tensor.size == 0:
            continue
        flat = tensor.reshape(-1)
        picks = rng.choice(flat.size, size=min(max_per_group, flat.size), replace=False)
        numeric = np.empty(picks.size)
        for j, index in enumerate(picks):
            original = flat[index]
            flat[index] = original + step
            plus, _ = loss_and_grads(trial, inputs, targets, cond)
            flat[index] = original - step
            minus, _ = loss_and_grads(trial, inputs, targets, cond)
            flat[index] = original
            numeric[j] = (plus - minus) / (2.0 * step)
        exact = analytic[name].reshape(-1)[picks]
        denominator = np.linalg.norm(exact) + np.linalg.norm(numeric)
        errors[name] = (
            float(np.linalg.norm(exact - numeric) / denominator) if denominator > 1e-12 else 0.0
        )
    return GradientCheck(errors)
