"""Shared fixtures: seeded generators, synthetic speech, small models."""

import numpy as np
import pytest

from gvox.core.conditional_model import MarkovOracle
from gvox.core.weights import init_weights
from gvox.models.network import Architecture
from gvox.models.signal import PcmSignal


def speech_like(
    rng: np.random.Generator,
    seconds: float = 0.5,
    rate: int = 16000,
    pitch_hz: float = 120.0,
    level: float = 6000.0,
) -> PcmSignal:
    """Alternating voiced (harmonic) and unvoiced (noise) 100 ms segments."""
    n = int(seconds * rate)
    t = np.arange(n) / rate
    voiced = sum(np.cos(2 * np.pi * pitch_hz * k * t) / k for k in range(1, 12))
    noise = rng.standard_normal(n) * 0.6
    segment = (np.arange(n) // (rate // 10)) % 2 == 0
    x = np.where(segment, voiced, noise) * level / 2.0
    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * 3.0 * t)
    return PcmSignal(np.clip(np.rint(x * envelope), -32768, 32767).astype(np.int16), rate)


def sparse_transitions(rng: np.random.Generator, support: int = 4) -> np.ndarray:
    """256x256 transition matrix where each symbol leads to ``support`` random codes."""
    transition = np.zeros((256, 256))
    for row in range(256):
        targets = rng.choice(256, size=support, replace=False)
        transition[row, targets] = rng.dirichlet(np.ones(support))
    return transition


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def speech(rng):
    return speech_like(rng)


@pytest.fixture
def speech_8k(rng):
    return speech_like(rng, rate=8000)


@pytest.fixture
def oracle(rng):
    return MarkovOracle(sparse_transitions(rng))


@pytest.fixture
def micro_arch():
    return Architecture(
        stacks=1,
        layers_per_stack=2,
        residual_channels=8,
        skip_channels=8,
        conditioning_dim=16,
    )


@pytest.fixture
def micro_weights(micro_arch):
    return init_weights(micro_arch, np.random.default_rng(7), zero_head=False)


@pytest.fixture
def speech_factory():
    """Build speech-like signals with chosen rate, pitch and level."""
    return speech_like
