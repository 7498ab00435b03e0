"""Gated dilated-convolution network: architecture and parameter container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gvox.models.rates import ALPHABET_SIZE
from gvox.models.signal import CONDITIONING_DIM

WEIGHTS_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    stacks: int = 2
    layers_per_stack: int = 6
    residual_channels: int = 32
    skip_channels: int = 64
    conditioning_dim: int = CONDITIONING_DIM
    alphabet_size: int = ALPHABET_SIZE

    def __post_init__(self) -> None:
        for name in ("stacks", "layers_per_stack", "residual_channels", "skip_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.conditioning_dim < 0:
            raise ValueError("conditioning_dim must be non-negative")

    @property
    def num_layers(self) -> int:
        return self.stacks * self.layers_per_stack

    @property
    def dilations(self) -> list[int]:
        return [1 << k for _ in range(self.stacks) for k in range(self.layers_per_stack)]

    @property
    def receptive_field(self) -> int:
        """Past samples a prediction may depend on, including the fed-back input."""
        return 1 + sum(self.dilations)

    def parameter_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Every tensor in serialization order."""
        c, k, d = self.residual_channels, self.skip_channels, self.conditioning_dim
        shapes: list[tuple[str, tuple[int, ...]]] = [("embed", (self.alphabet_size, c))]
        for layer in range(self.num_layers):
            p = f"layer{layer}."
            shapes += [
                (p + "filter_w", (2, c, c)),
                (p + "gate_w", (2, c, c)),
                (p + "filter_b", (c,)),
                (p + "gate_b", (c,)),
                (p + "cond_filter", (d, c)),
                (p + "cond_gate", (d, c)),
                (p + "res_w", (c, c)),
                (p + "res_b", (c,)),
                (p + "skip_w", (c, k)),
                (p + "skip_b", (k,)),
            ]
        shapes += [
            ("head_w1", (k, k)),
            ("head_b1", (k,)),
            ("head_w2", (k, self.alphabet_size)),
            ("head_b2", (self.alphabet_size,)),
        ]
        return shapes

    def as_tuple(self) -> tuple[int, ...]:
        return (
            self.stacks,
            self.layers_per_stack,
            self.residual_channels,
            self.skip_channels,
            self.conditioning_dim,
            self.alphabet_size,
        )


@dataclass(eq=False)
class ModelWeights:
    """All trainable tensors of one network, keyed by name in declared order."""

    architecture: Architecture
    params: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = WEIGHTS_VERSION

    def __post_init__(self) -> None:
        expected = self.architecture.parameter_shapes()
        names = [name for name, _ in expected]
        if list(self.params) != names:
            missing = set(names) - set(self.params)
            extra = set(self.params) - set(names)
            if missing or extra:
                raise ValueError(f"parameter set mismatch: missing {missing}, extra {extra}")
            self.params = {name: self.params[name] for name in names}
        for name, shape in expected:
            array = np.asarray(self.params[name], dtype=np.float64)
            if array.shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {array.shape}")
            self.params[name] = array

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    @property
    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(p))) for p in self.params.values())

    def copy(self) -> ModelWeights:
        return ModelWeights(
            self.architecture, {k: v.copy() for k, v in self.params.items()}, self.version
        )
