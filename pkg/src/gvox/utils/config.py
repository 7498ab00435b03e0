"""Flat ``key = value`` configuration shared by train and analyze."""

from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from gvox.errors import ConfigError, StorageError
from gvox.models.signal import CONDITIONING_DIM


class CodecConfig(BaseModel):
    """Training, architecture and analysis settings."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # Training
    seed: int = Field(default=0, ge=0)
    steps: int = Field(default=2000, ge=0)
    batch_size: int = Field(default=8, ge=1)
    sequence_length: int = Field(default=256, ge=1)
    learning_rate: float = Field(default=0.05, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    lr_decay: float = Field(default=0.5, gt=0.0, le=1.0)
    lr_decay_steps: int = Field(default=1000, ge=1)
    clip_norm: float = Field(default=5.0, ge=0.0)  # 0 disables clipping
    log_every: int = Field(default=100, ge=0)

    # Architecture
    stacks: int = Field(default=2, ge=1)
    layers_per_stack: int = Field(default=6, ge=1, le=16)
    residual_channels: int = Field(default=32, ge=1)
    skip_channels: int = Field(default=64, ge=1)
    conditioning_dim: int = Field(default=CONDITIONING_DIM, ge=0)

    # Analysis and synthesis
    silence_db: float = -40.0
    silence_frame_ms: int = Field(default=20, ge=1)
    fit_window_ms: float = Field(default=20.0, gt=0.0)
    fit_threshold_bits: float = Field(default=1.0, ge=0.0)
    temperature: float = Field(default=1.0, ge=0.0)


def parse_config(text: str, source: str | None = None) -> CodecConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}", path=source)
        if key in values:
            raise ConfigError(f"line {number}: duplicate key {key!r}", path=source)
        values[key] = value.strip()
    try:
        return CodecConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}", path=source) from e


def format_config(config: CodecConfig) -> str:
    return "\n".join(f"{key} = {value}" for key, value in config.model_dump().items()) + "\n"


def load_config(path: str | Path | None = None) -> CodecConfig:
    """Load configuration from file or return defaults."""
    if path is None:
        return CodecConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise StorageError(f"cannot read config: {e}", path=str(path)) from e
    return parse_config(text, source=str(path))


def save_config(config: CodecConfig, path: str | Path) -> None:
    """Save configuration to file."""
    path = Path(path)
    try:
        path.write_text(format_config(config))
    except OSError as e:
        raise StorageError(f"cannot write config: {e}", path=str(path)) from e


def with_overrides(config: CodecConfig, **overrides) -> CodecConfig:
    """Copy with CLI flag values applied; ``None`` means not given."""
    given = {k: v for k, v in overrides.items() if v is not None}
    if not given:
        return config
    try:
        return CodecConfig(**{**config.model_dump(), **given})
    except ValidationError as e:
        raise ConfigError(f"invalid override: {e.errors()[0]['msg']}") from e
