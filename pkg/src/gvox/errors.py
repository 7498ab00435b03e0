"""Exception hierarchy.

Every error carries the CLI exit code of its class so the command layer can
map failures without inspecting messages:
0 success, 2 usage, 3 format, 4 checksum/version, 5 I/O.
"""

from __future__ import annotations


class GvoxError(Exception):
    """Base class for all gvox errors."""

    exit_code = 1

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path

    def located(self) -> str:
        """Message prefixed with the file it relates to, when known."""
        if self.path:
            return f"{self.path}: {self}"
        return str(self)


# --- usage (2) ---


class UsageError(GvoxError):
    exit_code = 2


class ConfigError(UsageError):
    """Invalid or unknown configuration key."""


class EmptyCorpusError(UsageError):
    """Training was asked to run without any data."""


class StateSpaceTooLargeError(UsageError):
    """Brute-force enumeration would exceed the configured guard."""


class CoderStateError(UsageError):
    """Arithmetic coder used after finish, or finished twice."""


class UnsupportedResampleError(UsageError):
    """Only 8000 <-> 16000 Hz conversions are supported."""


# --- format (3) ---


class FormatError(GvoxError):
    exit_code = 3


class MalformedHeaderError(FormatError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class UnsupportedRateError(FormatError):
    pass


class UnsupportedChannelsError(FormatError):
    pass


class BadMagicError(FormatError):
    pass


class UnsupportedModeError(FormatError):
    pass


class TruncatedStreamError(FormatError):
    def __init__(self, expected: int, actual: int, path: str | None = None):
        super().__init__(
            f"truncated stream: expected {expected} bytes, got {actual}", path=path
        )
        self.expected = expected
        self.actual = actual


class StreamUnderrunError(FormatError):
    def __init__(self, sample_index: int | None = None, path: str | None = None):
        where = f" at sample {sample_index}" if sample_index is not None else ""
        super().__init__(f"arithmetic decoder ran past the end of the payload{where}", path)
        self.sample_index = sample_index


class AlignmentError(FormatError):
    """Signal, frames and conditioning do not cover the same duration."""


class DimensionMismatchError(FormatError):
    """Conditioning vector does not match the model's declared dimension."""


class NonFiniteWeightsError(FormatError):
    """Network weights contain NaN or infinite values."""


# --- integrity (4) ---


class IntegrityError(GvoxError):
    exit_code = 4


class ChecksumError(IntegrityError):
    pass


class VersionMismatchError(IntegrityError):
    pass


# --- I/O (5) ---


class StorageError(GvoxError):
    exit_code = 5
