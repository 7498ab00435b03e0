"""Integer arithmetic coder driven by externally supplied per-symbol PMFs.

32-bit low/high state with pending (underflow) bits instead of carry
propagation. Frequency tables have a fixed total of 2**16 and every symbol
has a frequency of at least one, so any symbol is always codable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gvox.errors import CoderStateError, StreamUnderrunError
from gvox.models.rates import ALPHABET_SIZE, SymbolDistribution

logger = logging.getLogger(__name__)

FREQ_BITS = 16
FREQ_TOTAL = 1 << FREQ_BITS
STATE_BITS = 32
OVERREAD_LIMIT = STATE_BITS  # zero bits the decoder may read past the end

_FULL = 1 << STATE_BITS
_HALF = _FULL >> 1
_QUARTER = _HALF >> 1
_MASK = _FULL - 1


@dataclass(eq=False)
class FreqTable:
    """Cumulative frequencies: ``cum[s]`` .. ``cum[s + 1]`` is the interval of symbol s."""

    cum: np.ndarray

    def __post_init__(self) -> None:
        self.cum = np.asarray(self.cum, dtype=np.int64)
        self._cum_list: list[int] = self.cum.tolist()

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> FreqTable:
        cum = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=cum[1:])
        return cls(cum)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.cum)

    @property
    def total(self) -> int:
        return self._cum_list[-1]

    def __len__(self) -> int:
        return len(self._cum_list) - 1

    def interval(self, symbol: int) -> tuple[int, int]:
        return self._cum_list[symbol], self._cum_list[symbol + 1]

    def probs(self) -> np.ndarray:
        return self.counts / float(self.total)

    def is_valid(self) -> bool:
        counts = self.counts
        return bool(self.cum[0] == 0 and self.total == FREQ_TOTAL and counts.min() >= 1)

    def symbol_at(self, value: int) -> int:
        """Highest symbol whose cumulative low is <= value."""
        return int(np.searchsorted(self.cum, value, side="right")) - 1


def quantize_pmf(dist: SymbolDistribution | np.ndarray) -> FreqTable:
    """Largest-remainder apportionment of 2**16 counts with a floor of one.

    Each symbol first gets ``1 + floor(p * (2**16 - n))``; the counts still
    missing go to the largest fractional remainders, ties to the lowest index.
    """
    probs = dist.probs if isinstance(dist, SymbolDistribution) else np.asarray(dist)
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.size
    scaled = probs / probs.sum() * (FREQ_TOTAL - n)
    base = np.floor(scaled)
    counts = base.astype(np.int64) + 1
    missing = FREQ_TOTAL - int(counts.sum())
    if missing > 0:
        order = np.argsort(-(scaled - base), kind="stable")
        counts[order[:missing]] += 1
    elif missing < 0:
        # only reachable through float rounding of the scaled sum
        order = np.argsort(scaled - base, kind="stable")
        order = order[counts[order] > 1]
        counts[order[:-missing]] -= 1
    return FreqTable.from_counts(counts)


def uniform_table(size: int = ALPHABET_SIZE) -> FreqTable:
    return quantize_pmf(np.full(size, 1.0 / size))


class _BitWriter:
    def __init__(self) -> None:
        self.buffer = bytearray()
        self.current = 0
        self.filled = 0
        self.bits_written = 0

    def write(self, bit: int) -> None:
        self.current = (self.current << 1) | bit
        self.filled += 1
        self.bits_written += 1
        if self.filled == 8:
            self.buffer.append(self.current)
            self.current = 0
            self.filled = 0

    def flush(self) -> bytes:
        if self.filled:
            self.buffer.append(self.current << (8 - self.filled))
            self.current = 0
            self.filled = 0
        return bytes(self.buffer)


class _BitReader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.position = 0  # in bits

    @property
    def overread(self) -> int:
        return max(0, self.position - 8 * len(self.data))

    def read(self) -> int:
        byte_index = self.position >> 3
        self.position += 1
        if byte_index >= len(self.data):
            return 0
        return (self.data[byte_index] >> (7 - ((self.position - 1) & 7))) & 1


class _CoderBase:
    """Interval bookkeeping shared by both ends."""

    def __init__(self) -> None:
        self.low = 0
        self.high = _MASK

    def _update(self, table: FreqTable, symbol: int) -> None:
        span = self.high - self.low + 1
        total = table.total
        sym_low, sym_high = table.interval(symbol)
        self.high = self.low + sym_high * span // total - 1
        self.low = self.low + sym_low * span // total

        while ((self.low ^ self.high) & _HALF) == 0:
            self._shift()
            self.low = (self.low << 1) & _MASK
            self.high = ((self.high << 1) & _MASK) | 1
        while (self.low & ~self.high & _QUARTER) != 0:
            self._underflow()
            self.low = (self.low << 1) ^ _HALF
            self.high = ((self.high ^ _HALF) << 1) | _HALF | 1

    def _shift(self) -> None:
        raise NotImplementedError

    def _underflow(self) -> None:
        raise NotImplementedError


class ArithmeticEncoder(_CoderBase):
    """Encodes symbols into bytes; call ``finish`` exactly once."""

    def __init__(self) -> None:
        super().__init__()
        self._out = _BitWriter()
        self._pending = 0
        self._finished = False
        self.symbols = 0
        self.ideal_bits = 0.0

    def encode_symbol(self, symbol: int, table: FreqTable) -> None:
        if self._finished:
            raise CoderStateError("encoder used after finish")
        sym_low, sym_high = table.interval(symbol)
        self.ideal_bits -= float(np.log2((sym_high - sym_low) / table.total))
        self._update(table, symbol)
        self.symbols += 1

    def finish(self) -> bytes:
        """Terminate the stream: pending bits plus two selecting bits, zero padded."""
        if self._finished:
            raise CoderStateError("encoder finished twice")
        self._finished = True
        self._pending += 1
        bit = 0 if self.low < _QUARTER else 1
        self._out.write(bit)
        for _ in range(self._pending):
            self._out.write(bit ^ 1)
        self._pending = 0
        data = self._out.flush()
        logger.debug(
            f"Arithmetic coder: {self.symbols} symbols, {8 * len(data)} bits "
            f"(ideal {self.ideal_bits:.1f})"
        )
        return data

    @property
    def bits_written(self) -> int:
        return self._out.bits_written

    def _shift(self) -> None:
        bit = self.low >> (STATE_BITS - 1)
        self._out.write(bit)
        for _ in range(self._pending):
            self._out.write(bit ^ 1)
        self._pending = 0

    def _underflow(self) -> None:
        self._pending += 1


class ArithmeticDecoder(_CoderBase):
    """Decodes symbols given the same table sequence the encoder used."""

    def __init__(self, data: bytes) -> None:
        super().__init__()
        self._in = _BitReader(data)
        self.symbols = 0
        self.code = 0
        for _ in range(STATE_BITS):
            self.code = (self.code << 1) | self._in.read()

    def decode_symbol(self, table: FreqTable) -> int:
        total = table.total
        span = self.high - self.low + 1
        offset = self.code - self.low
        value = ((offset + 1) * total - 1) // span
        symbol = table.symbol_at(value)
        self._update(table, symbol)
        if self._in.overread > OVERREAD_LIMIT:
            raise StreamUnderrunError(sample_index=self.symbols)
        self.symbols += 1
        return symbol

    def _shift(self) -> None:
        self.code = ((self.code << 1) & _MASK) | self._in.read()

    def _underflow(self) -> None:
        self.code = (self.code & _HALF) | ((self.code << 1) & (_MASK >> 1)) | self._in.read()


def encode_symbols(symbols: list[int], tables: list[FreqTable]) -> bytes:
    encoder = ArithmeticEncoder()
    for symbol, table in zip(symbols, tables, strict=True):
        encoder.encode_symbol(symbol, table)
    return encoder.finish()


def decode_symbols(data: bytes, tables: list[FreqTable]) -> list[int]:
    decoder = ArithmeticDecoder(data)
    return [decoder.decode_symbol(table) for table in tables]
