"""Text formats for distributions and spreads, and the binary container.

Container layout (all integers big-endian)::

    magic      4  b"ANS1" (plain) or b"ANSK" (keyed)
    R          1
    n          2  alphabet size
    L_s        2  per symbol
    length     8  symbols in the frame
    x0         4  final encoder state
    nbits      8  payload bit length
    crc32      4  keyed only: CRC-32 of the frame (each symbol as 2 bytes)
    alphabet   2  per symbol, the symbol value
    spread     1 or 2 per state (plain only), alphabet index owning state L+i;
                  2 bytes when n > 256
    payload       ceil(nbits / 8) bytes, MSB-first
"""
from __future__ import annotations

import struct
import zlib
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .core import BinaryFrame, SymbolDistribution, SymbolSpread, normalize
from .errors import DecodeError, DistributionError, SpreadError

MAGIC_PLAIN = b"ANS1"
MAGIC_KEYED = b"ANSK"


# -- text files -----------------------------------------------------------------------

def _data_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def parse_dist(text: str) -> tuple[tuple[str, ...], tuple]:
    """``symbol<TAB>value`` lines; values are probabilities or raw counts.

    Values parse exactly (``3/16``, ``0.35``, ``7``).  All-integer values are
    treated as counts and normalised; otherwise they must sum to one within
    1e-9 and are normalised exactly.
    """
    symbols, values = [], []
    for lineno, line in _data_lines(text):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise DistributionError(f"line {lineno}: expected 'symbol<TAB>value'")
        try:
            values.append(Fraction(parts[1]))
        except (ValueError, ZeroDivisionError):
            raise DistributionError(f"line {lineno}: bad value {parts[1]!r}") from None
        symbols.append(parts[0])
    if len(set(symbols)) != len(symbols):
        raise DistributionError("duplicate symbol in distribution file")
    total = sum(values)
    if not all(v.denominator == 1 for v in values) and abs(total - 1) > Fraction(1, 10**9):
        raise DistributionError(f"probabilities sum to {float(total)}")
    return tuple(symbols), normalize(values)


def read_dist(path) -> tuple[tuple[str, ...], tuple]:
    return parse_dist(Path(path).read_text(encoding="utf-8"))


def format_dist(symbols: Sequence, probs: Sequence) -> str:
    return "".join(f"{s}\t{p}\n" for s, p in zip(symbols, probs))


def format_spread(spread: SymbolSpread) -> str:
    L = spread.L
    return "".join(f"{L + i}\t{spread.symbols[v]}\n" for i, v in enumerate(spread.labels))


def parse_spread(text: str, symbols: Sequence | None = None) -> SymbolSpread:
    """``state<TAB>symbol`` lines with ascending states covering I.

    Without an explicit alphabet, symbols are ordered by first appearance.
    """
    states, row = [], []
    for lineno, line in _data_lines(text):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise SpreadError(f"line {lineno}: expected 'state<TAB>symbol'")
        try:
            states.append(int(parts[0]))
        except ValueError:
            raise SpreadError(f"line {lineno}: bad state {parts[0]!r}") from None
        row.append(parts[1])
    L = len(states)
    if states != list(range(L, 2 * L)):
        raise SpreadError(f"states must run {L}..{2 * L - 1} in ascending order")
    if symbols is None:
        symbols = tuple(dict.fromkeys(row))
    return SymbolSpread.from_symbol_row(tuple(symbols), row)


def read_spread(path, symbols: Sequence | None = None) -> SymbolSpread:
    return parse_spread(Path(path).read_text(encoding="utf-8"), symbols)


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# -- binary container -----------------------------------------------------------------

def frame_checksum(symbols: Sequence[int]) -> int:
    return zlib.crc32(b"".join(struct.pack(">H", s) for s in symbols)) & 0xFFFFFFFF


@dataclass(frozen=True)
class Container:
    R: int
    counts: tuple[int, ...]
    symbols: tuple[int, ...]
    length: int
    frame: BinaryFrame
    labels: tuple[int, ...] | None = None
    checksum: int | None = None

    @property
    def keyed(self) -> bool:
        return self.checksum is not None

    def spread(self) -> SymbolSpread:
        if self.labels is None:
            raise DecodeError("keyed containers carry no spread")
        return SymbolSpread(self.symbols, self.labels)


def pack_container(dist: SymbolDistribution, frame: BinaryFrame, length: int,
                   spread: SymbolSpread | None = None, checksum: int | None = None) -> bytes:
    """Serialise an encoded frame; pass ``spread`` for plain, ``checksum`` for keyed."""
    if (spread is None) == (checksum is None):
        raise ValueError("give exactly one of spread (plain) or checksum (keyed)")
    if not 1 <= dist.R <= 16:
        raise ValueError("container supports 1 <= R <= 16")
    if any(not isinstance(s, int) or not 0 <= s < 1 << 16 for s in dist.symbols):
        raise ValueError("container symbols must be integers in [0, 65535]")
    out = bytearray(MAGIC_KEYED if checksum is not None else MAGIC_PLAIN)
    out += struct.pack(">BH", dist.R, dist.n)
    out += struct.pack(f">{dist.n}H", *dist.counts)
    out += struct.pack(">QIQ", length, frame.final_state, frame.bit_length)
    if checksum is not None:
        out += struct.pack(">I", checksum)
    out += struct.pack(f">{dist.n}H", *dist.symbols)
    if spread is not None:
        spread.check(dist)
        fmt = "B" if dist.n <= 256 else "H"
        out += struct.pack(f">{dist.L}{fmt}", *spread.labels)
    out += frame.payload
    return bytes(out)


def empty_container(R: int) -> bytes:
    """Header-only plain container for an empty input (no alphabet, no payload)."""
    if not 1 <= R <= 16:
        raise ValueError("container supports 1 <= R <= 16")
    return MAGIC_PLAIN + struct.pack(">BH", R, 0) + struct.pack(">QIQ", 0, 0, 0)


def unpack_container(data: bytes) -> Container:
    if data[:4] == MAGIC_PLAIN and len(data) == 27 and data[5:7] == b"\0\0":
        R = data[4]
        length, x0, nbits = struct.unpack_from(">QIQ", data, 7)
        if not 1 <= R <= 16 or length or x0 or nbits:
            raise DecodeError("bad empty container header")
        return Container(R, (), (), 0, BinaryFrame(b"", 0, 0), (), None)
    try:
        magic = data[:4]
        if magic not in (MAGIC_PLAIN, MAGIC_KEYED):
            raise DecodeError(f"bad magic {magic!r}")
        keyed = magic == MAGIC_KEYED
        pos = 4
        R, n = struct.unpack_from(">BH", data, pos)
        pos += 3
        if not 1 <= R <= 16 or n < 2:
            raise DecodeError(f"bad header: R={R}, n={n}")
        counts = struct.unpack_from(f">{n}H", data, pos)
        pos += 2 * n
        length, x0, nbits = struct.unpack_from(">QIQ", data, pos)
        pos += 20
        checksum = None
        if keyed:
            (checksum,) = struct.unpack_from(">I", data, pos)
            pos += 4
        symbols = struct.unpack_from(f">{n}H", data, pos)
        pos += 2 * n
        labels = None
        L = 1 << R
        if not keyed:
            fmt = "B" if n <= 256 else "H"
            labels = struct.unpack_from(f">{L}{fmt}", data, pos)
            pos += L * struct.calcsize(fmt)
    except struct.error as exc:
        raise DecodeError(f"truncated container: {exc}") from None
    if sum(counts) != L:
        raise DecodeError("state counts do not sum to L")
    payload = data[pos:]
    if len(payload) != (nbits + 7) // 8:
        raise DecodeError(f"payload has {len(payload)} bytes, header says {nbits} bits")
    return Container(R, tuple(counts), tuple(symbols), length,
                     BinaryFrame(bytes(payload), nbits, x0), labels, checksum)
