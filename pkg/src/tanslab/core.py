"""Symbol statistics, spreads, coding tables and the tANS frame codec."""
from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .bitio import BitReader, BitWriter
from .errors import DecodeError, DistributionError, SpreadError

Number = Fraction | float


def _as_number(value) -> Number:
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


def normalize(weights: Sequence) -> tuple[Number, ...]:
    """Scale non-negative weights to sum to one, exactly when all are rational."""
    vals = [_as_number(w) for w in weights]
    if any(v <= 0 for v in vals):
        raise DistributionError("weights must be positive")
    total = sum(vals)
    return tuple(v / total for v in vals)


def state_bits(x: int, count: int) -> int:
    """k_s(x) = floor(lg(x / L_s)), the number of bits emitted from state x."""
    return (x // count).bit_length() - 1


def _check_probs(probs: Sequence[Number]) -> None:
    if len(probs) < 2:
        raise DistributionError("need at least 2 symbols")
    if any(p <= 0 for p in probs):
        raise DistributionError("probabilities must be positive")
    total = sum(probs)
    if all(isinstance(p, Fraction) for p in probs):
        if total != 1:
            raise DistributionError(f"probabilities sum to {total}, not 1")
    elif abs(float(total) - 1.0) > 1e-12:
        raise DistributionError(f"probabilities sum to {float(total)!r}, not 1")


@dataclass(frozen=True)
class SymbolDistribution:
    """Source probabilities together with their quantised state counts."""

    symbols: tuple
    probs: tuple
    R: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "probs", tuple(_as_number(p) for p in self.probs))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if self.R < 1:
            raise DistributionError("R must be a positive integer")
        if not (len(self.symbols) == len(self.probs) == len(self.counts)):
            raise DistributionError("symbols, probs and counts differ in length")
        if len(set(self.symbols)) != len(self.symbols):
            raise DistributionError("duplicate symbols")
        _check_probs(self.probs)
        if any(c < 1 for c in self.counts):
            raise DistributionError("every symbol needs at least one state")
        if sum(self.counts) != self.L:
            raise DistributionError(f"counts sum to {sum(self.counts)}, expected L={self.L}")

    @classmethod
    def from_counts(cls, counts: Sequence[int], symbols: Sequence | None = None) -> "SymbolDistribution":
        """Distribution whose probabilities are exactly L_s / L."""
        total = sum(counts)
        R = total.bit_length() - 1
        if total != 1 << R:
            raise DistributionError("counts must sum to a power of two")
        if symbols is None:
            symbols = range(len(counts))
        return cls(tuple(symbols), tuple(Fraction(c, total) for c in counts), R, tuple(counts))

    @property
    def L(self) -> int:
        return 1 << self.R

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs)

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.symbols)}

    @cached_property
    def float_probs(self) -> tuple[float, ...]:
        return tuple(float(p) for p in self.probs)

    def entropy(self) -> Number:
        """H(S) in bits/symbol; an exact Fraction when every p_s is a power of 1/2."""
        return entropy(self.probs)


def entropy(probs: Sequence[Number]) -> Number:
    if all(isinstance(p, Fraction) and p.numerator == 1 and p.denominator & (p.denominator - 1) == 0
           for p in probs):
        return sum((p * (p.denominator.bit_length() - 1) for p in probs), Fraction(0))
    return math.fsum(float(p) * -math.log2(float(p)) for p in probs)


def quantize(probs: Sequence | Mapping, R: int, mode: str = "best_fit",
             symbols: Sequence | None = None) -> SymbolDistribution:
    """Choose integer state counts L_s approximating p_s * L.

    ``best_fit`` pins every tail symbol (p_s * L < 1) to a single state, starts
    the rest at floor(p_s * L) and then corrects the total: missing states go to
    the largest fractional parts (ties: higher p_s, then alphabet order); any
    excess caused by the tail is taken from the symbols with the most states.
    ``given_counts`` requires every p_s * L to be an integer and uses it as is.
    """
    if isinstance(probs, Mapping):
        symbols = tuple(probs) if symbols is None else tuple(symbols)
        probs = [probs[s] for s in symbols]
    probs = tuple(_as_number(p) for p in probs)
    _check_probs(probs)
    n = len(probs)
    if symbols is None:
        symbols = tuple(range(n))
    if R < 1:
        raise DistributionError("R must be a positive integer")
    L = 1 << R
    if n > L:
        raise DistributionError(f"alphabet of {n} symbols does not fit into L={L} states")
    scaled = [p * L for p in probs]

    if mode == "given_counts":
        counts = []
        for v in scaled:
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    raise DistributionError(f"p_s * L = {v} is not an integer")
                counts.append(int(v))
            else:
                if abs(v - round(v)) > 1e-9:
                    raise DistributionError(f"p_s * L = {v} is not an integer")
                counts.append(int(round(v)))
        return SymbolDistribution(symbols, probs, R, counts)
    if mode != "best_fit":
        raise ValueError(f"unknown quantisation mode {mode!r}")

    counts = [1 if v < 1 else max(1, math.floor(v)) for v in scaled]
    frac = [v - math.floor(v) if v >= 1 else Fraction(0) for v in scaled]
    tail = [v < 1 for v in scaled]
    deficit = L - sum(counts)
    if deficit > 0:
        order = sorted((i for i in range(n) if not tail[i]),
                       key=lambda i: (-frac[i], -probs[i], i))
        # a second pass can only happen when every non-tail symbol already got +1
        while deficit > 0:
            for i in order:
                if deficit == 0:
                    break
                counts[i] += 1
                deficit -= 1
    while deficit < 0:
        i = max((i for i in range(n) if counts[i] > 1),
                key=lambda i: (counts[i], -frac[i], -i))
        counts[i] -= 1
        deficit += 1
    return SymbolDistribution(symbols, probs, R, counts)


@dataclass(frozen=True)
class SymbolSpread:
    """Assignment of every state x in I = {L..2L-1} to a symbol.

    ``labels[x - L]`` is the alphabet index of the symbol owning state x.
    """

    symbols: tuple
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
        L = len(self.labels)
        if L < 2 or L & (L - 1):
            raise SpreadError(f"spread length {L} is not a power of two >= 2")
        n = len(self.symbols)
        if any(not 0 <= v < n for v in self.labels):
            raise SpreadError("label outside the alphabet")

    @classmethod
    def from_sets(cls, symbols: Sequence, state_sets: Sequence[Iterable[int]]) -> "SymbolSpread":
        """Build from per-symbol state sets (absolute states, any order)."""
        sets = [sorted(s) for s in state_sets]
        L = sum(len(s) for s in sets)
        labels = [-1] * L
        for i, states in enumerate(sets):
            for x in states:
                if not L <= x < 2 * L:
                    raise SpreadError(f"state {x} outside I=[{L},{2 * L - 1}]")
                if labels[x - L] != -1:
                    raise SpreadError(f"state {x} assigned twice")
                labels[x - L] = i
        return cls(tuple(symbols), tuple(labels))

    @classmethod
    def from_symbol_row(cls, symbols: Sequence, row: Sequence) -> "SymbolSpread":
        """Build from the symbol owning each state, in state order."""
        index = {s: i for i, s in enumerate(symbols)}
        try:
            return cls(tuple(symbols), tuple(index[s] for s in row))
        except KeyError as exc:
            raise SpreadError(f"symbol {exc.args[0]!r} not in alphabet") from None

    @property
    def L(self) -> int:
        return len(self.labels)

    @property
    def R(self) -> int:
        return self.L.bit_length() - 1

    @cached_property
    def state_sets(self) -> tuple[tuple[int, ...], ...]:
        """Ascending state sets, one per symbol."""
        sets: list[list[int]] = [[] for _ in self.symbols]
        for i, v in enumerate(self.labels):
            sets[v].append(self.L + i)
        return tuple(tuple(s) for s in sets)

    @cached_property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.state_sets)

    def symbol_at(self, x: int) -> Hashable:
        return self.symbols[self.labels[x - self.L]]

    def row(self) -> list:
        """Symbols in state order (the spread's table form)."""
        return [self.symbols[v] for v in self.labels]

    def check(self, dist: SymbolDistribution) -> None:
        if self.L != dist.L:
            raise SpreadError(f"spread has L={self.L}, distribution L={dist.L}")
        if self.symbols != dist.symbols:
            raise SpreadError("spread and distribution alphabets differ")
        if self.counts != dist.counts:
            raise SpreadError(f"spread counts {self.counts} != distribution counts {dist.counts}")


@dataclass(frozen=True)
class CodingTables:
    """Encoding table E(s, x) -> (x', bits) and decoding table D(x) -> (s, y)."""

    dist: SymbolDistribution
    spread: SymbolSpread
    # next_state[s][x - L] and nbits[s][x - L]
    next_state: tuple[tuple[int, ...], ...]
    nbits: tuple[tuple[int, ...], ...]
    # decode_symbol[x - L], decode_y[x - L]
    decode_symbol: tuple[int, ...]
    decode_y: tuple[int, ...]
    _flat_next: list[int] = field(repr=False, compare=False, default_factory=list)
    _flat_bits: list[int] = field(repr=False, compare=False, default_factory=list)

    @property
    def L(self) -> int:
        return self.dist.L

    @property
    def R(self) -> int:
        return self.dist.R

    def C(self, s: int, y: int) -> int:
        """Coding function: the (y - L_s)-th smallest state of symbol index s."""
        count = self.dist.counts[s]
        if not count <= y < 2 * count:
            raise ValueError(f"y={y} outside [{count}, {2 * count - 1}]")
        return self.spread.state_sets[s][y - count]

    def D(self, x: int) -> tuple[int, int]:
        i = x - self.L
        return self.decode_symbol[i], self.decode_y[i]

    def entry(self, s: int, x: int) -> tuple[int, str]:
        """(next state, emitted bit string) for symbol index s in state x."""
        k = self.nbits[s][x - self.L]
        bits = format(x & ((1 << k) - 1), f"0{k}b") if k else ""
        return self.next_state[s][x - self.L], bits

    def read_bits(self, y: int) -> int:
        """k(y) = R - floor(lg y): bits the decoder reads after D(x) = (s, y)."""
        return self.R - (y.bit_length() - 1)


def build_tables(dist: SymbolDistribution, spread: SymbolSpread) -> CodingTables:
    spread.check(dist)
    L = dist.L
    sets = spread.state_sets
    next_state, nbits = [], []
    for s, count in enumerate(dist.counts):
        row_next, row_bits = [], []
        for x in range(L, 2 * L):
            k = state_bits(x, count)
            row_bits.append(k)
            row_next.append(sets[s][(x >> k) - count])
        next_state.append(tuple(row_next))
        nbits.append(tuple(row_bits))
    dec_sym = [0] * L
    dec_y = [0] * L
    for s, states in enumerate(sets):
        for j, x in enumerate(states):
            dec_sym[x - L] = s
            dec_y[x - L] = dist.counts[s] + j
    return CodingTables(
        dist, spread, tuple(next_state), tuple(nbits), tuple(dec_sym), tuple(dec_y),
        [v for row in next_state for v in row], [v for row in nbits for v in row],
    )


@dataclass(frozen=True)
class BinaryFrame:
    """Encoder output: packed payload b_1|b_2|...|b_l plus the final state x_0."""

    payload: bytes
    bit_length: int
    final_state: int


def encode(frame: Iterable, tables: CodingTables, x_init: int | None = None) -> BinaryFrame:
    """Encode symbols last-to-first.

    Each step emits the k low bits of the state (MSB first) and jumps to
    C(s, x >> k).  The per-step strings are stored in frame order so the
    decoder can consume them front to back.
    """
    L = tables.L
    x = L if x_init is None else x_init
    if not L <= x < 2 * L:
        raise ValueError(f"initial state {x} outside I=[{L},{2 * L - 1}]")
    index = tables.dist.index
    try:
        idx = [index[s] for s in frame]
    except KeyError as exc:
        raise ValueError(f"symbol {exc.args[0]!r} not in alphabet") from None
    nxt, nb = tables._flat_next, tables._flat_bits
    chunks: list[tuple[int, int]] = []
    append = chunks.append
    for s in reversed(idx):
        j = s * L + x - L
        k = nb[j]
        append((x & ((1 << k) - 1), k))
        x = nxt[j]
    writer = BitWriter()
    for value, k in reversed(chunks):
        writer.write(value, k)
    return BinaryFrame(writer.getvalue(), writer.bit_length, x)


def decode(frame: BinaryFrame, tables: CodingTables, length: int) -> list:
    """Decode ``length`` symbols, first to last."""
    L = tables.L
    x = frame.final_state
    if not L <= x < 2 * L:
        raise DecodeError(f"final state {x} outside I=[{L},{2 * L - 1}]")
    reader = BitReader(frame.payload, frame.bit_length)
    R = tables.R
    dec_sym, dec_y, symbols = tables.decode_symbol, tables.decode_y, tables.dist.symbols
    out = []
    for _ in range(length):
        s = dec_sym[x - L]
        y = dec_y[x - L]
        k = R - (y.bit_length() - 1)
        try:
            b = reader.read(k)
        except EOFError:
            raise DecodeError("payload exhausted before the frame was complete") from None
        x = (y << k) | b
        if not L <= x < 2 * L:
            raise DecodeError(f"state {x} left I")
        out.append(symbols[s])
    return out
