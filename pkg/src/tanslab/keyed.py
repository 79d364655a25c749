"""Keyed ANS: a secret, optimised spread derived from a shared key.

Both parties know the public probabilities.  They quantise them, build the
public rank-matched spread, then run a fixed-length swap search whose
generator is seeded from the key::

    seed = first 8 bytes (big-endian) of
           HMAC-SHA256(K, b"tanslab-keyed-ans" || version || SHA256(dist))

where ``dist`` is the canonical serialisation of R and, per symbol, its
repr, exact probability and state count.  The search never stops early, so
both sides do identical work.  This hides the spread, nothing more: it is
not a cipher with any claimed strength.
"""
from __future__ import annotations

import hashlib
import hmac
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from .core import BinaryFrame, SymbolDistribution, SymbolSpread, build_tables, decode, encode, quantize
from .errors import DecodeError
from .formats import Container, frame_checksum, pack_container, unpack_container
from .markov import RedundancyReport
from .optimize import SearchConfig, SearchTrace, swap_search
from .tuning import rank_match_spread

PROTOCOL_VERSION = 1
KEY_BYTES = 32
DEFAULT_ITERATIONS = 1000


def _prob_token(p) -> str:
    return f"{p.numerator}/{p.denominator}" if isinstance(p, Fraction) else float(p).hex()


def dist_digest(dist: SymbolDistribution) -> bytes:
    h = hashlib.sha256()
    h.update(f"R={dist.R}\n".encode())
    for s, p, c in zip(dist.symbols, dist.probs, dist.counts):
        h.update(f"{s!r}\t{_prob_token(p)}\t{c}\n".encode())
    return h.digest()


def derive_seed(key: bytes, dist: SymbolDistribution, version: int = PROTOCOL_VERSION) -> int:
    if len(key) != KEY_BYTES:
        raise ValueError(f"key must be {KEY_BYTES} bytes, got {len(key)}")
    msg = b"tanslab-keyed-ans" + version.to_bytes(2, "big") + dist_digest(dist)
    return int.from_bytes(hmac.new(key, msg, hashlib.sha256).digest()[:8], "big")


@dataclass(frozen=True)
class KeyedSession:
    dist: SymbolDistribution
    spread: SymbolSpread
    report: RedundancyReport
    public_spread: SymbolSpread
    trace: SearchTrace
    version: int = PROTOCOL_VERSION

    def spread_digest(self) -> str:
        return hashlib.sha256(bytes(self.spread.labels) if self.dist.n <= 256
                              else repr(self.spread.labels).encode()).hexdigest()


def derive_keyed_spread(key: bytes, probs: Sequence, R: int, iterations: int = DEFAULT_ITERATIONS,
                        symbols: Sequence | None = None, arithmetic: str = "float") -> KeyedSession:
    dist = quantize(probs, R, symbols=symbols)
    public = rank_match_spread(dist)
    cfg = SearchConfig(iterations=iterations, threshold=None, seed=derive_seed(key, dist),
                       initial=public, objective="min", arithmetic=arithmetic)
    trace = swap_search(dist, cfg)
    return KeyedSession(dist, trace.spread, trace.report, public, trace)


def keyed_encode(session: KeyedSession, frame: Sequence[int], x_init: int | None = None) -> bytes:
    tables = build_tables(session.dist, session.spread)
    frame = list(frame)
    binary = encode(frame, tables, x_init)
    return pack_container(session.dist, binary, len(frame), checksum=frame_checksum(frame))


def keyed_decode(session: KeyedSession, data: bytes | Container) -> list[int]:
    box = unpack_container(data) if isinstance(data, (bytes, bytearray)) else data
    if not box.keyed:
        raise DecodeError("not a keyed container")
    if box.counts != session.dist.counts or box.symbols != session.dist.symbols:
        raise DecodeError("container does not match the session's public distribution")
    tables = build_tables(session.dist, session.spread)
    try:
        out = decode(box.frame, tables, box.length)
    except DecodeError as exc:
        raise DecodeError(f"keyed decode failed (wrong key?): {exc}") from None
    if frame_checksum(out) != box.checksum:
        raise DecodeError("frame checksum mismatch (wrong key or corrupted data)")
    return out


def keyed_roundtrip(session: KeyedSession, frame: Sequence[int],
                    receiver: KeyedSession | None = None) -> tuple[bytes, list[int]]:
    """Encode with ``session``, decode with ``receiver`` (default: the same session)."""
    data = keyed_encode(session, frame)
    return data, keyed_decode(session if receiver is None else receiver, data)
