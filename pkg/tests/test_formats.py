from __future__ import annotations

import random
import struct
from fractions import Fraction as F

import pytest

from tanslab.core import SymbolDistribution, SymbolSpread, build_tables, encode, decode
from tanslab.errors import DecodeError, DistributionError, SpreadError
from tanslab.formats import (empty_container, format_dist, format_spread, frame_checksum,
                             pack_container, parse_dist, parse_spread, unpack_container)
from tanslab.markov import analyze

from conftest import TOY_SYMBOLS


def test_parse_dist_probabilities_and_counts():
    syms, probs = parse_dist("a\t3/16\nb\t5/16\n# comment\nc\t0.5\n")
    assert syms == ("a", "b", "c") and probs == (F(3, 16), F(5, 16), F(1, 2))
    syms, probs = parse_dist("x 3\ny 5\nz 8\n")
    assert probs == (F(3, 16), F(5, 16), F(1, 2))
    assert parse_dist(format_dist(syms, probs)) == (syms, probs)


@pytest.mark.parametrize("text", ["a\t0.5\nb\t0.6\n", "a\tx\nb\t1\n", "a\t1\na\t2\n", "a 1 2\n"])
def test_parse_dist_errors(text):
    with pytest.raises(DistributionError):
        parse_dist(text)


def test_spread_text_roundtrip(ex1_spread):
    text = format_spread(ex1_spread)
    assert text.splitlines()[0] == "16\ts3"
    assert parse_spread(text, TOY_SYMBOLS) == ex1_spread
    with pytest.raises(SpreadError):
        parse_spread("16\ta\n18\tb\n")
    with pytest.raises(SpreadError):
        parse_spread("2\ta\n3\tq\n", ["a", "b"])


def _byte_coder():
    d = SymbolDistribution((97, 98, 99), (F(3, 16), F(5, 16), F(1, 2)), 4, (3, 5, 8))
    row = (3, 3, 1, 2, 2, 3, 1, 2, 3, 1, 2, 3, 2, 3, 3, 3)
    return d, SymbolSpread(d.symbols, tuple(r - 1 for r in row))


def test_container_roundtrip_and_layout():
    d, sp = _byte_coder()
    t = build_tables(d, sp)
    frame = [97, 99, 98, 99, 99, 97]
    bf = encode(frame, t)
    data = pack_container(d, bf, len(frame), spread=sp)
    assert data[:4] == b"ANS1"
    R, n = struct.unpack_from(">BH", data, 4)
    assert (R, n) == (4, 3)
    assert struct.unpack_from(">3H", data, 7) == (3, 5, 8)
    length, x0, nbits = struct.unpack_from(">QIQ", data, 13)
    assert (length, x0, nbits) == (6, bf.final_state, bf.bit_length)
    box = unpack_container(data)
    assert not box.keyed and box.spread() == sp and box.symbols == d.symbols
    assert decode(box.frame, build_tables(SymbolDistribution.from_counts(box.counts, box.symbols),
                                          box.spread()), box.length) == frame


def test_keyed_layout_has_checksum():
    d, sp = _byte_coder()
    bf = encode([97, 98], build_tables(d, sp))
    data = pack_container(d, bf, 2, checksum=frame_checksum([97, 98]))
    box = unpack_container(data)
    assert data[:4] == b"ANSK" and box.keyed and box.checksum == frame_checksum([97, 98])
    with pytest.raises(DecodeError):
        box.spread()


def test_corrupt_containers():
    d, sp = _byte_coder()
    bf = encode([97] * 40, build_tables(d, sp))
    data = pack_container(d, bf, 40, spread=sp)
    with pytest.raises(DecodeError):
        unpack_container(b"XXXX" + data[4:])
    with pytest.raises(DecodeError):
        unpack_container(data[:-1])
    with pytest.raises(DecodeError):
        unpack_container(data[:10])
    bad = bytearray(data)
    bad[8] ^= 1  # first state count
    with pytest.raises(DecodeError):
        unpack_container(bytes(bad))


def test_empty_container():
    data = empty_container(8)
    assert len(data) == 27
    box = unpack_container(data)
    assert box.length == 0 and box.counts == () and box.R == 8


def test_compressed_rate_matches_kappa(ex1_tables):
    rng = random.Random(99)
    frame = rng.choices(TOY_SYMBOLS, weights=[3, 5, 8], k=10**6)
    bf = encode(frame, ex1_tables)
    _, rep = analyze(ex1_tables, "float")
    assert abs(bf.bit_length / len(frame) - rep.kappa) / rep.kappa < 1e-3
    assert decode(bf, ex1_tables, len(frame)) == frame
