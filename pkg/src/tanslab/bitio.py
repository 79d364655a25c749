"""MSB-first bit packing."""
from __future__ import annotations


class BitWriter:
    """Accumulates variable-width fields, most significant bit first."""

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_length = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nacc += nbits
        self.bit_length += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._buf.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def getvalue(self) -> bytes:
        """Packed bytes; the final partial byte is zero-padded on the right."""
        if self._nacc:
            return bytes(self._buf) + bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return bytes(self._buf)


class BitReader:
    def __init__(self, data: bytes, bit_length: int | None = None) -> None:
        if bit_length is None:
            bit_length = 8 * len(data)
        if bit_length > 8 * len(data):
            raise ValueError("bit length exceeds the data")
        self._data = data
        self.bit_length = bit_length
        self.pos = 0

    @property
    def remaining(self) -> int:
        return self.bit_length - self.pos

    def read(self, nbits: int) -> int:
        if nbits == 0:
            return 0
        if nbits > self.remaining:
            raise EOFError(f"need {nbits} bits, {self.remaining} left")
        start, end = self.pos, self.pos + nbits
        first, last = start >> 3, (end - 1) >> 3
        chunk = int.from_bytes(self._data[first:last + 1], "big")
        tail = 8 * (last + 1) - end
        self.pos = end
        return (chunk >> tail) & ((1 << nbits) - 1)
