"""Bit-granular I/O helpers (MSB-first) and LEB128 varints."""

from .errors import CorruptStreamError, StateError


class BitWriter:
    """Accumulates bits MSB-first into bytes."""

    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nacc = 0
        self._closed = False

    def write_bit(self, bit):
        if self._closed:
            raise StateError("BitWriter already closed")
        self._acc = (self._acc << 1) | (bit & 1)
        self._nacc += 1
        if self._nacc == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def write_bits(self, value, count):
        """Write `count` bits of `value`, most significant first."""
        for shift in range(count - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    @property
    def bit_count(self):
        return len(self._bytes) * 8 + self._nacc

    def getvalue(self):
        """Zero-pad to a byte boundary and return (bytes, exact bit count)."""
        nbits = self.bit_count
        out = bytes(self._bytes)
        if self._nacc:
            out += bytes([self._acc << (8 - self._nacc)])
        self._closed = True
        return out, nbits


class BitReader:
    """Reads bits MSB-first.

    strict=True raises CorruptStreamError at end of data; strict=False
    yields zero bits past the end (arithmetic-decoder convention) up to
    `overrun_limit` extra bits, then raises.
    """

    def __init__(self, data, bit_length=None, strict=True, overrun_limit=64):
        self._data = data
        self._bit_length = 8 * len(data) if bit_length is None else bit_length
        self._pos = 0
        self._strict = strict
        self._overrun_limit = overrun_limit

    @property
    def bits_consumed(self):
        return self._pos

    def read_bit(self):
        if self._pos >= self._bit_length:
            if self._strict:
                raise CorruptStreamError("bit stream exhausted")
            if self._pos >= self._bit_length + self._overrun_limit:
                raise CorruptStreamError("bit stream exhausted (overrun)")
            self._pos += 1
            return 0
        byte = self._data[self._pos >> 3]
        bit = (byte >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count):
        value = 0
        for _ in range(count):
            value = (value << 1) | self.read_bit()
        return value


def write_uvarint(value):
    """LEB128-encode a non-negative integer."""
    if value < 0:
        raise ValueError("uvarint is unsigned")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def read_uvarint(data, offset):
    """Decode a LEB128 integer at `offset`; returns (value, next offset)."""
    value = 0
    shift = 0
    while True:
        if offset >= len(data):
            raise CorruptStreamError("truncated varint")
        byte = data[offset]
        offset += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, offset
        shift += 7
        if shift > 63:
            raise CorruptStreamError("varint too long")
