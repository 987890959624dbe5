"""Binary arithmetic coder driven by externally supplied probabilities.

32-bit low/high interval registers with carry-less renormalization
(pending-bit scheme). The only lossy step on a probability is its
quantization to a 16-bit integer scale, applied identically on both
sides, so encoder and decoder walk bit-identical interval sequences.

Payloads are raw bytes, MSB-first within each byte. Each coded block is
flushed independently, which keeps payloads self-contained and lets the
partitioner compare candidate costs by exact byte length. A decoder may
read a few bits past the payload end (the flush drops an implicit
all-zero tail); reads are zero-filled within a small allowance and only
then treated as stream corruption.
"""

import numpy as np
from numba import njit

from .bits import BitReader, BitWriter
from .errors import ParameterError, StateError

_TOP = 0xFFFFFFFF
_HALF = 0x80000000
_QUARTER = 0x40000000
_THREEQ = 0xC0000000

PROB_SCALE_BITS = 16
PROB_SCALE = 1 << PROB_SCALE_BITS


def quantize_p1(p1):
    """Map probability-of-1 to the integer scale [1, 65535].

    Accepts a scalar or an ndarray; float32 inputs are widened to
    float64 before rounding so scalar and vector paths agree exactly.
    """
    arr = np.asarray(p1, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ParameterError("probabilities must be finite")
    q = np.floor(arr * PROB_SCALE + 0.5)
    q = np.clip(q, 1, PROB_SCALE - 1).astype(np.uint32)
    if np.ndim(p1) == 0:
        return int(q)
    return q


class BinaryArithmeticEncoder:
    """Reference encoder; one instance per coded block."""

    def __init__(self):
        self._low = 0
        self._high = _TOP
        self._pending = 0
        self._writer = BitWriter()
        self._closed = False

    def _emit(self, bit):
        self._writer.write_bit(bit)
        inv = bit ^ 1
        for _ in range(self._pending):
            self._writer.write_bit(inv)
        self._pending = 0

    def encode(self, bit, p1):
        if self._closed:
            raise StateError("encoder already flushed")
        p = quantize_p1(p1)
        span = self._high - self._low + 1
        r0 = (span * (PROB_SCALE - p)) >> PROB_SCALE_BITS
        if bit == 0:
            self._high = self._low + r0 - 1
        elif bit == 1:
            self._low = self._low + r0
        else:
            raise ParameterError(f"symbol must be 0 or 1, got {bit!r}")
        while True:
            if self._high < _HALF:
                self._emit(0)
            elif self._low >= _HALF:
                self._emit(1)
                self._low -= _HALF
                self._high -= _HALF
            elif self._low >= _QUARTER and self._high < _THREEQ:
                self._pending += 1
                self._low -= _QUARTER
                self._high -= _QUARTER
            else:
                break
            self._low <<= 1
            self._high = (self._high << 1) + 1

    def flush(self):
        """Terminate the interval; returns (payload, bit_count) with
        bit_count == 8 * len(payload). Flushing twice is an error."""
        if self._closed:
            raise StateError("encoder already flushed")
        self._closed = True
        self._pending += 1
        self._emit(0 if self._low < _QUARTER else 1)
        payload, _ = self._writer.getvalue()
        return payload, 8 * len(payload)


class BinaryArithmeticDecoder:
    """Mirror of the encoder; must see the same probability sequence."""

    def __init__(self, payload):
        self._reader = BitReader(payload, strict=False, overrun_limit=64)
        self._low = 0
        self._high = _TOP
        code = 0
        for _ in range(32):
            code = (code << 1) | self._reader.read_bit()
        self._code = code

    def decode(self, p1):
        p = quantize_p1(p1)
        span = self._high - self._low + 1
        r0 = (span * (PROB_SCALE - p)) >> PROB_SCALE_BITS
        threshold = self._low + r0
        if self._code < threshold:
            bit = 0
            self._high = threshold - 1
        else:
            bit = 1
            self._low = threshold
        while True:
            if self._high < _HALF:
                pass
            elif self._low >= _HALF:
                self._low -= _HALF
                self._high -= _HALF
                self._code -= _HALF
            elif self._low >= _QUARTER and self._high < _THREEQ:
                self._low -= _QUARTER
                self._high -= _QUARTER
                self._code -= _QUARTER
            else:
                break
            self._low <<= 1
            self._high = (self._high << 1) + 1
            self._code = (self._code << 1) | self._reader.read_bit()
        return bit


@njit(cache=True)
def _encode_batch(bits, probs_q, out):
    """Numba mirror of BinaryArithmeticEncoder over a whole symbol
    array; returns the emitted bit count. `out` must be zero-filled."""
    low = np.uint64(0)
    high = np.uint64(_TOP)
    half = np.uint64(_HALF)
    quarter = np.uint64(_QUARTER)
    threeq = np.uint64(_THREEQ)
    one = np.uint64(1)
    pending = 0
    pos = 0
    for i in range(bits.size):
        p = np.uint64(probs_q[i])
        span = high - low + one
        r0 = (span * (np.uint64(PROB_SCALE) - p)) >> np.uint64(PROB_SCALE_BITS)
        if bits[i] == 0:
            high = low + r0 - one
        else:
            low = low + r0
        while True:
            if high < half:
                pos += 1  # a zero bit: buffer pre-zeroed
                for _ in range(pending):
                    out[pos >> 3] |= np.uint8(0x80 >> (pos & 7))
                    pos += 1
                pending = 0
            elif low >= half:
                out[pos >> 3] |= np.uint8(0x80 >> (pos & 7))
                pos += 1
                pos += pending  # complements of 1 are 0s: buffer pre-zeroed
                pending = 0
                low -= half
                high -= half
            elif low >= quarter and high < threeq:
                pending += 1
                low -= quarter
                high -= quarter
            else:
                break
            low = low << one
            high = (high << one) + one
    # flush: one more pending bit, then emit the disambiguating bit
    pending += 1
    if low < quarter:
        pos += 1  # a zero bit
        for _ in range(pending):
            out[pos >> 3] |= np.uint8(0x80 >> (pos & 7))
            pos += 1
    else:
        out[pos >> 3] |= np.uint8(0x80 >> (pos & 7))
        pos += 1
        pos += pending
    return pos


def encode_bits(bits, p1s):
    """Encode a whole symbol sequence given per-symbol probabilities.

    bits: 1-D array-like of {0,1}; p1s: matching probabilities of 1.
    Returns (payload, bit_count), byte-identical to running the
    reference encoder symbol by symbol.
    """
    bits = np.ascontiguousarray(np.asarray(bits, dtype=np.uint8).ravel())
    p1s = np.asarray(p1s)
    if p1s.size != bits.size:
        raise ParameterError("bits and probabilities must have equal length")
    if bits.size and (bits.max() > 1):
        raise ParameterError("symbols must be 0 or 1")
    probs_q = np.ascontiguousarray(quantize_p1(p1s.ravel().astype(np.float64)))
    out = np.zeros(3 * bits.size + 16, dtype=np.uint8)
    nbits = int(_encode_batch(bits, probs_q, out))
    nbytes = (nbits + 7) // 8
    return out[:nbytes].tobytes(), 8 * nbytes
