"""Context-adaptive binary arithmetic coder: quantization edges,
perfect roundtrips, batch/reference equivalence, wire-format pins,
error states, and near-entropy compression."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxelcodec.coder import (
    PROB_SCALE,
    PROB_SCALE_BITS,
    BinaryArithmeticDecoder,
    BinaryArithmeticEncoder,
    encode_bits,
    quantize_p1,
)
from voxelcodec.errors import CorruptStreamError, ParameterError, StateError


# ----------------------------------------------------------- quantization

def test_quantize_edges():
    assert PROB_SCALE_BITS == 16 and PROB_SCALE == 65536
    assert quantize_p1(0.0) == 1           # zero never allowed
    assert quantize_p1(1.0) == 65535       # one never allowed
    assert quantize_p1(2.0 ** -16) == 1
    assert quantize_p1(2.0 ** -17) == 1    # rounds to 0, clamped up
    assert quantize_p1(1.0 - 2.0 ** -16) == 65535
    assert quantize_p1(0.5) == 32768
    assert quantize_p1(np.float32(0.25)) == 16384


def test_quantize_scalar_array_agreement():
    rng = np.random.default_rng(1)
    vals = rng.random(500).astype(np.float32)
    arr = quantize_p1(vals)
    assert arr.dtype == np.uint32
    for v, q in zip(vals, arr):
        s = quantize_p1(v)
        assert isinstance(s, int)
        assert s == q


def test_quantize_rejects_non_finite():
    with pytest.raises(ParameterError):
        quantize_p1(float("nan"))
    with pytest.raises(ParameterError):
        quantize_p1(np.array([0.5, np.inf]))


# -------------------------------------------------------------- roundtrip

def _roundtrip(pairs):
    enc = BinaryArithmeticEncoder()
    for bit, p in pairs:
        enc.encode(bit, p)
    payload, nbits = enc.flush()
    assert nbits == 8 * len(payload)
    dec = BinaryArithmeticDecoder(payload)
    return payload, [dec.decode(p) for _, p in pairs]


@given(st.lists(st.tuples(st.integers(0, 1),
                          st.floats(0.0005, 0.9995, allow_nan=False)),
                max_size=300))
@settings(max_examples=50)
def test_roundtrip_random_sequences(pairs):
    _, decoded = _roundtrip(pairs)
    assert decoded == [b for b, _ in pairs]


def test_roundtrip_adversarial_probabilities():
    """Symbols that contradict their model: worst case for renorm."""
    pairs = [(1, 2.0 ** -16), (0, 1 - 2.0 ** -16)] * 40
    _, decoded = _roundtrip(pairs)
    assert decoded == [b for b, _ in pairs]


def test_empty_stream():
    enc = BinaryArithmeticEncoder()
    payload, nbits = enc.flush()
    assert nbits == 8 * len(payload)
    BinaryArithmeticDecoder(payload)  # must construct without error


def test_probability_array_inputs_match_scalar():
    """Encoding with float32 probabilities must agree between the
    scalar class API and the batch helper."""
    rng = np.random.default_rng(3)
    bits = (rng.random(200) < 0.4).astype(np.uint8)
    probs = np.clip(rng.random(200), 0.01, 0.99).astype(np.float32)
    enc = BinaryArithmeticEncoder()
    for b, p in zip(bits, probs):
        enc.encode(int(b), p)
    ref_payload, ref_bits = enc.flush()
    payload, nbits = encode_bits(bits, probs)
    assert payload == ref_payload
    assert nbits == ref_bits


@given(st.lists(st.tuples(st.integers(0, 1),
                          st.floats(0.001, 0.999, allow_nan=False)),
                max_size=200))
@settings(max_examples=40)
def test_batch_encoder_byte_identical_to_reference(pairs):
    enc = BinaryArithmeticEncoder()
    for bit, p in pairs:
        enc.encode(bit, p)
    ref = enc.flush()
    got = encode_bits(np.array([b for b, _ in pairs], dtype=np.uint8),
                      np.array([p for _, p in pairs]))
    assert got == ref


# ------------------------------------------------------------- format pins

def test_pinned_stream_short():
    """Byte-level pin: any change here breaks decodability of existing
    files and must be treated as a format break."""
    enc = BinaryArithmeticEncoder()
    for b, p in [(0, 0.3), (1, 0.3), (1, 0.9), (0, 0.5),
                 (1, 0.7), (0, 0.1), (1, 0.5), (1, 0.99)]:
        enc.encode(b, p)
    assert enc.flush() == (bytes.fromhex("94"), 8)


def test_pinned_stream_long():
    rng = np.random.default_rng(99)
    bits = (rng.random(64) < 0.3).astype(np.uint8)
    probs = np.clip(rng.random(64), 0.05, 0.95)
    payload, nbits = encode_bits(bits, probs)
    assert payload == bytes.fromhex("0272111b86431f1c317eb0")
    assert nbits == 88


# ------------------------------------------------------------ error states

def test_encoder_state_errors():
    enc = BinaryArithmeticEncoder()
    enc.encode(1, 0.5)
    enc.flush()
    with pytest.raises(StateError):
        enc.flush()
    with pytest.raises(StateError):
        enc.encode(0, 0.5)


def test_encoder_rejects_bad_symbol():
    enc = BinaryArithmeticEncoder()
    with pytest.raises(ParameterError):
        enc.encode(2, 0.5)
    with pytest.raises(ParameterError):
        enc.encode(1, float("nan"))


def test_encode_bits_validation():
    with pytest.raises(ParameterError):
        encode_bits([0, 1], [0.5])
    with pytest.raises(ParameterError):
        encode_bits([0, 2], [0.5, 0.5])


def test_decoder_overrun_raises():
    """A decoder driven past the stream tolerates a bounded zero-fill
    tail (the encoder's final interval truncation), then fails loudly
    instead of inventing data."""
    enc = BinaryArithmeticEncoder()
    enc.encode(1, 0.5)
    payload, _ = enc.flush()
    dec = BinaryArithmeticDecoder(payload)
    with pytest.raises(CorruptStreamError):
        for _ in range(10000):
            dec.decode(0.5)


# ----------------------------------------------------------- rate sanity

def test_rate_close_to_entropy():
    rng = np.random.default_rng(7)
    n = 4000
    bits = (rng.random(n) < 0.9).astype(np.uint8)
    payload, nbits = encode_bits(bits, np.full(n, 0.9))
    entropy = -(0.9 * np.log2(0.9) + 0.1 * np.log2(0.1))  # 0.469 bits
    rate = nbits / n
    assert rate == pytest.approx(entropy, abs=0.02)
    # a mismatched model must cost measurably more
    _, uninformed = encode_bits(bits, np.full(n, 0.5))
    assert uninformed / n == pytest.approx(1.0, abs=0.02)
    assert uninformed > nbits


def test_rate_skewed_probabilities():
    """Strongly predictable symbols approach their tiny entropy."""
    n = 2048
    bits = np.zeros(n, dtype=np.uint8)
    payload, nbits = encode_bits(bits, np.full(n, 1.0 / 1024.0))
    # H(1/1024) ~ 0.0112 bits/symbol
    assert nbits / n < 0.02
    dec = BinaryArithmeticDecoder(payload)
    assert all(dec.decode(1.0 / 1024.0) == 0 for _ in range(n))
