"""Stream container: field-exact serialization roundtrips, hostile-input
rejection (including every possible truncation point), and the zero-
tolerance bit-accounting identity."""

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxelcodec import container
from voxelcodec.container import (
    RateReport,
    assemble,
    bpov_report,
    parse,
    structural_bits,
)
from voxelcodec.errors import CorruptStreamError, UnsupportedFormatError


def _segment(bits_len, fill=0x5A):
    return bytes([fill]) * ((bits_len + 7) // 8), bits_len


def _sample_stream(use_extension=False, single_model=False,
                   payloads=(b"\x01\x02", b"", b"\xff" * 300)):
    flag_bytes, flag_bits = _segment(10)
    mode_bytes, mode_bits = _segment(4 if use_extension else 0)
    return assemble(
        depth=10, max_level=3, use_extension=use_extension,
        single_model=single_model,
        model_hashes={64: 0xDEADBEEFCAFEF00D, 8: 7},
        octree=b"\x80\x41\x07", flag_bytes=flag_bytes, flag_bits=flag_bits,
        mode_bytes=mode_bytes, mode_bits=mode_bits,
        payloads=list(payloads))


# ---------------------------------------------------------------- identity

def test_parse_roundtrip_fields():
    data = _sample_stream(use_extension=True)
    p = parse(data)
    assert p.depth == 10
    assert p.max_level == 3
    assert p.use_extension is True
    assert p.single_model is False
    assert p.model_hashes == {64: 0xDEADBEEFCAFEF00D, 8: 7}
    assert p.octree == b"\x80\x41\x07"
    assert (p.flag_bits, p.flag_bytes) == (10, b"\x5a\x5a")
    assert (p.mode_bits, p.mode_bytes) == (4, b"\x5a")
    assert p.payloads == [b"\x01\x02", b"", b"\xff" * 300]


st_payloads = st.lists(st.binary(max_size=40), max_size=6)
st_bits = st.integers(0, 40)


@given(depth=st.integers(1, 16), max_level=st.integers(1, 5),
       ext=st.booleans(), flag_bits=st_bits, mode_bits=st_bits,
       payloads=st_payloads,
       octree=st.binary(max_size=64),
       hashes=st.dictionaries(st.sampled_from([8, 16, 32, 64, 128]),
                              st.integers(0, 2 ** 64 - 1), max_size=3))
@settings(max_examples=60)
def test_assemble_parse_roundtrip(depth, max_level, ext, flag_bits,
                                  mode_bits, payloads, octree, hashes):
    flag_bytes = bytes((flag_bits + 7) // 8)
    mode_bytes = bytes((mode_bits + 7) // 8)
    data = assemble(depth, max_level, ext, False, hashes, octree,
                    flag_bytes, flag_bits, mode_bytes, mode_bits, payloads)
    p = parse(data)
    assert (p.depth, p.max_level, p.use_extension, p.single_model) == \
        (depth, max_level, ext, False)
    assert p.model_hashes == hashes
    assert p.octree == octree
    assert p.flag_bits == flag_bits and p.flag_bytes == flag_bytes
    assert p.mode_bits == mode_bits and p.mode_bytes == mode_bytes
    assert p.payloads == payloads


def test_assemble_validation():
    with pytest.raises(ValueError):
        assemble(10, 3, False, False, {}, b"", b"\x00", 10, b"", 0, [])
    with pytest.raises(ValueError):
        assemble(10, 3, False, False, {}, b"", b"\x00\x00", 10, b"\x00", 0,
                 [])
    with pytest.raises(ValueError):
        assemble(10, 3, False, False, {12: 0}, b"", b"", 0, b"", 0, [])


def test_single_model_flag_roundtrips():
    p = parse(_sample_stream(single_model=True))
    assert p.single_model is True and p.use_extension is False


# ---------------------------------------------------------- hostile inputs

def test_parse_rejects_bad_magic():
    data = _sample_stream()
    with pytest.raises(UnsupportedFormatError, match="magic"):
        parse(b"XXXX" + data[4:])


def test_parse_rejects_newer_version():
    data = bytearray(_sample_stream())
    data[4:6] = struct.pack("<H", container.VERSION + 1)
    with pytest.raises(UnsupportedFormatError, match="newer"):
        parse(bytes(data))


def test_parse_rejects_unknown_option_flags():
    data = bytearray(_sample_stream())
    data[8] |= 0x04
    with pytest.raises(CorruptStreamError, match="option flag"):
        parse(bytes(data))


def test_parse_rejects_trailing_bytes():
    data = _sample_stream()
    with pytest.raises(CorruptStreamError, match="trailing"):
        parse(data + b"\x00")


def test_parse_rejects_every_truncation():
    """No strict prefix of a valid stream may parse; each must raise a
    typed error rather than index out of range."""
    data = _sample_stream(use_extension=True)
    for cut in range(len(data)):
        with pytest.raises((CorruptStreamError, UnsupportedFormatError)):
            parse(data[:cut])


# ------------------------------------------------------------- accounting

def test_bit_accounting_identity_exact():
    for ext in (False, True):
        data = _sample_stream(use_extension=ext)
        report = bpov_report(data, occupied_voxels=1000)
        assert report.identity_holds()
        assert report.total_bits == 8 * len(data)
        assert report.total_bits == (report.structural_bits
                                     + report.octree_bits
                                     + report.flag_bits + report.mode_bits
                                     + report.payload_bits)
        assert report.bpov == report.total_bits / 1000


def test_structural_bits_counts_padding_and_prefixes():
    # 10 flag bits occupy 2 bytes -> 6 padding bits; a 300-byte payload
    # needs a 2-byte LEB128 prefix, the short ones 1 byte each
    p = parse(_sample_stream())
    s = structural_bits(p)
    fixed = 8 * 10 + 72 * 2           # header+counts, two model entries
    lengths = 8 * 16                  # four u32 length fields
    prefixes = 8 * (1 + 1 + 2)
    flag_pad = 16 - 10
    assert s == fixed + lengths + prefixes + flag_pad


def test_rate_report_side_info():
    r = RateReport(total_bits=1000, occupied_voxels=10, bpov=100.0,
                   structural_bits=200, octree_bits=100, flag_bits=50,
                   mode_bits=10, payload_bits=640)
    assert r.side_info_bits == 360
    assert r.side_info_share == 0.36
    assert r.identity_holds()
    r.payload_bits = 641
    assert not r.identity_holds()


def test_bpov_zero_voxels():
    data = _sample_stream()
    assert bpov_report(data, 0).bpov == 0.0
