"""Coded-stream container: header, octree, side info, payloads.

Layout (all multi-byte integers little-endian; normative copy in
FORMAT.md):

    magic   4 bytes  b"VXPC"
    u16     format version (currently 1)
    u8      grid depth n
    u8      maximum partition level
    u8      option flags: bit0 = context extension, bit1 = single-model
    u8      model count, then per model: u8 log2(block size), u64 hash
    u32     octree byte length, then the octree bytes
    u32     flag-segment bit length, then ceil(bits/8) packed bytes
    u32     mode-segment bit length, then ceil(bits/8) packed bytes
    u32     payload count, then per payload: LEB128 byte length + bytes

The accounting identity (checked by tests at zero tolerance) is:
8*len(stream) = structural bits + 8*octree bytes + flag bits + mode
bits + payload bits, where "structural" covers the fixed header, the
model table, every length field, LEB128 prefixes, and the bit-segment
padding to byte boundaries.
"""

import struct
from dataclasses import dataclass, field

from .bits import read_uvarint, write_uvarint
from .errors import CorruptStreamError, UnsupportedFormatError

MAGIC = b"VXPC"
VERSION = 1

_FLAG_EXTENSION = 0x01
_FLAG_SINGLE_MODEL = 0x02


@dataclass
class ParsedStream:
    depth: int
    max_level: int
    use_extension: bool
    single_model: bool
    model_hashes: dict            # block size -> u64 architecture hash
    octree: bytes
    flag_bytes: bytes
    flag_bits: int
    mode_bytes: bytes
    mode_bits: int
    payloads: list = field(default_factory=list)


def assemble(depth, max_level, use_extension, single_model, model_hashes,
             octree, flag_bytes, flag_bits, mode_bytes, mode_bits, payloads):
    """Serialize all components into the container byte string."""
    if len(flag_bytes) != (flag_bits + 7) // 8:
        raise ValueError("flag segment byte/bit lengths disagree")
    if len(mode_bytes) != (mode_bits + 7) // 8:
        raise ValueError("mode segment byte/bit lengths disagree")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out += struct.pack("<B", depth)
    out += struct.pack("<B", max_level)
    flags = (_FLAG_EXTENSION if use_extension else 0) \
        | (_FLAG_SINGLE_MODEL if single_model else 0)
    out += struct.pack("<B", flags)
    sizes = sorted(model_hashes)
    out += struct.pack("<B", len(sizes))
    for size in sizes:
        log2 = size.bit_length() - 1
        if 1 << log2 != size:
            raise ValueError(f"model size {size} is not a power of two")
        out += struct.pack("<BQ", log2, model_hashes[size])
    out += struct.pack("<I", len(octree))
    out += octree
    out += struct.pack("<I", flag_bits)
    out += flag_bytes
    out += struct.pack("<I", mode_bits)
    out += mode_bytes
    out += struct.pack("<I", len(payloads))
    for payload in payloads:
        out += write_uvarint(len(payload))
        out += payload
    return bytes(out)


class _Cursor:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise CorruptStreamError(
                f"stream truncated at byte {self.pos} reading {what}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what):
        return self.take(1, what)[0]

    def u16(self, what):
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what):
        return struct.unpack("<Q", self.take(8, what))[0]


def parse(data):
    """Parse the container; raises on malformed input."""
    cur = _Cursor(data)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise UnsupportedFormatError(f"not a coded stream (magic {magic!r})")
    version = cur.u16("version")
    if version > VERSION:
        raise UnsupportedFormatError(f"stream format version {version} "
                                     f"is newer than supported ({VERSION})")
    depth = cur.u8("depth")
    max_level = cur.u8("max level")
    flags = cur.u8("option flags")
    if flags & ~(_FLAG_EXTENSION | _FLAG_SINGLE_MODEL):
        raise CorruptStreamError(f"unknown option flag bits 0x{flags:02x}")
    n_models = cur.u8("model count")
    model_hashes = {}
    for _ in range(n_models):
        log2 = cur.u8("model size")
        model_hashes[1 << log2] = cur.u64("model hash")
    octree_len = cur.u32("octree length")
    octree = cur.take(octree_len, "octree")
    flag_bits = cur.u32("flag segment length")
    flag_bytes = cur.take((flag_bits + 7) // 8, "flag segment")
    mode_bits = cur.u32("mode segment length")
    mode_bytes = cur.take((mode_bits + 7) // 8, "mode segment")
    n_payloads = cur.u32("payload count")
    payloads = []
    for _ in range(n_payloads):
        length, nxt = read_uvarint(data, cur.pos)
        cur.pos = nxt
        payloads.append(cur.take(length, "payload"))
    if cur.pos != len(data):
        raise CorruptStreamError(
            f"{len(data) - cur.pos} trailing bytes after payload segment")
    return ParsedStream(depth=depth, max_level=max_level,
                        use_extension=bool(flags & _FLAG_EXTENSION),
                        single_model=bool(flags & _FLAG_SINGLE_MODEL),
                        model_hashes=model_hashes, octree=octree,
                        flag_bytes=flag_bytes, flag_bits=flag_bits,
                        mode_bytes=mode_bytes, mode_bits=mode_bits,
                        payloads=payloads)


@dataclass
class RateReport:
    """Exact bit accounting of one coded stream."""
    total_bits: int
    occupied_voxels: int
    bpov: float
    structural_bits: int
    octree_bits: int
    flag_bits: int
    mode_bits: int
    payload_bits: int

    @property
    def side_info_bits(self):
        return (self.structural_bits + self.octree_bits + self.flag_bits
                + self.mode_bits)

    @property
    def side_info_share(self):
        return self.side_info_bits / self.total_bits if self.total_bits else 0.0

    def identity_holds(self):
        return self.total_bits == (self.structural_bits + self.octree_bits
                                   + self.flag_bits + self.mode_bits
                                   + self.payload_bits)


def structural_bits(parsed):
    """Bits of pure plumbing, computed from the layout (not by
    subtraction): fixed header, model table, length fields, LEB128
    prefixes, and the padding of the two bit segments."""
    fixed = 8 * (4 + 2 + 1 + 1 + 1 + 1) + 72 * len(parsed.model_hashes)
    lengths = 8 * (4 + 4 + 4 + 4)
    prefixes = sum(8 * len(write_uvarint(len(p))) for p in parsed.payloads)
    flag_pad = 8 * len(parsed.flag_bytes) - parsed.flag_bits
    mode_pad = 8 * len(parsed.mode_bytes) - parsed.mode_bits
    return fixed + lengths + prefixes + flag_pad + mode_pad


def bpov_report(data, occupied_voxels):
    """Itemized rate report for a serialized stream."""
    parsed = parse(data)
    report = RateReport(
        total_bits=8 * len(data),
        occupied_voxels=occupied_voxels,
        bpov=8 * len(data) / occupied_voxels if occupied_voxels else 0.0,
        structural_bits=structural_bits(parsed),
        octree_bits=8 * len(parsed.octree),
        flag_bits=parsed.flag_bits,
        mode_bits=parsed.mode_bits,
        payload_bits=sum(8 * len(p) for p in parsed.payloads),
    )
    return report
