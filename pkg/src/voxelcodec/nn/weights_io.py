"""Binary weights container.

Layout (all integers little-endian):

    magic   4 bytes  b"VXDW"
    u16     format version (currently 1)
    u8      log2 of the model's block size
    u16     entry count
    then per entry:
    u16     name length, followed by that many UTF-8 bytes
    u8      rank
    u32[r]  dims
    f32[n]  values, C order, n = product(dims)

The architecture hash is FNV-1a 64 over each entry's name, a zero
byte, the rank byte, and the dims as u32 LE — values excluded — so
containers can verify that a weights file matches the model shape an
encoded stream was produced with.
"""

import struct

import numpy as np

from ..errors import CorruptStreamError, IncompatibleWeightsError, ShapeError

MAGIC = b"VXDW"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data, h=_FNV_OFFSET):
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def architecture_hash(entries):
    """entries: iterable of (name, shape tuple); order matters."""
    h = _FNV_OFFSET
    for name, shape in entries:
        h = _fnv1a64(name.encode("utf-8"), h)
        h = _fnv1a64(b"\x00", h)
        h = _fnv1a64(bytes([len(shape)]), h)
        h = _fnv1a64(struct.pack("<%dI" % len(shape), *shape), h)
    return h


def save_weights(path, block_size_log2, named_arrays):
    """named_arrays: ordered dict/list of (name, float32 ndarray)."""
    if isinstance(named_arrays, dict):
        named_arrays = list(named_arrays.items())
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out += struct.pack("<B", block_size_log2)
    out += struct.pack("<H", len(named_arrays))
    for name, arr in named_arrays:
        nb = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        out += struct.pack("<H", len(nb))
        out += nb
        out += struct.pack("<B", arr.ndim)
        out += struct.pack("<%dI" % arr.ndim, *arr.shape)
        out += arr.tobytes()
    with open(path, "wb") as f:
        f.write(bytes(out))


class _Cursor:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CorruptStreamError(
                f"weights file truncated at byte {self.pos} "
                f"(needed {n} more bytes)")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self):
        return self.take(1)[0]

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]


def load_weights(path):
    """Returns (block_size_log2, list of (name, float32 ndarray))."""
    with open(path, "rb") as f:
        data = f.read()
    cur = _Cursor(data)
    magic = cur.take(4)
    if magic != MAGIC:
        raise IncompatibleWeightsError(
            f"not a weights file (magic {magic!r})")
    version = cur.u16()
    if version != VERSION:
        raise IncompatibleWeightsError(
            f"unsupported weights format version {version}")
    bs_log2 = cur.u8()
    count = cur.u16()
    entries = []
    for _ in range(count):
        nlen = cur.u16()
        name = cur.take(nlen).decode("utf-8")
        rank = cur.u8()
        dims = struct.unpack("<%dI" % rank, cur.take(4 * rank)) if rank else ()
        n = 1
        for d in dims:
            if d == 0:
                raise CorruptStreamError(f"zero dimension in entry {name!r}")
            n *= d
        raw = cur.take(4 * n)
        arr = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        entries.append((name, arr))
    if cur.pos != len(data):
        raise CorruptStreamError(
            f"{len(data) - cur.pos} trailing bytes after last weights entry")
    return bs_log2, entries


def check_shapes(expected, loaded):
    """expected/loaded: lists of (name, shape or array). Raises ShapeError."""
    exp = [(n, tuple(s if isinstance(s, tuple) else s.shape)) for n, s in expected]
    got = [(n, tuple(a.shape)) for n, a in loaded]
    if len(exp) != len(got):
        raise ShapeError(f"weights entry count mismatch: "
                         f"expected {len(exp)}, got {len(got)}")
    for (en, es), (gn, gs) in zip(exp, got):
        if en != gn:
            raise ShapeError(f"weights entry name mismatch: "
                             f"expected {en!r}, got {gn!r}")
        if es != gs:
            raise ShapeError(f"shape mismatch for {en!r}: "
                             f"expected {es}, got {gs}")
