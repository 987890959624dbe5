"""Rate-driven recursive block partitioning and its decoder mirror.

Each occupied 64-block is split into a tree of sub-blocks. Every node
gets a 2-bit flag: 0 = empty region, 1 = coded as a single block,
2 = split into 8 octants. The encoder compares, per node, the exact
cost of coding it whole against the cost of splitting (including the
2 bits of every flag and, when context extension is on, 2 bits of
extension-size selection per coded leaf) and keeps the cheaper option,
preferring the single block on ties.

Traversal order is normative because it defines which voxels are
already decodable: 64-blocks in ascending raster order of their
origins, children in octant-index order, flags depth-first pre-order.
For any node, the decodable set at its stream position is the union of
earlier 64-blocks and the octant boxes that precede the node's path
inside the current block — a function of position only, never of the
partitioning decisions, which is what makes the cost recursion exact.

Coded leaves use the model matching their size. With context extension
a leaf of side d may instead be predicted inside a larger volume of
side D (table below) whose remaining voxels are filled with already-
decodable occupancies where available and zeros elsewhere; the block
sits at the volume's maximal corner so the causal half-space covers the
filled context. 4-blocks are always predicted through the 8-model with
the block at the origin corner of a zeroed 8-volume; in single-model
operation every leaf goes through the 64-model the same way.
"""

from dataclasses import dataclass, field

import numpy as np

from .bits import BitReader, BitWriter
from .coder import BinaryArithmeticDecoder, encode_bits
from .errors import (
    ConfigError,
    CorruptStreamError,
    MissingModelError,
    ShapeError,
)
from .geometry import BLOCK64
from .occupancy_model import IncrementalPredictor

# Allowed context-volume sides per block side, in mode-index order.
EXTENSION_SIZES = {64: (128, 64), 32: (64, 32), 16: (64, 32, 16),
                   8: (64, 32, 16, 8)}

MIN_BLOCK = 4
MAX_LEVEL = 5
FLAG_EMPTY = 0
FLAG_SINGLE = 1
FLAG_SPLIT = 2


class ModelSet:
    """Occupancy models keyed by block size."""

    def __init__(self, models):
        self.models = {}
        for size, model in dict(models).items():
            if model.config.block_size != size:
                raise ConfigError(f"model registered under size {size} has "
                                  f"block size {model.config.block_size}")
            self.models[size] = model

    def get(self, size):
        return self.models.get(size)

    def require(self, size):
        model = self.models.get(size)
        if model is None:
            raise MissingModelError(f"no model for block size {size}")
        return model

    def sizes(self):
        return sorted(self.models)


# Morton-style octant-path key for every voxel of a 64-block, down to
# 4-blocks (4 levels, 3 bits each). A voxel precedes a node in stream
# order iff its key prefix at the node's depth is smaller.
_PATH_KEY = None


def _path_keys():
    global _PATH_KEY
    if _PATH_KEY is None:
        cx, cy, cz = np.indices((BLOCK64,) * 3, dtype=np.int32)
        key = np.zeros((BLOCK64,) * 3, dtype=np.int32)
        for j in range(4):  # levels: sides 32, 16, 8, 4
            shift = 5 - j
            oct_j = (((cx >> shift) & 1) << 2) | (((cy >> shift) & 1) << 1) \
                | ((cz >> shift) & 1)
            key = (key << 3) | oct_j
        _PATH_KEY = key
    return _PATH_KEY


def _node_key_prefix(rel_origin, side):
    """Key prefix of a node given its origin inside the 64-block."""
    k = (BLOCK64 // side).bit_length() - 1  # levels below the 64-block
    key = 0
    for j in range(k):
        shift = 5 - j
        key = (key << 3) | ((((rel_origin[0] >> shift) & 1) << 2)
                            | (((rel_origin[1] >> shift) & 1) << 1)
                            | ((rel_origin[2] >> shift) & 1))
    return key, 3 * (4 - k)


def preceding_mask(rel_origin, side):
    """Boolean 64-cube: voxels decodable before this node is coded."""
    prefix, shift = _node_key_prefix(rel_origin, side)
    return (_path_keys() >> shift) < prefix


@dataclass
class LeafRecord:
    """One coded leaf, in stream order (for audits and probes)."""
    origin: tuple       # absolute voxel origin
    side: int
    mode: int           # extension-table index, or -1 when not signaled
    model_size: int
    context_size: int   # volume side the prediction ran in
    payload: bytes
    p1: np.ndarray      # probabilities in coded order, float32


@dataclass
class BlockResult:
    """Everything the partitioner produced for one 64-block."""
    origin: tuple
    flags: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    payloads: list = field(default_factory=list)
    leaves: list = field(default_factory=list)
    total_bits: int = 0


def _fill_context(volume, d_origin, extent, lookup):
    """Copy known occupancies into a context volume.

    volume: (D, D, D) float32, pre-zeroed. d_origin: absolute corner
    (may be negative). lookup(block_origin) returns a dense 64-cube of
    already-decodable occupancy, or None for nothing-known/empty.
    """
    d = volume.shape[0]
    lo = [max(c, 0) for c in d_origin]
    hi = [min(c + d, extent) for c in d_origin]
    if any(l >= h for l, h in zip(lo, hi)):
        return
    for bx in range(lo[0] // BLOCK64, (hi[0] - 1) // BLOCK64 + 1):
        for by in range(lo[1] // BLOCK64, (hi[1] - 1) // BLOCK64 + 1):
            for bz in range(lo[2] // BLOCK64, (hi[2] - 1) // BLOCK64 + 1):
                borig = (bx * BLOCK64, by * BLOCK64, bz * BLOCK64)
                src = lookup(borig)
                if src is None:
                    continue
                ov_lo = [max(l, b) for l, b in zip(lo, borig)]
                ov_hi = [min(h, b + BLOCK64) for h, b in zip(hi, borig)]
                if any(l >= h for l, h in zip(ov_lo, ov_hi)):
                    continue
                dst = tuple(slice(l - o, h - o) for l, h, o
                            in zip(ov_lo, ov_hi, d_origin))
                s = tuple(slice(l - b, h - b) for l, h, b
                          in zip(ov_lo, ov_hi, borig))
                volume[dst] = src[s]


class CloudEncoder:
    """Runs the partitioning search over every occupied 64-block."""

    def __init__(self, models, max_level=MAX_LEVEL, use_extension=False,
                 single_model=False, probe=None):
        if not isinstance(models, ModelSet):
            models = ModelSet(models)
        if not 1 <= max_level <= MAX_LEVEL:
            raise ConfigError(f"max_level must be in 1..{MAX_LEVEL}, "
                              f"got {max_level}")
        if use_extension and single_model:
            raise ConfigError("context extension and single-model mode "
                              "are mutually exclusive")
        self.models = models
        self.max_level = max_level
        self.use_extension = use_extension
        self.single_model = single_model
        self.probe = probe
        self.used_model_sizes = set()
        self._extent = None
        self._truth = None
        self._cur_origin = None
        self._cur_dense = None

    # -- context ------------------------------------------------------

    def _context_volume(self, node_origin, side, ctx_side):
        d_origin = tuple(c + side - ctx_side for c in node_origin)
        rel = tuple(o - c for o, c in zip(node_origin, self._cur_origin))
        mask = preceding_mask(rel, side)
        cur_visible = np.where(mask, self._cur_dense, 0).astype(np.float32)

        def lookup(borig):
            if borig == self._cur_origin:
                return cur_visible
            if borig < self._cur_origin:  # raster order on origin tuples
                return self._truth.get(borig)
            return None

        volume = np.zeros((ctx_side,) * 3, dtype=np.float32)
        _fill_context(volume, d_origin, self._extent, lookup)
        return volume

    # -- single-block candidates ---------------------------------------

    def _encode_leaf(self, node_origin, side, dense):
        """Best single-block encoding, or None if no model allows one.

        Returns (payload, mode, model_size, ctx_side, p1s)."""
        bits = dense.ravel().astype(np.uint8)
        if self.single_model:
            model = self.models.get(BLOCK64)
            if model is None:
                return None
            self.used_model_sizes.add(BLOCK64)
            if side == BLOCK64:
                p1 = model.predict_occupancy(dense)
            else:
                p1 = model.predict_embedded(dense, side)
            p1s = p1.ravel()
            payload, _ = encode_bits(bits, p1s)
            return payload, -1, BLOCK64, BLOCK64, p1s

        if side == MIN_BLOCK:
            model = self.models.get(8)
            if model is None:
                return None
            self.used_model_sizes.add(8)
            p1s = model.predict_embedded(dense, MIN_BLOCK).ravel()
            payload, _ = encode_bits(bits, p1s)
            mode = 0 if self.use_extension else -1
            return payload, mode, 8, 8, p1s

        if not self.use_extension:
            model = self.models.get(side)
            if model is None:
                return None
            self.used_model_sizes.add(side)
            p1s = model.predict_occupancy(dense).ravel()
            payload, _ = encode_bits(bits, p1s)
            return payload, -1, side, side, p1s

        best = None
        for mode, ctx_side in enumerate(EXTENSION_SIZES[side]):
            model = self.models.get(ctx_side)
            if model is None:
                continue
            if ctx_side == side:
                volume = dense.astype(np.float32)
                p1s = model.predict_occupancy(volume).ravel()
            else:
                volume = self._context_volume(node_origin, side, ctx_side)
                off = ctx_side - side
                volume[off:, off:, off:] = dense
                p1 = model.predict_occupancy(volume)
                p1s = np.ascontiguousarray(p1[off:, off:, off:]).ravel()
            payload, _ = encode_bits(bits, p1s)
            if best is None or len(payload) < len(best[0]):
                best = (payload, mode, ctx_side, ctx_side, p1s)
        if best is None:
            return None
        self.used_model_sizes.add(best[2])
        return best

    # -- the cost recursion --------------------------------------------

    def _mode_bits(self):
        return 2 if self.use_extension else 0

    def _partition(self, node_origin, side, level, result):
        rel = tuple(o - c for o, c in zip(node_origin, self._cur_origin))
        dense = self._cur_dense[rel[0]:rel[0] + side,
                                rel[1]:rel[1] + side,
                                rel[2]:rel[2] + side]
        if not dense.any():
            result.flags.append(FLAG_EMPTY)
            result.total_bits += 2
            return 2

        single = self._encode_leaf(node_origin, side, dense)
        cost1 = None
        if single is not None:
            payload = single[0]
            cost1 = 2 + self._mode_bits() + 8 * len(payload)

        if level == self.max_level or side == MIN_BLOCK:
            if single is None:
                raise MissingModelError(
                    f"no model can code a {side}-block at maximum "
                    f"partition level {self.max_level}")
            self._commit_leaf(node_origin, side, single, result)
            return cost1

        # candidate 2: split into octants (evaluated on a scratch result)
        scratch = BlockResult(origin=result.origin)
        half = side // 2
        cost2 = 2
        for octant in range(8):
            child = (node_origin[0] + ((octant >> 2) & 1) * half,
                     node_origin[1] + ((octant >> 1) & 1) * half,
                     node_origin[2] + (octant & 1) * half)
            cost2 += self._partition(child, half, level + 1, scratch)

        if cost1 is not None and cost2 >= cost1:
            self._commit_leaf(node_origin, side, single, result)
            return cost1
        result.flags.append(FLAG_SPLIT)
        result.flags.extend(scratch.flags)
        result.modes.extend(scratch.modes)
        result.payloads.extend(scratch.payloads)
        result.leaves.extend(scratch.leaves)
        result.total_bits += 2 + scratch.total_bits
        return cost2

    def _commit_leaf(self, node_origin, side, single, result):
        payload, mode, model_size, ctx_side, p1s = single
        result.flags.append(FLAG_SINGLE)
        if self.use_extension:
            result.modes.append(mode)
        result.payloads.append(payload)
        result.total_bits += 2 + self._mode_bits() + 8 * len(payload)
        leaf = LeafRecord(origin=node_origin, side=side, mode=mode,
                          model_size=model_size, context_size=ctx_side,
                          payload=payload, p1=p1s)
        result.leaves.append(leaf)
        if self.probe is not None:
            self.probe(leaf)

    # -- public entry ----------------------------------------------------

    def encode_blocks(self, grid, depth):
        """grid: iterable of (origin, dense 64-cube) in raster order.
        Returns a list of BlockResult, one per occupied 64-block."""
        self._extent = 1 << depth
        self._truth = {}
        results = []
        for origin, dense in grid:
            origin = tuple(int(c) for c in origin)
            if dense.shape != (BLOCK64,) * 3:
                raise ShapeError(f"expected 64-cubes, got {dense.shape}")
            self._cur_origin = origin
            self._cur_dense = np.ascontiguousarray(dense.astype(np.uint8))
            result = BlockResult(origin=origin)
            self._partition(origin, BLOCK64, 1, result)
            results.append(result)
            self._truth[origin] = self._cur_dense
        return results


def pack_side_info(results):
    """Flag/mode bitstreams (2-bit fields, MSB-first) + payload list."""
    flag_writer = BitWriter()
    mode_writer = BitWriter()
    payloads = []
    for res in results:
        for f in res.flags:
            flag_writer.write_bits(f, 2)
        for m in res.modes:
            mode_writer.write_bits(m, 2)
        payloads.extend(res.payloads)
    flag_bytes, flag_bits = flag_writer.getvalue()
    mode_bytes, mode_bits = mode_writer.getvalue()
    return flag_bytes, flag_bits, mode_bytes, mode_bits, payloads


class CloudDecoder:
    """Flag-tree walk mirroring CloudEncoder, voxel-sequential."""

    def __init__(self, models, depth, max_level=MAX_LEVEL,
                 use_extension=False, single_model=False, probe=None):
        if not isinstance(models, ModelSet):
            models = ModelSet(models)
        if use_extension and single_model:
            raise ConfigError("context extension and single-model mode "
                              "are mutually exclusive")
        self.models = models
        self.depth = depth
        self.max_level = max_level
        self.use_extension = use_extension
        self.single_model = single_model
        self.probe = probe
        self._extent = 1 << depth
        self._decoded = {}
        self._cur_origin = None
        self._cur_dense = None
        self._predictors = {}

    def _predictor(self, size):
        if size not in self._predictors:
            self._predictors[size] = IncrementalPredictor(
                self.models.require(size))
        return self._predictors[size]

    def _leaf_plan(self, side, mode):
        """(model_size, ctx_side, embed) for a signaled leaf."""
        if self.single_model:
            self.models.require(BLOCK64)
            return BLOCK64, BLOCK64, side != BLOCK64
        if side == MIN_BLOCK:
            if self.use_extension and mode != 0:
                raise CorruptStreamError(
                    f"invalid extension mode {mode} for a 4-block")
            self.models.require(8)
            return 8, 8, True
        if not self.use_extension:
            self.models.require(side)
            return side, side, False
        sizes = EXTENSION_SIZES[side]
        if mode >= len(sizes):
            raise CorruptStreamError(
                f"extension mode {mode} out of range for side {side}")
        ctx = sizes[mode]
        self.models.require(ctx)
        return ctx, ctx, False

    def _decode_leaf(self, origin, side, mode, payload):
        model_size, ctx_side, embed = self._leaf_plan(side, mode)
        predictor = self._predictor(model_size)
        if embed:
            predictor.prime()
            base = (0, 0, 0)
        elif ctx_side == side:
            # degenerate extension (context side == block side): the
            # conditioning volume is the block alone, all zeros up front
            predictor.prime()
            base = (0, 0, 0)
        else:
            d_origin = tuple(c + side - ctx_side for c in origin)
            volume = np.zeros((ctx_side,) * 3, dtype=np.float32)

            def lookup(borig):
                if borig == self._cur_origin:
                    return self._cur_dense
                return self._decoded.get(borig)

            _fill_context(volume, d_origin, self._extent, lookup)
            off = ctx_side - side
            volume[off:, off:, off:] = 0.0
            predictor.prime(volume)
            base = (off, off, off)

        coder = BinaryArithmeticDecoder(payload)
        rel = tuple(o - c for o, c in zip(origin, self._cur_origin))
        probs = np.empty(side ** 3, dtype=np.float32) \
            if self.probe is not None else None
        i = 0
        for x in range(side):
            for y in range(side):
                for z in range(side):
                    vx, vy, vz = base[0] + x, base[1] + y, base[2] + z
                    p1 = predictor.p1(vx, vy, vz)
                    if probs is not None:
                        probs[i] = p1
                    i += 1
                    bit = coder.decode(p1)
                    if bit:
                        predictor.set_voxel(vx, vy, vz, 1)
                        self._cur_dense[rel[0] + x, rel[1] + y, rel[2] + z] = 1
        if self.probe is not None:
            self.probe(LeafRecord(origin=origin, side=side, mode=mode,
                                  model_size=model_size,
                                  context_size=ctx_side, payload=payload,
                                  p1=probs))

    def _walk(self, origin, side, level, flags, modes, payloads):
        flag = flags.read_bits(2)
        if flag == FLAG_EMPTY:
            return
        if flag == FLAG_SINGLE:
            mode = -1
            if self.use_extension:
                mode = modes.read_bits(2)
            try:
                payload = next(payloads)
            except StopIteration:
                raise CorruptStreamError("payload list exhausted")
            self._decode_leaf(origin, side, mode, payload)
            return
        if flag == FLAG_SPLIT:
            if level == self.max_level or side == MIN_BLOCK:
                raise CorruptStreamError(
                    f"split flag below the maximum partition level "
                    f"(side {side}, level {level})")
            half = side // 2
            for octant in range(8):
                child = (origin[0] + ((octant >> 2) & 1) * half,
                         origin[1] + ((octant >> 1) & 1) * half,
                         origin[2] + (octant & 1) * half)
                self._walk(child, half, level + 1, flags, modes, payloads)
            return
        raise CorruptStreamError(f"invalid partition flag {flag}")

    def decode_blocks(self, origins, flag_bytes, flag_bits, mode_bytes,
                      mode_bits, payloads):
        """origins: occupied 64-block origins (any order; sorted here).
        Returns dict origin -> dense 64-cube uint8."""
        order = sorted(tuple(int(c) for c in o) for o in origins)
        flags = BitReader(flag_bytes, bit_length=flag_bits, strict=True)
        modes = BitReader(mode_bytes, bit_length=mode_bits, strict=True)
        payload_iter = iter(payloads)
        self._decoded = {}
        for origin in order:
            self._cur_origin = origin
            self._cur_dense = np.zeros((BLOCK64,) * 3, dtype=np.uint8)
            self._walk(origin, BLOCK64, 1, flags, modes, payload_iter)
            self._decoded[origin] = self._cur_dense
        if flags.bits_consumed != flag_bits:
            raise CorruptStreamError(
                f"flag segment length mismatch: consumed "
                f"{flags.bits_consumed} of {flag_bits} bits")
        if modes.bits_consumed != mode_bits:
            raise CorruptStreamError(
                f"mode segment length mismatch: consumed "
                f"{modes.bits_consumed} of {mode_bits} bits")
        remaining = sum(1 for _ in payload_iter)
        if remaining:
            raise CorruptStreamError(f"{remaining} unconsumed payloads")
        return self._decoded
