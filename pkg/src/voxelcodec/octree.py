"""Top-of-tree octree decomposition down to the 64-block level.

A depth-n cloud is split into occupied 64-voxel blocks; the octree above
those blocks (n-6 levels) is serialized breadth-first, one raw byte per
internal node, no compression. Octant index o = 4*bx + 2*by + bz from the
high-half bits of (x, y, z) in the current cube; bit o of a node's byte,
MSB first, marks child occupancy.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptStreamError, EmptyCloudError, UnsupportedDepthError
from .geometry import BLOCK64, split_blocks

_OCTANTS = np.array([(o >> 2 & 1, o >> 1 & 1, o & 1) for o in range(8)],
                    dtype=np.int64)


@dataclass(frozen=True)
class HighOctree:
    """Breadth-first occupancy bytes for levels 1..depth-6."""

    depth: int
    level_bytes: tuple

    @property
    def num_levels(self):
        return len(self.level_bytes)


@dataclass
class BlockGrid:
    """Occupied 64-blocks in ascending raster order of their origins."""

    origins: np.ndarray                 # (K, 3) int64, multiples of 64
    blocks: list                        # dense uint8 (64, 64, 64) cubes
    index: dict = field(default_factory=dict)  # origin tuple -> ordinal

    def __post_init__(self):
        if not self.index:
            self.index = {tuple(o): i for i, o in enumerate(self.origins)}

    def __len__(self):
        return len(self.blocks)


def _level_bytes_from_children(children):
    """Occupancy bytes of the parents of sorted child coordinates."""
    parents, inverse = np.unique(children >> 1, axis=0, return_inverse=True)
    low = children & 1
    octant = 4 * low[:, 0] + 2 * low[:, 1] + low[:, 2]
    out = np.zeros(parents.shape[0], dtype=np.uint8)
    np.bitwise_or.at(out, inverse, (0x80 >> octant).astype(np.uint8))
    return parents, out.tobytes()


def build_high_octree(pc):
    """Decompose a cloud into (HighOctree, BlockGrid).

    Requires depth >= 7 so there is at least one octree level above the
    64-blocks.
    """
    if pc.depth < 7:
        raise UnsupportedDepthError(
            f"octree split needs depth >= 7, got {pc.depth}")
    if pc.num_points == 0:
        raise EmptyCloudError("cannot build an octree over an empty cloud")
    levels = pc.depth - 6
    pieces = split_blocks(pc, BLOCK64)
    origins = np.array([o for o, _ in pieces], dtype=np.int64)
    grid = BlockGrid(origins=origins, blocks=[b for _, b in pieces])

    coords = origins >> 6  # node coordinates at the deepest octree level
    level_bytes = [b""] * levels
    for lv in range(levels - 1, -1, -1):
        coords, level_bytes[lv] = _level_bytes_from_children(coords)
    tree = HighOctree(depth=pc.depth, level_bytes=tuple(level_bytes))
    return tree, grid


def serialize_high_octree(tree):
    """Concatenate level bytes breadth-first (normative wire layout)."""
    return b"".join(tree.level_bytes)


def deserialize_high_octree(data, depth):
    """Parse serialized bytes back into a HighOctree.

    The segment must be consumed exactly; truncation, trailing bytes, or a
    zero occupancy byte all raise CorruptStreamError.
    """
    if depth < 7:
        raise UnsupportedDepthError(f"octree split needs depth >= 7, got {depth}")
    levels = depth - 6
    nodes = np.zeros((1, 3), dtype=np.int64)
    level_bytes = []
    offset = 0
    for _ in range(levels):
        k = nodes.shape[0]
        if offset + k > len(data):
            raise CorruptStreamError("truncated octree segment")
        chunk = data[offset:offset + k]
        offset += k
        byte_arr = np.frombuffer(chunk, dtype=np.uint8)
        if (byte_arr == 0).any():
            raise CorruptStreamError("octree byte with no children")
        level_bytes.append(chunk)
        bits = np.unpackbits(byte_arr).reshape(k, 8).astype(bool)
        expanded = (nodes[:, None, :] * 2 + _OCTANTS[None, :, :])[bits]
        # Wire order is raster (lexicographic) per level; expansion is
        # parent-major, so re-sort before consuming the next level.
        order = np.lexsort((expanded[:, 2], expanded[:, 1], expanded[:, 0]))
        nodes = expanded[order]
    if offset != len(data):
        raise CorruptStreamError("trailing bytes after octree segment")
    return HighOctree(depth=depth, level_bytes=tuple(level_bytes))


def octree_block_origins(tree):
    """64-block origins implied by the tree, ascending raster order."""
    nodes = np.zeros((1, 3), dtype=np.int64)
    for chunk in tree.level_bytes:
        byte_arr = np.frombuffer(chunk, dtype=np.uint8)
        bits = np.unpackbits(byte_arr).reshape(-1, 8).astype(bool)
        expanded = (nodes[:, None, :] * 2 + _OCTANTS[None, :, :])[bits]
        order = np.lexsort((expanded[:, 2], expanded[:, 1], expanded[:, 0]))
        nodes = expanded[order]
    return nodes << 6
