"""Synthetic voxel data: shaped clouds and training-block corpora.

Desk-scale stand-ins for large capture datasets: axis-aligned planes,
spherical shells, solid cubes, uniform noise at controlled density, and
full-extent lines that deliberately continue across 64-block borders.
Everything is deterministic for a fixed seed.
"""

import numpy as np

from .errors import ParameterError
from .geometry import BLOCK64, PointCloud, make_point_cloud

_AXES = (0, 1, 2)


def plane_block(side, axis, offset, keep=1.0, rng=None):
    """Dense side^3 block with a 1-voxel axis-aligned plane.

    keep < 1 drops a random fraction of the plane's voxels (needs rng).
    """
    if axis not in _AXES:
        raise ParameterError(f"axis must be 0, 1, or 2, got {axis}")
    if not 0 <= offset < side:
        raise ParameterError(f"offset must be in [0, {side})")
    block = np.zeros((side, side, side), dtype=np.uint8)
    sl = [slice(None)] * 3
    sl[axis] = offset
    block[tuple(sl)] = 1
    if keep < 1.0:
        if rng is None:
            raise ParameterError("keep < 1 requires an rng")
        mask = rng.random((side, side)) < keep
        plane = block[tuple(sl)]
        block[tuple(sl)] = plane * mask.astype(np.uint8)
    return block


def plane_blocks(side, count, seed=0, keep=1.0):
    """Training corpus of random axis-aligned plane blocks."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        axis = int(rng.integers(0, 3))
        offset = int(rng.integers(0, side))
        out.append(plane_block(side, axis, offset, keep=keep, rng=rng))
    return out


def sphere_cloud(depth, center=None, radius=None, thickness=1.5):
    """Spherical shell: voxels whose distance to the center is within
    thickness/2 of the radius."""
    extent = 1 << depth
    if center is None:
        center = (extent / 2.0,) * 3
    if radius is None:
        radius = extent / 3.0
    rng_axes = np.arange(extent, dtype=np.float64)
    dx = (rng_axes - center[0])[:, None, None] ** 2
    dy = (rng_axes - center[1])[None, :, None] ** 2
    dz = (rng_axes - center[2])[None, None, :] ** 2
    dist = np.sqrt(dx + dy + dz)
    coords = np.argwhere(np.abs(dist - radius) <= thickness / 2.0)
    return make_point_cloud(coords, depth)


def cube_cloud(depth, origin, side):
    """Solid axis-aligned cube of occupied voxels."""
    extent = 1 << depth
    if side < 1 or any(c < 0 or c + side > extent for c in origin):
        raise ParameterError("cube does not fit in the grid")
    ax = [np.arange(o, o + side) for o in origin]
    grid = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, 3)
    return make_point_cloud(grid, depth)


def plane_cloud(depth, axis=0, offset=None):
    """Full-extent 1-voxel plane through the whole grid."""
    extent = 1 << depth
    if offset is None:
        offset = extent // 2
    other = [np.arange(extent)] * 2
    grid = np.stack(np.meshgrid(*other, indexing="ij"), axis=-1).reshape(-1, 2)
    coords = np.insert(grid, axis, offset, axis=1)
    return make_point_cloud(coords, depth)


def noise_blocks_cloud(depth, density_percent, num_blocks, seed=0):
    """Cloud of `num_blocks` random occupied 64-blocks, each filled with
    uniform noise at the given local density (percent of 64^3)."""
    if depth < 7:
        raise ParameterError("needs depth >= 7 for 64-blocks")
    if not 0.0 < density_percent <= 100.0:
        raise ParameterError("density must be in (0, 100] percent")
    rng = np.random.default_rng(seed)
    blocks_per_axis = 1 << (depth - 6)
    total_slots = blocks_per_axis ** 3
    num_blocks = min(num_blocks, total_slots)
    slots = rng.choice(total_slots, size=num_blocks, replace=False)
    per_block = max(1, int(round(density_percent / 100.0 * BLOCK64 ** 3)))
    chunks = []
    for slot in slots:
        bx = slot // (blocks_per_axis ** 2)
        by = (slot // blocks_per_axis) % blocks_per_axis
        bz = slot % blocks_per_axis
        vox = rng.choice(BLOCK64 ** 3, size=per_block, replace=False)
        local = np.stack([vox // (BLOCK64 ** 2),
                          (vox // BLOCK64) % BLOCK64,
                          vox % BLOCK64], axis=1)
        chunks.append(local + np.array([bx, by, bz]) * BLOCK64)
    return make_point_cloud(np.vstack(chunks), depth)


def lines_cloud(depth, num_lines, axis=0, seed=0):
    """Full-extent 1-voxel lines along `axis` at random cross-sections.

    Occupancy continues across every 64-block border along the axis,
    giving neighboring blocks strongly predictive context.
    """
    if axis not in _AXES:
        raise ParameterError(f"axis must be 0, 1, or 2, got {axis}")
    extent = 1 << depth
    rng = np.random.default_rng(seed)
    picks = rng.choice(extent * extent, size=num_lines, replace=False)
    a = picks // extent
    b = picks % extent
    run = np.arange(extent)
    coords = np.empty((num_lines * extent, 3), dtype=np.int64)
    other = [i for i in _AXES if i != axis]
    for i in range(num_lines):
        rows = slice(i * extent, (i + 1) * extent)
        coords[rows, axis] = run
        coords[rows, other[0]] = a[i]
        coords[rows, other[1]] = b[i]
    return make_point_cloud(coords, depth)
