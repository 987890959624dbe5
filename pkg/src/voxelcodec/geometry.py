"""Voxel-domain point-cloud types and operations.

Global raster convention used everywhere in this package: within a cube of
side d, voxel (x, y, z) has raster index x*d*d + y*d + z — x slowest,
z fastest. Dense occupancy arrays are indexed [x, y, z] in C order, so
`arr.ravel()` enumerates voxels in raster order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCloudError, ParameterError, ShapeError

BLOCK64 = 64


@dataclass(frozen=True)
class PointCloud:
    """Voxelized point cloud: unique integer coordinates on a 2^depth grid.

    coords is an (N, 3) int64 array in ascending raster order.
    """

    coords: np.ndarray
    depth: int

    def __post_init__(self):
        if self.coords.ndim != 2 or self.coords.shape[1] != 3:
            raise ShapeError("coords must be (N, 3)")

    @property
    def num_points(self):
        return self.coords.shape[0]


def make_point_cloud(coords, depth):
    """Canonicalize integer coordinates into a PointCloud (dedupe + sort)."""
    if not 1 <= depth <= 16:
        raise ParameterError(f"depth must be in 1..16, got {depth}")
    arr = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    if arr.size and (arr.min() < 0 or arr.max() >= (1 << depth)):
        raise ParameterError(f"coordinates outside [0, 2^{depth})")
    arr = np.unique(arr, axis=0)  # sorts lexicographically = raster order
    return PointCloud(coords=arr, depth=depth)


def voxelize(points, depth):
    """Quantize raw coordinates onto a 2^depth grid.

    Min-shifts to non-negative, scales uniformly so the largest axis extent
    maps to 2^depth - 1, rounds half-up, and deduplicates. All points equal
    (zero extent) collapse to the origin.
    """
    if not 1 <= depth <= 16:
        raise ParameterError(f"depth must be in 1..16, got {depth}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise EmptyCloudError("cannot voxelize an empty cloud")
    if not np.isfinite(pts).all():
        raise ParameterError("coordinates must be finite")
    lo = pts.min(axis=0)
    extent = float((pts.max(axis=0) - lo).max())
    if extent == 0.0:
        return make_point_cloud(np.zeros((1, 3), dtype=np.int64), depth)
    scale = ((1 << depth) - 1) / extent
    quant = np.floor((pts - lo) * scale + 0.5).astype(np.int64)
    return make_point_cloud(quant, depth)


def local_density(pc):
    """Average occupancy percentage over occupied 64-blocks.

    rho = (1/N_B) * sum_i 100 * |points in block i| / 64^3.
    """
    if pc.num_points == 0:
        raise EmptyCloudError("density undefined for an empty cloud")
    if pc.depth < 6:
        raise ParameterError("local density needs depth >= 6")
    origins = pc.coords >> 6
    _, counts = np.unique(origins, axis=0, return_counts=True)
    per_block = counts.astype(np.float64) * (100.0 / BLOCK64 ** 3)
    return float(per_block.mean())


def points_to_dense(points, side):
    """Pack (M, 3) integer block-local coordinates into a dense uint8 cube."""
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 3)
    if pts.size and (pts.min() < 0 or pts.max() >= side):
        raise ParameterError(f"block coordinates outside [0, {side})")
    dense = np.zeros((side, side, side), dtype=np.uint8)
    if pts.size:
        dense[pts[:, 0], pts[:, 1], pts[:, 2]] = 1
    return dense


def dense_to_points(dense):
    """Inverse of points_to_dense; rows come out in raster order."""
    idx = np.argwhere(dense != 0)
    return idx.astype(np.int64)


def split_blocks(pc, side):
    """Partition a cloud into occupied side^3 blocks.

    Returns a list of (origin (3,) int64, dense uint8 cube), origins in
    ascending raster order. Reassembling all blocks reproduces the cloud.
    """
    if side & (side - 1) or side < 1:
        raise ParameterError("side must be a power of two")
    if pc.num_points == 0:
        return []
    origins = (pc.coords // side) * side
    uniq, inverse = np.unique(origins, axis=0, return_inverse=True)
    out = []
    for i in range(uniq.shape[0]):
        local = pc.coords[inverse == i] - uniq[i]
        out.append((uniq[i], points_to_dense(local, side)))
    return out


_AXES = {"x": 0, "y": 1, "z": 2}


def _rotation_matrix(axis, degrees):
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)
    raise ParameterError(f"unknown axis {axis!r}")


def rotate_block_points(points, side, axis, degrees):
    """Rotate block-local points about the block center, re-voxelize.

    Rotated coordinates are rounded half-up; points leaving [0, side) are
    dropped. Output is deduplicated and raster-sorted.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    center = side / 2.0
    rot = (pts - center) @ _rotation_matrix(axis, degrees).T + center
    quant = np.floor(rot + 0.5).astype(np.int64)
    keep = ((quant >= 0) & (quant < side)).all(axis=1)
    return np.unique(quant[keep], axis=0)


def subsample_points(points, rate, rng):
    """Keep round(rate*N) points (at least 1), uniformly without replacement."""
    if not 0.0 < rate <= 1.0:
        raise ParameterError(f"sampling rate must be in (0, 1], got {rate}")
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 3)
    n = pts.shape[0]
    if n == 0 or rate == 1.0:
        return pts.copy()
    keep = max(1, int(np.floor(rate * n + 0.5)))
    idx = np.sort(rng.choice(n, size=keep, replace=False))
    return pts[idx]


def augment_block(points, side, angles=(45.0,), rates=(0.7, 0.4), seed=0):
    """Produce the rotation/subsampling variants of one training block.

    Emits, in order: for each rotation (identity first, then each angle
    about x, y, z), the unsampled set followed by one subsample per rate.
    Defaults give 4 * (1 + 2) = 12 variants. Deterministic for a fixed seed.
    """
    for r in rates:
        if not 0.0 < r <= 1.0:
            raise ParameterError(f"sampling rate must be in (0, 1], got {r}")
    base = np.unique(np.asarray(points, dtype=np.int64).reshape(-1, 3), axis=0)
    if base.size and (base.min() < 0 or base.max() >= side):
        raise ParameterError(f"block coordinates outside [0, {side})")
    rng = np.random.Generator(np.random.PCG64(seed))
    rotations = [base]
    for angle in angles:
        for axis in ("x", "y", "z"):
            rotations.append(rotate_block_points(base, side, axis, angle))
    variants = []
    for rot in rotations:
        variants.append(rot.copy())
        for rate in rates:
            variants.append(subsample_points(rot, rate, rng))
    return variants
