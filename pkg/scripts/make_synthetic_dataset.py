#!/usr/bin/env python3
"""Build a desk-scale synthetic dataset for training and evaluation.

Creates, under OUTDIR:

  blocks8/ blocks16/ blocks32/ blocks64/
      one PLY per training block (block-local integer coordinates), a
      mix of axis lines, axis-aligned planes, and sparse noise -- the
      layout `voxelcodec train` expects;
  clouds/
      voxelized point clouds (grid-integer coordinates) at depths 7 and
      8, ready for `voxelcodec encode` / `voxelcodec eval`;
  raw/desk_scan.ply
      a float-coordinate scanned-object stand-in (ring on a stem) for
      exercising `voxelcodec voxelize`.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from voxelcodec.ply_io import write_ply
from voxelcodec.synthetic import (
    cube_cloud,
    lines_cloud,
    noise_blocks_cloud,
    plane_block,
    sphere_cloud,
)

log = logging.getLogger("make_synthetic_dataset")


def line_block(side, rng, max_lines=3):
    dense = np.zeros((side, side, side), dtype=np.uint8)
    for _ in range(int(rng.integers(1, max_lines + 1))):
        x, y = rng.integers(0, side, 2)
        dense[x, y, :] = 1
    return dense


def noise_block(side, rng, density=0.01):
    flat = np.zeros(side ** 3, dtype=np.uint8)
    n = max(1, int(density * side ** 3))
    flat[rng.choice(side ** 3, n, replace=False)] = 1
    return flat.reshape((side,) * 3)


def block_mix(side, count, rng):
    """A third each of line, plane, and sparse-noise blocks."""
    blocks = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            blocks.append(line_block(side, rng))
        elif kind == 1:
            axis = int(rng.integers(0, 3))
            offset = int(rng.integers(0, side))
            blocks.append(plane_block(side, axis, offset))
        else:
            blocks.append(noise_block(side, rng))
    return blocks


def write_blocks(out_dir, blocks):
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, dense in enumerate(blocks):
        pts = np.argwhere(dense)
        write_ply(str(out_dir / f"block_{i:04d}.ply"), pts.astype(np.float64))


def scanned_object_points(seed):
    """Float-coordinate ring-on-a-stem object with capture jitter."""
    rng = np.random.default_rng(seed)
    n_ring, n_stem = 30000, 12000
    u = rng.uniform(0.0, 2.0 * np.pi, n_ring)
    v = rng.uniform(0.0, 2.0 * np.pi, n_ring)
    big, small = 0.35, 0.12
    ring = np.stack([(big + small * np.cos(v)) * np.cos(u),
                     (big + small * np.cos(v)) * np.sin(u),
                     small * np.sin(v) + 0.30], axis=1)
    theta = rng.uniform(0.0, 2.0 * np.pi, n_stem)
    height = rng.uniform(0.0, 0.18, n_stem)
    stem = np.stack([0.08 * np.cos(theta), 0.08 * np.sin(theta),
                     height], axis=1)
    pts = np.vstack([ring, stem])
    return pts + rng.normal(0.0, 0.002, pts.shape)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--blocks-per-size", type=int, default=None,
                        help="override the per-size training-block count")
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    out = Path(args.outdir)
    rng = np.random.default_rng(args.seed)

    counts = {8: 240, 16: 180, 32: 60, 64: 24}
    for side, count in counts.items():
        if args.blocks_per_size is not None:
            count = args.blocks_per_size
        write_blocks(out / f"blocks{side}", block_mix(side, count, rng))
        log.info("wrote %d side-%d training blocks", count, side)

    clouds_dir = out / "clouds"
    clouds_dir.mkdir(parents=True, exist_ok=True)
    clouds = {
        "lines_d7.ply": lines_cloud(7, 12, axis=2, seed=args.seed + 1),
        "noise_d7.ply": noise_blocks_cloud(7, 0.5, 3, seed=args.seed + 2),
        "sphere_d8.ply": sphere_cloud(8, radius=40.0),
        "cube_d7.ply": cube_cloud(7, (30, 40, 50), 20),
    }
    for name, pc in clouds.items():
        write_ply(str(clouds_dir / name), pc.coords.astype(np.float64))
        log.info("wrote cloud %s (%d voxels, depth %d)",
                 name, pc.num_points, pc.depth)

    raw_dir = out / "raw"
    raw_dir.mkdir(parents=True, exist_ok=True)
    write_ply(str(raw_dir / "desk_scan.ply"),
              scanned_object_points(args.seed + 3))
    log.info("wrote raw/desk_scan.ply (float coordinates; run "
             "`voxelcodec voxelize` on it)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
